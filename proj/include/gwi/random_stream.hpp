#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace gwi {

/// Philox4x32-10 block function. Maps a 128-bit counter under a 64-bit key
/// to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Reserved slot numbers. GW generation k uses slot k, so these sit at the top
/// of the 32-bit slot range.
inline constexpr std::uint32_t kDiffusionSlot = 0xFFFFFFF0u;
inline constexpr std::uint32_t kAuxiliarySlot = 0xFFFFFFF1u;

/*
 * Counter-based random stream.
 *
 * A stream is addressed by (master_seed, path, slot). The master seed is the
 * Philox key; the counter packs [block, slot, path_lo, path_hi]. Any stream can
 * be recreated in isolation, so results never depend on the order in which
 * streams are consumed or on which thread consumes them.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t master_seed, std::uint64_t path, std::uint32_t slot);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform01();

  /// Number of 64-bit words drawn so far.
  std::uint64_t position() const { return drawn_; }

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t path() const { return path_; }
  std::uint32_t slot() const { return slot_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint32_t slot_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 64-bit words left in buffer_
  std::uint64_t drawn_ = 0;
};

/// Standard normal draw built from the stream (Boost ziggurat).
double standard_normal(RandomStream& stream);

}  // namespace gwi
