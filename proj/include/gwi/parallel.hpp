#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace gwi {

/// Hardware concurrency, at least one.
unsigned default_thread_count();

/*
 * Runs body(i) for every i in [0, count) on up to `threads` workers.
 *
 * Work is handed out in fixed-size chunks. If bodies throw, the exception from
 * the lowest failing index is rethrown after all workers have joined, so the
 * reported error does not depend on scheduling.
 */
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Pairwise (binary tree) summation in index order. Bit-stable for a given input.
double pairwise_sum(std::span<const double> values);

}  // namespace gwi
