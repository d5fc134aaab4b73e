#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gwi {

/*
 * Command-line entry point: `gwi <simulate|moments|sde|converge|report> [flags]`.
 * args excludes the program name. Returns 0 on success (for converge and
 * report: iff every gated test passed), 1 when gated tests fail, 2 on usage
 * or validation errors.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gwi
