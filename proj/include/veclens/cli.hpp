#pragma once

// Command-line front end. Batch commands:
//
//   sweep    run the (variant x vector_size) grid, write traces + reports
//   analyze  per-phase metric and weight tables from one trace file
//   compare  per-phase cycle ratios and metric deltas between two sweeps
//   regress  OLS fit of one summary.csv column on others
//   export   trace file to CSV
//
// Exit codes (stable contract): 0 success, 1 verification or data failure,
// 2 usage error. The sweep command accepts a flat `key = value` config file
// (`--config`, or the VECLENS_CONFIG environment variable); command-line
// flags override file values.

#include <iosfwd>
#include <string>
#include <vector>

namespace veclens {

// `args` excludes the program name. Output and error streams are injected so
// tests can run commands in-process.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace veclens
