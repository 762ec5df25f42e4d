#pragma once

namespace qualpipe {

// Full command-line entry point (subcommands discover / score / assign /
// report / augment / run). Returns the process exit code:
//   0 success, 2 configuration, 3 evaluator, 4 data, 5 infeasible LP.
int run_cli(int argc, char** argv);

}  // namespace qualpipe
