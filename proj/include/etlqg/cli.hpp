#pragma once

#include <string>
#include <vector>

namespace etlqg {

// Runs the command-line front end on argv[1..] style arguments, e.g.
//   {"simulate", "--config", "configs/pendulum.cfg", "--seed", "1"}
// Returns the process exit code: 0 success, 2 config/usage error,
// 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

// main()-shaped wrapper around run_cli.
int cli_main(int argc, char** argv);

}  // namespace etlqg
