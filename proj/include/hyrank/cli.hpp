#pragma once

#include "hyrank/config.hpp"

namespace hyrank {

// Command implementations behind the `hyrank` binary. Each returns a
// process exit code: 0 success, 1 usage or parse failure, 2 numeric
// failure. run_cli parses argv (subcommands train | rank | evaluate |
// gradcheck) and maps thrown errors onto those codes.

int cmd_train(const RunConfig& cfg);
int cmd_rank(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_gradcheck(bool corrupt);

int run_cli(int argc, char** argv);

}  // namespace hyrank
