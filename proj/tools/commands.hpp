#pragma once

namespace pcfuzz::cli {

// Parses the command line and runs one subcommand. Returns the process exit
// code: 0 on success, otherwise the error class (1 usage, 2 input,
// 3 capacity, 4 numeric).
int run(int argc, char** argv);

}  // namespace pcfuzz::cli
