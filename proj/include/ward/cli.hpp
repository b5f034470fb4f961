#pragma once

namespace ward::cli {

// Full command-line entry point; returns the process exit code.
// 0 success, 1 input/validation failure, 2 transport/server failure,
// 64 usage error.
int run(int argc, char** argv);

}  // namespace ward::cli
