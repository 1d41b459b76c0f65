#pragma once

namespace survborrow {

// Entry point behind the command-line tool; returns the process exit status
// (0 ok, 1 runtime failure, 2 usage error).
int cli_main(int argc, const char* const* argv);

}  // namespace survborrow
