#pragma once

#include <iosfwd>

namespace sdelab {

// Entry point of the adaptive-sde-lab executable. Returns the process exit code:
// 0 on success, 1 on runtime/config errors, 2 on command-line errors.
int cliMain(int argc, char** argv);
int cliMain(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace sdelab
