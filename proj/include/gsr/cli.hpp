#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsr::cli {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

// Subcommands: fit | gcv-scan | eval | simulate | stats | export-matrices.
// args excludes the program name. Diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace gsr::cli
