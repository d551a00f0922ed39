#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace turnover_spectra::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;    // I/O, parse, invalid arguments
inline constexpr int kExitNumeric = 2;  // numeric-validity refusal

// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace turnover_spectra::cli
