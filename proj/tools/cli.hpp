#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gapdiamond::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kSolverError = 3,
    kUnguided = 4,
};

inline constexpr const char* kJobsEnv = "GAPDIAMOND_JOBS";
inline constexpr double kPitchWarnNm = 20.0;

// Runs the command line `args` (without the program name). Messages go to
// `out` and `err`; files are written where the options say.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gapdiamond::cli
