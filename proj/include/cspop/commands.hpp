#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cspop::cli {

// Exit codes: 0 success, 2 parse/validation error, 3 LME synthesis failure,
// 4 solver failure, 5 bound-sandwich violation.
inline constexpr int kOk = 0;
inline constexpr int kParseError = 2;
inline constexpr int kLmeFailure = 3;
inline constexpr int kSolverFailure = 4;
inline constexpr int kSandwichViolation = 5;

// Full dispatcher: args exclude the program name. Tables go to `out`,
// messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cspop::cli
