#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spike::cli {

/// Exit codes of run().
enum Exit : int { Ok = 0, CheckFailed = 1, BadConfig = 2 };

/// Entry point of spike-cli. Returns 0 iff every declared check passed, 1 on a failed check or a
/// numerical error, 2 on a usage or config validation error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spike::cli
