#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace recoilfree::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNumericalFailure = 3,
  kPartialSweep = 4,
};

/// Parses "1..8", "3" or "1,4,9" into a seed list.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/// Entry point of the `recoilfree` tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace recoilfree::cli
