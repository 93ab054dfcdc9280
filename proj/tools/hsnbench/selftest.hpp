#pragma once

#include <string>
#include <vector>

namespace hsnbench {

struct InvariantResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Quick randomized invariant suites over the core library.
std::vector<InvariantResult> run_invariant_suites(unsigned long long seed);

}  // namespace hsnbench
