#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hsnbench {

enum ExitCode : int {
  kOk = 0,
  kDiagnosticFailure = 1,
  kInvalidConfig = 2,
  kIoError = 3,
  kRuntimeError = 4,
};

/// Named preset of model and weights.
struct Profile {
  std::string name;
  long dim;
  double alpha;
  double beta;
  int theta_bound;
  unsigned long long n;
  unsigned long long replications;
};

const std::vector<Profile>& profiles();

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "HSN_OUTPUT_DIR";

/// Runs the tool. Summary lines go to `out`; errors go to `err` as one JSON document.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsnbench
