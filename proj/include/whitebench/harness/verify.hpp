#pragma once
// Self-checks of the structural claims, run against freshly generated data.

#include <cstdint>
#include <string>
#include <vector>

namespace wb {

enum class VerifySuite { orbit, compression, newton_equivalence, null_prediction, all };

VerifySuite parse_verify_suite(const std::string& s);
const char* to_string(VerifySuite s);

struct VerifyCheck {
  std::string suite;
  std::string name;
  bool pass = false;
  double value = 0.0;      // the measured deviation or statistic
  double threshold = 0.0;  // what it was held to
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool pass() const;
  /// Pretty-printed JSON object with "pass", "checks" and "failed".
  std::string to_json() const;
};

VerifyReport run_verify(VerifySuite suite, std::uint64_t seed = 2024);

}  // namespace wb
