#ifndef LOOPALG_PROPTEST_HPP
#define LOOPALG_PROPTEST_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace loopalg {

struct SuiteResult {
  std::string suite;
  int cases_run = 0;
  int checks = 0;
  std::vector<std::string> failures;  // each carries a reproduction hint
  bool ok() const { return failures.empty(); }
};

// Suites: "brackets", "varcalc", "pushforward", "oracle", "numeric".
std::vector<std::string> property_suite_names();
SuiteResult run_property_suite(const std::string& suite, std::uint64_t seed, int cases);

}  // namespace loopalg

#endif
