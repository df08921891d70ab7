#ifndef LOOPALG_VERIFY_HPP
#define LOOPALG_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace loopalg {

struct CheckLine {
  std::string label;
  bool pass = false;
  std::string detail;
};

struct CaseReport {
  std::string name;
  std::vector<CheckLine> lines;
  double seconds = 0.0;

  bool pass() const {
    for (const auto& l : lines)
      if (!l.pass) return false;
    return true;
  }
  void add(const std::string& label, bool ok, const std::string& detail = "");
  std::string to_string() const;
};

// Named end-to-end pipelines behind `verify-paper --case NAME`.
std::vector<std::string> verify_case_names();
CaseReport verify_case(const std::string& name, std::uint64_t seed);

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  std::string golden_dir;      // defaults to <data>/golden
  bool regen_golden = false;
  std::vector<int> only;       // run only these criterion ids when nonempty
};

// Runs the acceptance criteria (ids 1..11); one report per criterion.
std::vector<CaseReport> run_acceptance(const AcceptanceOptions& opt);

std::string default_golden_dir();

}  // namespace loopalg

#endif
