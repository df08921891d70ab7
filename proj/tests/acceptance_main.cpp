// Acceptance suite: runs every criterion and prints one pass/fail line each.
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

#include "loopalg/verify.hpp"

int main(int argc, char** argv) {
  loopalg::AcceptanceOptions opt;
  if (const char* env = std::getenv("LOOPALG_SEED")) opt.seed = std::strtoull(env, nullptr, 10);
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--regen-golden") {
      opt.regen_golden = true;
    } else if (arg == "--seed" && i + 1 < argc) {
      opt.seed = std::strtoull(argv[++i], nullptr, 10);
    } else if (arg == "--criterion" && i + 1 < argc) {
      opt.only.push_back(std::atoi(argv[++i]));
    } else if (arg == "--golden-dir" && i + 1 < argc) {
      opt.golden_dir = argv[++i];
    } else {
      std::cerr << "usage: loopalg_acceptance [--seed S] [--criterion K]... "
                   "[--golden-dir DIR] [--regen-golden]\n";
      return 2;
    }
  }
  auto reports = loopalg::run_acceptance(opt);
  bool all = true;
  double total = 0;
  for (const auto& rep : reports) {
    std::cout << rep.to_string();
    all = all && rep.pass();
    total += rep.seconds;
  }
  std::cout << (all ? "ACCEPTANCE: all criteria passed" : "ACCEPTANCE: FAILURES present")
            << "  (total " << total << " s)\n";
  return all ? 0 : 1;
}
