#include "loopalg/proptest.hpp"

#include "doctest.h"

using namespace loopalg;

// Smoke runs of the randomized suites; the acceptance binary runs them at the
// full case counts.
TEST_CASE("property suites (small runs)") {
  for (const auto& suite : property_suite_names()) {
    int cases = suite == "oracle" ? 6 : 10;
    auto r = run_property_suite(suite, 12345, cases);
    INFO(suite, ": ", r.failures.empty() ? "" : r.failures.front());
    CHECK(r.ok());
    CHECK(r.checks > 0);
  }
}

TEST_CASE("unknown suite") { CHECK_THROWS(run_property_suite("bogus", 1, 1)); }
