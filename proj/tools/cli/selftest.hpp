#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "covtest/seeding.hpp"

namespace covtest::cli {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Oracle equivalence of both statistics and Monte Carlo null moments at a
// reduced replication count.
std::vector<SelftestResult> run_selftest(Seed seed, int threads);

}  // namespace covtest::cli
