#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace genrank {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // first failure, empty when passed
};

/// Seeded cross-paradigm invariant suite: atomic/flat identity, greedy and
/// dense-equivalent beam correspondence, leaf-probability normalization,
/// gradient checks, BM25 brute-force agreement, tree validity.
std::vector<CheckResult> run_verification(std::uint64_t seed);

}  // namespace genrank
