#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegrob/core/manifest.hpp"

namespace eegrob {

/// Seed of the fold shuffle; reusing it reproduces the fold map exactly.
struct FoldSeed {
  std::uint64_t value = 0;
};

/// Subject-level k-fold partition. Subjects are sorted (and de-duplicated),
/// shuffled with a seeded Fisher-Yates pass, then dealt round-robin into folds
/// 0..k-1, so the result is independent of input order and fold sizes differ
/// by at most one.
FoldMap assign_folds(std::vector<std::string> subjects, int k, FoldSeed seed);

}  // namespace eegrob
