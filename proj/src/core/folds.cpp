#include "eegrob/core/folds.hpp"

#include <algorithm>

#include "eegrob/core/error.hpp"
#include "eegrob/core/rng.hpp"

namespace eegrob {

FoldMap assign_folds(std::vector<std::string> subjects, int k, FoldSeed seed) {
  if (k < 2) throw ValidationError("k", "need at least 2 folds, got " + std::to_string(k));
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  if (subjects.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("subjects", "cannot split " + std::to_string(subjects.size()) + " subjects into " +
                                          std::to_string(k) + " non-empty folds");
  }

  rng::CounterStream stream({seed.value, rng::Purpose::fold_shuffle, 0, 0});
  for (std::size_t i = subjects.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i + 1));
    std::swap(subjects[i], subjects[j]);
  }

  FoldMap folds;
  for (int f = 0; f < k; ++f) folds[f];
  for (std::size_t i = 0; i < subjects.size(); ++i) folds[static_cast<int>(i % k)].push_back(subjects[i]);
  for (auto& [f, members] : folds) std::sort(members.begin(), members.end());
  return folds;
}

}  // namespace eegrob
