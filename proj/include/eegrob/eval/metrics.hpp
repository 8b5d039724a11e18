#pragma once

#include <map>
#include <set>
#include <span>
#include <string>

namespace eegrob {

/// Mean recall over the classes that occur in `truth`. Classes with no
/// support are left out rather than scored as zero.
double balanced_accuracy(std::span<const int> truth, std::span<const int> pred, int n_classes);

/// Percentage points: 100 * (perturbed - clean).
inline double degradation(double clean, double perturbed) { return 100.0 * (perturbed - clean); }

struct FoldStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)

  friend bool operator==(const FoldStats&, const FoldStats&) = default;
};

/// Needs at least two folds.
FoldStats aggregate_folds(std::span<const double> per_fold);

/// Unweighted mean of the per-task means whose task is not excluded.
double average_across_tasks(const std::map<std::string, double>& per_task, const std::set<std::string>& exclude = {});

}  // namespace eegrob
