#include "eegrob/eval/metrics.hpp"

#include <cmath>
#include <vector>

#include "eegrob/core/error.hpp"

namespace eegrob {

double balanced_accuracy(std::span<const int> truth, std::span<const int> pred, int n_classes) {
  if (truth.size() != pred.size()) {
    throw ValidationError("pred", "expected " + std::to_string(truth.size()) + " predictions, got " +
                                      std::to_string(pred.size()));
  }
  if (truth.empty()) throw ValidationError("truth", "no samples");
  if (n_classes < 1) throw ValidationError("n_classes", "must be positive");
  std::vector<long> support(static_cast<std::size_t>(n_classes)), hits(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (int v : {truth[i], pred[i]}) {
      if (v < 0 || v >= n_classes) {
        throw ValidationError("class", "class index " + std::to_string(v) + " outside [0, " +
                                           std::to_string(n_classes) + ")");
      }
    }
    const auto t = static_cast<std::size_t>(truth[i]);
    ++support[t];
    hits[t] += truth[i] == pred[i];
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] == 0) continue;
    sum += static_cast<double>(hits[k]) / static_cast<double>(support[k]);
    ++present;
  }
  return sum / present;
}

FoldStats aggregate_folds(std::span<const double> per_fold) {
  if (per_fold.size() < 2) throw ValidationError("folds", "standard deviation needs at least two folds");
  // Shifted by the first value so equal folds give exactly zero spread.
  const double shift = per_fold.front();
  double offset = 0.0;
  for (double v : per_fold) offset += v - shift;
  offset /= static_cast<double>(per_fold.size());
  double ss = 0.0;
  for (double v : per_fold) ss += (v - shift - offset) * (v - shift - offset);
  return {shift + offset, std::sqrt(ss / static_cast<double>(per_fold.size() - 1))};
}

double average_across_tasks(const std::map<std::string, double>& per_task, const std::set<std::string>& exclude) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [task, mean] : per_task) {
    if (exclude.count(task)) continue;
    sum += mean;
    ++n;
  }
  if (n == 0) throw ValidationError("tasks", "every task is excluded from the average");
  return sum / n;
}

}  // namespace eegrob
