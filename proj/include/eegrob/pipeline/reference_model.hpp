#pragma once

#include <string>
#include <vector>

#include "eegrob/core/manifest.hpp"
#include "eegrob/core/tensor_blob.hpp"
#include "eegrob/core/trial.hpp"

namespace eegrob {

/// Stand-in for a foundation model so every stage has something to consume:
/// a nearest-centroid classifier on standardized per-channel log power.
/// Channels missing from a trial (remove-mode dropout) are imputed with the
/// training mean.
class ReferenceModel {
 public:
  static constexpr const char* kName = "reference";

  /// Fits on the given trials (all must carry the training montage).
  ReferenceModel(const std::vector<const TrialTensor*>& trials, const std::vector<int>& labels, int n_classes);

  struct Output {
    int pred = 0;
    double confidence = 0.0;
    std::vector<double> probs;
  };
  Output predict(const TrialTensor& trial) const;

  /// Gradient x input of the predicted class score, channels x samples in
  /// the trial's own channel order.
  Matrix gradient_times_input(const TrialTensor& trial, int target_class) const;

  /// Token embeddings, tokens x dim, with one token per
  /// time window and one dimension per training channel. Block 0 holds
  /// window means, block 1 window log power, block 2 window log power of the
  /// 8-13 Hz band.
  static constexpr int kBlocks = 3;
  static constexpr int kTokens = 8;
  Matrix embed(const TrialTensor& trial, int block) const;

 private:
  std::vector<double> features(const TrialTensor& trial) const;
  std::vector<double> scores(const std::vector<double>& z) const;

  std::vector<std::string> channels_;
  std::vector<double> mean_;
  std::vector<double> inv_std_;
  std::vector<std::vector<double>> centroids_;  // standardized
};

}  // namespace eegrob
