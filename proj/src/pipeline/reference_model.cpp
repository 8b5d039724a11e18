#include "eegrob/pipeline/reference_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "eegrob/core/error.hpp"
#include "eegrob/dsp/iir.hpp"

namespace eegrob {

namespace {

constexpr double kPowerFloor = 1e-6;  // uV^2; keeps zeroed channels finite

double mean_square(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

}  // namespace

ReferenceModel::ReferenceModel(const std::vector<const TrialTensor*>& trials, const std::vector<int>& labels,
                               int n_classes) {
  if (trials.empty() || trials.size() != labels.size()) throw ValidationError("trials", "need labelled training trials");
  channels_ = trials.front()->channel_names();
  const std::size_t d = channels_.size();
  std::vector<std::vector<double>> feats;
  for (const auto* t : trials) {
    if (t->channel_names() != channels_) throw ValidationError("trials", "training trials must share one montage");
    std::vector<double> f(d);
    for (std::size_t c = 0; c < d; ++c) f[c] = std::log(mean_square(t->channel(c)) + kPowerFloor);
    feats.push_back(std::move(f));
  }
  mean_.assign(d, 0.0);
  inv_std_.assign(d, 0.0);
  for (const auto& f : feats) {
    for (std::size_t c = 0; c < d; ++c) mean_[c] += f[c] / static_cast<double>(feats.size());
  }
  for (const auto& f : feats) {
    for (std::size_t c = 0; c < d; ++c) inv_std_[c] += (f[c] - mean_[c]) * (f[c] - mean_[c]) / static_cast<double>(feats.size());
  }
  for (double& v : inv_std_) v = v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0;

  centroids_.assign(static_cast<std::size_t>(n_classes), std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    if (k >= counts.size()) throw ValidationError("labels", "label outside the class range");
    ++counts[k];
    for (std::size_t c = 0; c < d; ++c) centroids_[k][c] += (feats[i][c] - mean_[c]) * inv_std_[c];
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) throw ValidationError("labels", "class " + std::to_string(k) + " has no training trials");
    for (double& v : centroids_[k]) v /= static_cast<double>(counts[k]);
  }
}

std::vector<double> ReferenceModel::features(const TrialTensor& trial) const {
  std::map<std::string, std::size_t> rows;
  for (std::size_t c = 0; c < trial.channels(); ++c) rows[trial.channel_names()[c]] = c;
  std::vector<double> z(channels_.size(), 0.0);
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    if (auto it = rows.find(channels_[c]); it != rows.end()) {
      z[c] = (std::log(mean_square(trial.channel(it->second)) + kPowerFloor) - mean_[c]) * inv_std_[c];
    }
  }
  return z;
}

std::vector<double> ReferenceModel::scores(const std::vector<double>& z) const {
  std::vector<double> s;
  for (const auto& m : centroids_) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) d2 += (z[c] - m[c]) * (z[c] - m[c]);
    s.push_back(-0.5 * d2 / static_cast<double>(z.size()));
  }
  return s;
}

ReferenceModel::Output ReferenceModel::predict(const TrialTensor& trial) const {
  const auto s = scores(features(trial));
  const double peak = *std::max_element(s.begin(), s.end());
  Output out;
  double total = 0.0;
  for (double v : s) total += out.probs.emplace_back(std::exp(v - peak));
  for (double& p : out.probs) p /= total;
  out.pred = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  out.confidence = out.probs[static_cast<std::size_t>(out.pred)];
  return out;
}

Matrix ReferenceModel::gradient_times_input(const TrialTensor& trial, int target_class) const {
  const auto z = features(trial);
  const auto& m = centroids_.at(static_cast<std::size_t>(target_class));
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < channels_.size(); ++c) index[channels_[c]] = c;
  Matrix r(trial.channels(), trial.samples());
  const double scale = 1.0 / static_cast<double>(channels_.size());
  for (std::size_t row = 0; row < trial.channels(); ++row) {
    const auto it = index.find(trial.channel_names()[row]);
    if (it == index.end()) continue;
    const std::size_t c = it->second;
    const auto x = trial.channel(row);
    const double p = mean_square(x) + kPowerFloor;
    // d score / d x_t = -(z - m) / D * inv_std * 2 x_t / (T p)
    const double k = -scale * (z[c] - m[c]) * inv_std_[c] * 2.0 / (static_cast<double>(x.size()) * p);
    for (std::size_t t = 0; t < x.size(); ++t) r(row, t) = k * x[t] * x[t];
  }
  return r;
}

Matrix ReferenceModel::embed(const TrialTensor& trial, int block) const {
  if (block < 0 || block >= kBlocks) throw ValidationError("block", "outside 0.." + std::to_string(kBlocks - 1));
  std::map<std::string, std::size_t> rows;
  for (std::size_t c = 0; c < trial.channels(); ++c) rows[trial.channel_names()[c]] = c;
  const std::size_t window = trial.samples() / kTokens;
  if (window < 1) throw ValidationError("samples", "trial too short to embed");
  const dsp::SosCascade alpha = block == 2 ? dsp::butterworth_bandpass(4, 8.0, 13.0, trial.rate_hz()) : dsp::SosCascade{};
  Matrix out(kTokens, channels_.size());
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const auto it = rows.find(channels_[c]);
    if (it == rows.end()) continue;
    std::vector<double> x(trial.channel(it->second).begin(), trial.channel(it->second).end());
    if (block == 2) x = dsp::sosfiltfilt(alpha, x);
    for (int k = 0; k < kTokens; ++k) {
      const std::span<const double> w(x.data() + static_cast<std::size_t>(k) * window, window);
      if (block == 0) {
        double s = 0.0;
        for (double v : w) s += v;
        out(static_cast<std::size_t>(k), c) = s / static_cast<double>(window);
      } else {
        out(static_cast<std::size_t>(k), c) = std::log(mean_square(w) + kPowerFloor);
      }
    }
  }
  return out;
}

}  // namespace eegrob
