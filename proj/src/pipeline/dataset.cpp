#include "eegrob/pipeline/dataset.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "eegrob/core/error.hpp"
#include "eegrob/core/folds.hpp"
#include "eegrob/core/rng.hpp"
#include "eegrob/core/tensor_blob.hpp"
#include "eegrob/perturb/noise.hpp"
#include "eegrob/regions/regions.hpp"

using nlohmann::json;

namespace eegrob {

namespace {

// Where each class's rhythm is strongest: left and right motor strips,
// then occipital and frontal midline.
constexpr Point2 kClassFoci[] = {{-0.3, 0.0}, {0.3, 0.0}, {0.0, -0.45}, {0.0, 0.45}};
constexpr double kFocusWidth = 0.18;
constexpr double kRhythmHz = 10.0;
constexpr double kRhythmUv = 12.0;
constexpr double kBackgroundUv = 10.0;
constexpr double kMainsUv = 5.0;

}  // namespace

std::filesystem::path trial_blob_path(const std::filesystem::path& root, const std::string& trial_id) {
  return root / "trials" / (trial_id + ".eegt");
}

TrialTensor read_trial(const std::filesystem::path& root, const DatasetManifest& manifest, std::size_t index) {
  const auto& id = manifest.trials.at(index).id;
  const auto tensor = read_tensor_blob(trial_blob_path(root, id));
  if (tensor.shape.size() != 2 || tensor.shape[0] != manifest.montage.channel_names.size()) {
    throw ValidationError("trials/" + id + ".eegt",
                          fmt::format("expected {} channels x samples", manifest.montage.channel_names.size()));
  }
  return TrialTensor(tensor.to_matrix(), manifest.rate_hz, manifest.montage.channel_names);
}

void write_trial(const std::filesystem::path& root, const std::string& trial_id, const TrialTensor& trial) {
  write_tensor_blob(Tensor::from_matrix(trial.data()), trial_blob_path(root, trial_id));
}

void SyntheticConfig::validate() const {
  if (name.empty()) throw ValidationError("synthetic.name", "must not be empty");
  if (subjects < 2) throw ValidationError("synthetic.subjects", "need at least two subjects");
  if (trials_per_subject < 1) throw ValidationError("synthetic.trials_per_subject", "must be positive");
  if (classes < 2 || classes > 4) throw ValidationError("synthetic.classes", "must be in 2..4");
  if (!(raw_rate_hz >= 100.0) || !std::isfinite(raw_rate_hz)) throw ValidationError("synthetic.raw_rate_hz", "must be at least 100");
  if (!(seconds > 0.0) || !std::isfinite(seconds)) throw ValidationError("synthetic.seconds", "must be positive");
  if (folds < 2 || folds > subjects) throw ValidationError("synthetic.folds", "must be in 2..subjects");
}

json to_json(const SyntheticConfig& c) {
  return {{"name", c.name},     {"subjects", c.subjects},       {"trials_per_subject", c.trials_per_subject},
          {"classes", c.classes}, {"raw_rate_hz", c.raw_rate_hz}, {"seconds", c.seconds},
          {"folds", c.folds},   {"seed", c.seed}};
}

SyntheticConfig synthetic_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("synthetic", "expected an object");
  SyntheticConfig c;
  for (const auto& [key, v] : doc.items()) {
    const std::string name = "synthetic." + key;
    if (key == "name") {
      if (!v.is_string()) throw ValidationError(name, "expected a string");
      c.name = v.get<std::string>();
    } else if (key == "subjects" || key == "trials_per_subject" || key == "classes" || key == "folds") {
      if (!v.is_number_integer()) throw ValidationError(name, "expected an integer");
      (key == "subjects" ? c.subjects : key == "classes" ? c.classes : key == "folds" ? c.folds : c.trials_per_subject) =
          v.get<int>();
    } else if (key == "raw_rate_hz" || key == "seconds") {
      if (!v.is_number()) throw ValidationError(name, "expected a number");
      (key == "seconds" ? c.seconds : c.raw_rate_hz) = v.get<double>();
    } else if (key == "seed") {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ValidationError(name, "expected a non-negative integer");
      }
      c.seed = v.get<std::uint64_t>();
    } else {
      throw ValidationError(name, "unknown field");
    }
  }
  c.validate();
  return c;
}

TrialTensor synthetic_trial(const SyntheticConfig& config, std::size_t index, int label) {
  const auto& names = physionet64_channels();
  const auto positions = *standard_positions(names);
  const auto samples = static_cast<std::size_t>(std::llround(config.seconds * config.raw_rate_hz));
  std::vector<std::size_t> rows(names.size());
  for (std::size_t c = 0; c < rows.size(); ++c) rows[c] = c;
  Matrix data = gen_noise_rows(NoiseKind::pink, rows, samples, config.seed, rng::Purpose::synthetic, index);

  // Per-trial phase, offsets and gain jitter come from one extra stream.
  rng::CounterStream extra({config.seed, rng::Purpose::synthetic, index, static_cast<std::uint32_t>(names.size())});
  const double phase = 2.0 * std::numbers::pi * extra.uniform();
  const double gain = 0.75 + 0.5 * extra.uniform();
  const Point2 focus = kClassFoci[label];
  for (std::size_t c = 0; c < names.size(); ++c) {
    const double offset = 40.0 * (extra.uniform() - 0.5);
    const double dx = positions[c].x - focus.x, dy = positions[c].y - focus.y;
    const double weight = gain * std::exp(-(dx * dx + dy * dy) / (2.0 * kFocusWidth * kFocusWidth));
    auto row = data.row(c);
    double ss = 0.0;
    for (double v : row) ss += v * v;
    const double unit = ss > 0.0 ? std::sqrt(static_cast<double>(samples) / ss) : 0.0;
    for (std::size_t t = 0; t < samples; ++t) {
      const double s = static_cast<double>(t) / config.raw_rate_hz;
      row[t] = offset + kBackgroundUv * unit * row[t] +
               kRhythmUv * weight * std::sin(2.0 * std::numbers::pi * kRhythmHz * s + phase) +
               kMainsUv * std::sin(2.0 * std::numbers::pi * 50.0 * s);
    }
  }
  return TrialTensor(std::move(data), config.raw_rate_hz, names);
}

SyntheticDataset make_synthetic(const SyntheticConfig& config) {
  config.validate();
  SyntheticDataset out;
  auto& m = out.manifest;
  m.name = config.name;
  m.rate_hz = config.raw_rate_hz;
  m.montage.channel_names = physionet64_channels();
  m.montage.positions_2d = standard_positions(m.montage.channel_names);
  static const char* kClassNames[] = {"left", "right", "occipital", "frontal"};
  for (int k = 0; k < config.classes; ++k) m.classes.emplace_back(kClassNames[k]);
  std::vector<std::string> subjects;
  for (int s = 0; s < config.subjects; ++s) {
    subjects.push_back(fmt::format("S{:03d}", s + 1));
    for (int t = 0; t < config.trials_per_subject; ++t) {
      // Balanced labels within every subject.
      m.trials.push_back({fmt::format("S{:03d}_T{:02d}", s + 1, t), subjects.back(), t % config.classes});
    }
  }
  m.folds = assign_folds(subjects, config.folds, FoldSeed{config.seed});
  m.validate();
  out.trials.reserve(m.trials.size());
  for (std::size_t i = 0; i < m.trials.size(); ++i) out.trials.push_back(synthetic_trial(config, i, m.trials[i].label));
  return out;
}

DatasetManifest preprocessed_manifest(DatasetManifest raw, const dsp::FilterSpec& filter) {
  raw.rate_hz = filter.resample_to_hz;
  return raw;
}

}  // namespace eegrob
