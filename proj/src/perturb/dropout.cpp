#include "eegrob/perturb/dropout.hpp"

#include <algorithm>

#include "eegrob/core/error.hpp"
#include "eegrob/core/rng.hpp"

namespace eegrob {

std::string_view to_string(DropoutMode mode) { return mode == DropoutMode::zero_pad ? "zero_pad" : "remove"; }

DropoutMode dropout_mode_from_string(std::string_view s) {
  if (s == "zero_pad") return DropoutMode::zero_pad;
  if (s == "remove") return DropoutMode::remove;
  throw ValidationError("mode", "expected \"zero_pad\" or \"remove\", got \"" + std::string(s) + "\"");
}

std::string_view to_string(MaskScope scope) { return scope == MaskScope::per_dataset ? "per_dataset" : "per_trial"; }

MaskScope mask_scope_from_string(std::string_view s) {
  if (s == "per_dataset") return MaskScope::per_dataset;
  if (s == "per_trial") return MaskScope::per_trial;
  throw ValidationError("scope", "expected \"per_dataset\" or \"per_trial\", got \"" + std::string(s) + "\"");
}

ChannelMask random_mask(std::size_t n_channels, const DropoutSpec& spec, std::string dataset,
                        std::uint64_t trial_index) {
  if (n_channels < 1) throw ValidationError("channels", "need at least one channel");
  if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw ValidationError("p", "dropout probability must lie in [0, 1]");
  // Trial slot 0 is the shared per-dataset stream; per-trial masks use index + 1.
  const std::uint64_t slot = spec.scope == MaskScope::per_dataset ? 0 : trial_index + 1;
  ChannelMask mask{{}, std::move(dataset), spec.p, spec.seed};
  for (std::size_t c = 0; c < n_channels; ++c) {
    rng::CounterStream stream({spec.seed, rng::Purpose::dropout, slot, static_cast<std::uint32_t>(c)});
    if (stream.uniform() < spec.p) mask.dropped.push_back(c);
  }
  return mask;
}

TrialTensor apply_dropout(const TrialTensor& trial, const ChannelMask& mask, DropoutMode mode) {
  std::vector<bool> drop(trial.channels(), false);
  for (std::size_t c : mask.dropped) {
    if (c >= trial.channels()) {
      throw ValidationError("mask", "channel index " + std::to_string(c) + " out of range for " +
                                        std::to_string(trial.channels()) + " channels");
    }
    drop[c] = true;
  }
  if (mode == DropoutMode::zero_pad) {
    Matrix out = trial.data();
    for (std::size_t c = 0; c < drop.size(); ++c) {
      if (drop[c]) std::fill(out.row(c).begin(), out.row(c).end(), 0.0);
    }
    return trial.with_data(std::move(out));
  }
  const auto kept = static_cast<std::size_t>(std::count(drop.begin(), drop.end(), false));
  if (kept == 0) throw ValidationError("mask", "remove mode would leave no channels");
  Matrix out(kept, trial.samples());
  std::vector<std::string> names;
  names.reserve(kept);
  for (std::size_t c = 0, r = 0; c < drop.size(); ++c) {
    if (drop[c]) continue;
    std::copy(trial.channel(c).begin(), trial.channel(c).end(), out.row(r++).begin());
    names.push_back(trial.channel_names()[c]);
  }
  return TrialTensor(std::move(out), trial.rate_hz(), std::move(names));
}

}  // namespace eegrob
