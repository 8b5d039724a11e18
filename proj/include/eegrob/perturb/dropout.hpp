#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eegrob/core/trial.hpp"

namespace eegrob {

enum class DropoutMode { zero_pad, remove };

/// per_dataset draws one mask shared by every trial (the default);
/// per_trial keys the mask stream by trial index as well.
enum class MaskScope { per_dataset, per_trial };

std::string_view to_string(DropoutMode mode);
DropoutMode dropout_mode_from_string(std::string_view s);
std::string_view to_string(MaskScope scope);
MaskScope mask_scope_from_string(std::string_view s);

struct DropoutSpec {
  double p = 0.0;
  DropoutMode mode = DropoutMode::zero_pad;
  std::uint64_t seed = 0;
  MaskScope scope = MaskScope::per_dataset;
};

struct ChannelMask {
  std::vector<std::size_t> dropped;  // sorted ascending
  std::string dataset;
  double p = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ChannelMask&, const ChannelMask&) = default;
};

/// Channel c is dropped when the first uniform of stream (seed, dropout,
/// scope trial, c) falls below p, so masks for increasing p are nested.
ChannelMask random_mask(std::size_t n_channels, const DropoutSpec& spec, std::string dataset = {},
                        std::uint64_t trial_index = 0);

/// zero_pad zeroes the masked rows; remove deletes them and their labels.
TrialTensor apply_dropout(const TrialTensor& trial, const ChannelMask& mask, DropoutMode mode);

}  // namespace eegrob
