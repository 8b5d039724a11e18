#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eegrob/core/trial.hpp"
#include "eegrob/dsp/filter_spec.hpp"
#include "eegrob/perturb/dropout.hpp"
#include "eegrob/regions/regions.hpp"

namespace eegrob {

enum class PerturbationKind { white_noise, pink_noise, random_dropout, region_dropout, region_noise };
std::string_view to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(std::string_view s);

/// One perturbation condition. Fields a kind does not use stay empty;
/// `task`, `snr_reference` and `scope` extend the base schema.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::white_noise;
  std::uint64_t seed = 0;
  std::optional<double> snr_db;
  std::optional<double> p;
  std::optional<DropoutMode> mode;
  std::optional<RegionSet> region_set;
  std::optional<std::string> task;
  std::optional<SnrReference> snr_reference;
  std::optional<MaskScope> scope;

  /// Required fields per kind, value ranges, and no stray fields.
  void validate() const;

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

/// Canonical form: only the fields that are set, keys sorted.
nlohmann::json to_json(const PerturbationSpec& spec);

/// Unknown keys and type mismatches name the field. `default_seed` fills a
/// missing `seed`; without it the seed is required.
PerturbationSpec perturbation_spec_from_json(const nlohmann::json& doc, const std::string& where = {},
                                             std::optional<std::uint64_t> default_seed = std::nullopt);

/// A single spec object or an array of them.
std::vector<PerturbationSpec> perturbation_specs_from_json(const nlohmann::json& doc,
                                                           std::optional<std::uint64_t> default_seed = std::nullopt);

/// Readable and collision-free: e.g. "white_noise_snr-3_9f2c01ab". The
/// suffix is FNV-1a over the canonical JSON.
std::string condition_id(const PerturbationSpec& spec);

inline constexpr std::string_view kCleanCondition = "clean";

/// Everything a perturbation needs besides the trial.
struct PerturbationContext {
  dsp::FilterSpec filter;
  std::string dataset;                // ChannelMask context
  std::optional<std::string> task;    // fallback when the spec names none
  const RegionTable* regions = nullptr;  // builtin table when null
};

/// The single numeric path shared by the CLI and the in-process bridge.
/// `trial_index` is the trial's position in the manifest.
TrialTensor apply_perturbation(const TrialTensor& trial, const PerturbationSpec& spec, std::uint64_t trial_index,
                               const PerturbationContext& context);

}  // namespace eegrob
