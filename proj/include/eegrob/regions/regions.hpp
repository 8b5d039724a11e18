#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eegrob/core/trial.hpp"
#include "eegrob/dsp/filter_spec.hpp"
#include "eegrob/perturb/dropout.hpp"
#include "eegrob/perturb/noise.hpp"

namespace eegrob {

struct RegionGroup {
  std::string name;
  std::string family;
  std::vector<std::string> electrodes;

  friend bool operator==(const RegionGroup&, const RegionGroup&) = default;
};

/// Primary/control entries name either a RegionGroup or a bipolar derivation
/// (a channel label such as "Fpz-Cz").
struct TaskRegionAssignment {
  std::string task;
  std::vector<std::string> primary;
  std::vector<std::string> control;

  friend bool operator==(const TaskRegionAssignment&, const TaskRegionAssignment&) = default;
};

struct RegionTable {
  int version = 0;
  std::vector<RegionGroup> groups;
  std::vector<std::string> derivations;
  std::vector<TaskRegionAssignment> tasks;

  /// Unique group names and labels, no electrode shared by two groups of a
  /// family, every assignment entry known, primary and control disjoint.
  void validate() const;
  const RegionGroup* find_group(std::string_view name) const;
  bool is_derivation(std::string_view name) const;
  /// Throws ValidationError listing the known tasks.
  const TaskRegionAssignment& task(std::string_view name) const;

  friend bool operator==(const RegionTable&, const RegionTable&) = default;
};

/// The versioned table compiled into the library.
const RegionTable& builtin_regions();

nlohmann::json to_json(const RegionTable& table);
RegionTable region_table_from_json(const nlohmann::json& doc);

enum class RegionSet { primary, control };
std::string_view to_string(RegionSet which);
RegionSet region_set_from_string(std::string_view s);

struct ResolvedRegion {
  std::vector<std::size_t> channels;  // ascending montage indices
  std::vector<std::string> skipped;   // listed electrodes absent from the montage
};

/// Union of the named groups intersected with `channel_names`. Unknown names
/// and an empty result are errors; absent electrodes are reported in skipped.
ResolvedRegion resolve_region(std::span<const std::string> channel_names, std::span<const std::string> group_names,
                              const RegionTable& table = builtin_regions());
ResolvedRegion resolve_region(const Montage& montage, std::span<const std::string> group_names,
                              const RegionTable& table = builtin_regions());

const std::vector<std::string>& region_names(const TaskRegionAssignment& assignment, RegionSet which);

TrialTensor region_dropout(const TrialTensor& trial, const TaskRegionAssignment& assignment, RegionSet which,
                           DropoutMode mode, const RegionTable& table = builtin_regions());

/// Which channels P_s is measured over for region noise.
enum class SnrReference { region, trial };
std::string_view to_string(SnrReference ref);
SnrReference snr_reference_from_string(std::string_view s);

struct RegionNoiseSpec {
  RegionSet which = RegionSet::primary;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  dsp::FilterSpec filter;
  SnrReference reference = SnrReference::region;
};

/// White noise on the resolved channels only; every other row is copied.
TrialTensor region_noise(const TrialTensor& trial, const TaskRegionAssignment& assignment,
                         const RegionNoiseSpec& spec, std::uint64_t trial_index = 0, PowerStats* stats = nullptr,
                         const RegionTable& table = builtin_regions());

/// Approximate unit-disc position of a 10-20/10-5 label (azimuthal
/// equidistant, nose towards +y, right hemisphere towards +x). Bipolar labels
/// "A-B" map to the midpoint. nullopt for labels outside the system.
std::optional<Point2> standard_position(std::string_view label);

/// standard_position for every label, or nullopt if any is unknown.
std::optional<std::vector<Point2>> standard_positions(std::span<const std::string> labels);

/// The 64-channel 10-10 layout shared by the PhysioNet motor and eyes tasks.
const std::vector<std::string>& physionet64_channels();

}  // namespace eegrob
