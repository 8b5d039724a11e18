#pragma once

#include <vector>

#include <json.hpp>

namespace eegrob::dsp {

inline constexpr double kDefaultNotchQuality = 30.0;

/// Preprocessing chain parameters: resample, Butterworth bandpass, notches.
struct FilterSpec {
  double band_low_hz = 0.5;
  double band_high_hz = 45.0;
  std::vector<double> notch_hz = {50.0, 60.0};
  int order = 4;
  double resample_to_hz = 200.0;

  /// band_low < band_high < resample_to/2, notches below resample_to/2.
  void validate() const;

  static FilterSpec default_chain() { return {}; }
  /// 0.1-96 Hz at 256 Hz with the same notches.
  static FilterSpec wideband_chain() { return {0.1, 96.0, {50.0, 60.0}, 4, 256.0}; }

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

nlohmann::json to_json(const FilterSpec& spec);
/// Missing keys keep their defaults; present keys are type-checked.
FilterSpec filter_spec_from_json(const nlohmann::json& doc);

}  // namespace eegrob::dsp
