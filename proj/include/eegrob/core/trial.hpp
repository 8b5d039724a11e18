#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegrob/core/matrix.hpp"

namespace eegrob {

/// One EEG trial: channels x samples in microvolts, with sampling rate and
/// electrode labels. Immutable once constructed; operations return new trials.
class TrialTensor {
 public:
  /// Throws ValidationError when a row/label count, finiteness, rate or
  /// label-uniqueness invariant does not hold.
  TrialTensor(Matrix data, double rate_hz, std::vector<std::string> channel_names);

  const Matrix& data() const noexcept { return data_; }
  double rate_hz() const noexcept { return rate_hz_; }
  const std::vector<std::string>& channel_names() const noexcept { return names_; }

  std::size_t channels() const noexcept { return data_.rows(); }
  std::size_t samples() const noexcept { return data_.cols(); }
  std::span<const double> channel(std::size_t c) const { return data_.row(c); }

  /// Same labels and rate, new payload (must have the same row count).
  TrialTensor with_data(Matrix data) const;

  friend bool operator==(const TrialTensor&, const TrialTensor&) = default;

 private:
  Matrix data_;
  double rate_hz_;
  std::vector<std::string> names_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Ordered electrode labels with optional unit-disc scalp positions.
struct Montage {
  std::vector<std::string> channel_names;
  std::optional<std::vector<Point2>> positions_2d;

  void validate() const;
  std::optional<std::size_t> index_of(const std::string& label) const;

  friend bool operator==(const Montage&, const Montage&) = default;
};

/// Throws ValidationError if labels repeat.
void require_unique_labels(std::span<const std::string> labels, const std::string& field);

}  // namespace eegrob
