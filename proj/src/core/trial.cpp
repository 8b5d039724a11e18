#include "eegrob/core/trial.hpp"

#include <cmath>
#include <set>

#include "eegrob/core/error.hpp"

namespace eegrob {

const char* to_string(BlobErrc code) noexcept {
  switch (code) {
    case BlobErrc::io: return "io error";
    case BlobErrc::bad_magic: return "bad magic";
    case BlobErrc::bad_version: return "unsupported version";
    case BlobErrc::unknown_dtype: return "unknown dtype";
    case BlobErrc::bad_ndim: return "bad ndim";
    case BlobErrc::truncated: return "truncated";
    case BlobErrc::size_mismatch: return "size mismatch";
  }
  return "blob error";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("matrix", "payload has " + std::to_string(values_.size()) + " values, shape needs " +
                                        std::to_string(rows_ * cols_));
  }
}

bool Matrix::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_unique_labels(std::span<const std::string> labels, const std::string& field) {
  std::set<std::string> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second) throw ValidationError(field, "duplicate channel label '" + label + "'");
  }
}

TrialTensor::TrialTensor(Matrix data, double rate_hz, std::vector<std::string> channel_names)
    : data_(std::move(data)), rate_hz_(rate_hz), names_(std::move(channel_names)) {
  if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
    throw ValidationError("rate_hz", "must be a positive finite number");
  }
  if (data_.rows() != names_.size()) {
    throw ValidationError("channel_names", std::to_string(names_.size()) + " labels for " +
                                               std::to_string(data_.rows()) + " data rows");
  }
  if (data_.cols() < 1) throw ValidationError("data", "trial needs at least one sample");
  if (!data_.all_finite()) throw ValidationError("data", "non-finite sample value");
  require_unique_labels(names_, "channel_names");
}

TrialTensor TrialTensor::with_data(Matrix data) const { return TrialTensor(std::move(data), rate_hz_, names_); }

void Montage::validate() const {
  require_unique_labels(channel_names, "channels");
  if (!positions_2d) return;
  if (positions_2d->size() != channel_names.size()) {
    throw ValidationError("positions_2d", "expected one position per channel");
  }
  for (std::size_t i = 0; i < positions_2d->size(); ++i) {
    const auto& p = (*positions_2d)[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x * p.x + p.y * p.y > 1.0 + 1e-12) {
      throw ValidationError("positions_2d[" + std::to_string(i) + "]",
                            "position of '" + channel_names[i] + "' lies outside the unit disc");
    }
  }
}

std::optional<std::size_t> Montage::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i) {
    if (channel_names[i] == label) return i;
  }
  return std::nullopt;
}

}  // namespace eegrob
