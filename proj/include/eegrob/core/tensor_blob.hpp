#pragma once

// "EEGT" tensor blob: 4-byte magic, version byte (1), dtype byte
// (1 = float32, 2 = float64), ndim byte (1-4), one reserved zero byte,
// ndim little-endian u64 dimensions, then the row-major little-endian payload.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "eegrob/core/matrix.hpp"

namespace eegrob {

enum class Dtype : std::uint8_t { float32 = 1, float64 = 2 };

inline constexpr std::size_t kBlobFixedHeader = 8;
inline constexpr std::uint8_t kBlobVersion = 1;

/// N-d tensor held as doubles; `dtype` is the on-disk element encoding.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> values;
  Dtype dtype = Dtype::float64;

  std::size_t element_count() const;

  static Tensor from_matrix(const Matrix& m, Dtype dtype = Dtype::float64);
  /// Requires ndim == 2.
  Matrix to_matrix() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::byte> encode_tensor_blob(const Tensor& tensor);
Tensor decode_tensor_blob(std::span<const std::byte> bytes);

Tensor read_tensor_blob(const std::filesystem::path& path);
/// Atomic (temp file + rename).
void write_tensor_blob(const Tensor& tensor, const std::filesystem::path& path);

}  // namespace eegrob
