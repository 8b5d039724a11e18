#include "eegrob/core/tensor_blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "eegrob/core/error.hpp"
#include "eegrob/core/io.hpp"

namespace eegrob {

namespace {

constexpr std::array<char, 4> kMagic = {'E', 'E', 'G', 'T'};

template <typename U>
void put_le(std::vector<std::byte>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFFu));
  }
}

template <typename U>
U get_le(const std::byte* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  }
  return value;
}

std::size_t dtype_size(Dtype dtype) { return dtype == Dtype::float32 ? 4 : 8; }

std::size_t checked_count(const std::vector<std::uint64_t>& shape) {
  std::size_t count = 1;
  for (auto d : shape) {
    if (d != 0 && count > std::numeric_limits<std::size_t>::max() / d) {
      throw BlobError(BlobErrc::size_mismatch, "shape product overflows");
    }
    count *= static_cast<std::size_t>(d);
  }
  return count;
}

}  // namespace

std::size_t Tensor::element_count() const { return checked_count(shape); }

Tensor Tensor::from_matrix(const Matrix& m, Dtype dtype) {
  return Tensor{{m.rows(), m.cols()}, m.storage(), dtype};
}

Matrix Tensor::to_matrix() const {
  if (shape.size() != 2) {
    throw ValidationError("tensor", "expected a 2-d tensor, got ndim " + std::to_string(shape.size()));
  }
  return Matrix(shape[0], shape[1], values);
}

std::vector<std::byte> encode_tensor_blob(const Tensor& tensor) {
  if (tensor.shape.empty() || tensor.shape.size() > 4) {
    throw BlobError(BlobErrc::bad_ndim, "ndim must be 1-4, got " + std::to_string(tensor.shape.size()));
  }
  if (tensor.dtype != Dtype::float32 && tensor.dtype != Dtype::float64) {
    throw BlobError(BlobErrc::unknown_dtype, "dtype code " + std::to_string(static_cast<int>(tensor.dtype)));
  }
  const std::size_t count = tensor.element_count();
  if (count != tensor.values.size()) {
    throw BlobError(BlobErrc::size_mismatch, "shape declares " + std::to_string(count) + " elements, tensor holds " +
                                                 std::to_string(tensor.values.size()));
  }
  std::vector<std::byte> out;
  out.reserve(kBlobFixedHeader + 8 * tensor.shape.size() + count * dtype_size(tensor.dtype));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(kBlobVersion));
  out.push_back(static_cast<std::byte>(tensor.dtype));
  out.push_back(static_cast<std::byte>(tensor.shape.size()));
  out.push_back(std::byte{0});
  for (auto d : tensor.shape) put_le<std::uint64_t>(out, d);
  if (tensor.dtype == Dtype::float32) {
    for (double v : tensor.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  } else {
    for (double v : tensor.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Tensor decode_tensor_blob(std::span<const std::byte> bytes) {
  if (bytes.size() < kBlobFixedHeader) {
    throw BlobError(BlobErrc::truncated, "header needs 8 bytes, have " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw BlobError(BlobErrc::bad_magic, "missing EEGT magic");
  }
  const auto version = std::to_integer<std::uint8_t>(bytes[4]);
  if (version != kBlobVersion) throw BlobError(BlobErrc::bad_version, "version " + std::to_string(version));
  const auto code = std::to_integer<std::uint8_t>(bytes[5]);
  if (code != 1 && code != 2) throw BlobError(BlobErrc::unknown_dtype, "dtype code " + std::to_string(code));
  const auto ndim = std::to_integer<std::uint8_t>(bytes[6]);
  if (ndim < 1 || ndim > 4) throw BlobError(BlobErrc::bad_ndim, "ndim " + std::to_string(ndim));

  Tensor t;
  t.dtype = static_cast<Dtype>(code);
  const std::size_t dims_end = kBlobFixedHeader + 8u * ndim;
  if (bytes.size() < dims_end) throw BlobError(BlobErrc::truncated, "dimension block cut short");
  for (std::size_t i = 0; i < ndim; ++i) t.shape.push_back(get_le<std::uint64_t>(bytes.data() + kBlobFixedHeader + 8 * i));

  const std::size_t count = checked_count(t.shape);
  const std::size_t width = dtype_size(t.dtype);
  if (count > (std::numeric_limits<std::size_t>::max() - dims_end) / width) {
    throw BlobError(BlobErrc::size_mismatch, "declared payload too large");
  }
  const std::size_t expected = dims_end + count * width;
  if (bytes.size() < expected) {
    throw BlobError(BlobErrc::truncated, "shape declares " + std::to_string(count) + " elements but payload holds " +
                                             std::to_string((bytes.size() - dims_end) / width));
  }
  if (bytes.size() > expected) {
    throw BlobError(BlobErrc::size_mismatch, std::to_string(bytes.size() - expected) + " trailing bytes after payload");
  }
  t.values.resize(count);
  const std::byte* p = bytes.data() + dims_end;
  if (t.dtype == Dtype::float32) {
    for (std::size_t i = 0; i < count; ++i) t.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
  } else {
    for (std::size_t i = 0; i < count; ++i) t.values[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i));
  }
  return t;
}

Tensor read_tensor_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BlobError(BlobErrc::io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_tensor_blob(std::as_bytes(std::span(raw)));
  } catch (const BlobError& e) {
    throw BlobError(e.code(), path.string() + ": " + e.what());
  }
}

void write_tensor_blob(const Tensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_tensor_blob(tensor);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace eegrob
