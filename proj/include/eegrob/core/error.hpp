#pragma once

#include <stdexcept>
#include <string>

namespace eegrob {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value failed validation. `field()` names the offending field or invariant
/// so CLI front-ends can report it verbatim.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class BlobErrc {
  io,
  bad_magic,
  bad_version,
  unknown_dtype,
  bad_ndim,
  truncated,
  size_mismatch,
};

const char* to_string(BlobErrc code) noexcept;

/// Tensor blob encode/decode failure; the code distinguishes truncation from
/// header corruption from shape disagreement.
class BlobError : public Error {
 public:
  BlobError(BlobErrc code, const std::string& message)
      : Error(std::string(to_string(code)) + ": " + message), code_(code) {}

  BlobErrc code() const noexcept { return code_; }

 private:
  BlobErrc code_;
};

}  // namespace eegrob
