#pragma once

#include <array>
#include <cstdint>

namespace eegrob::rng {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Purpose tags separate otherwise identical (seed, trial, channel) streams.
enum class Purpose : std::uint32_t {
  fold_shuffle = 1,
  white_noise = 2,
  pink_noise = 3,
  dropout = 4,
  region_noise = 5,
  synthetic = 6,
  probe_init = 7,
  probe_shuffle = 8,
  probe_split = 9,
};

struct StreamId {
  std::uint64_t seed = 0;
  Purpose purpose = Purpose::white_noise;
  std::uint64_t trial = 0;
  std::uint32_t channel = 0;
};

/// Sequential reader over one counter-based stream. Each (seed, purpose,
/// trial, channel) tuple addresses an independent stream, so the values a
/// consumer sees never depend on evaluation order.
class CounterStream {
 public:
  explicit CounterStream(const StreamId& id) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; both variates of each pair are used.
  double normal() noexcept;
  /// Uniform integer on [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace eegrob::rng
