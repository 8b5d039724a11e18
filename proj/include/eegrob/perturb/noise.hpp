#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "eegrob/core/rng.hpp"
#include "eegrob/core/trial.hpp"
#include "eegrob/dsp/filter_spec.hpp"

namespace eegrob {

enum class NoiseKind { white, pink };

std::string_view to_string(NoiseKind kind);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::white;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  dsp::FilterSpec filter;
};

struct PowerStats {
  double signal_power = 0.0;
  double noise_power = 0.0;
};

/// Mean squared amplitude after removing each channel's temporal mean,
/// averaged over all channels and samples.
double signal_power(const TrialTensor& trial);
/// Same, restricted to the listed rows.
double signal_power(const Matrix& data, std::span<const std::size_t> rows);

/// P_s / 10^(snr/10). Throws for a non-finite SNR.
double target_noise_power(double signal_power, double snr_db);

/// channels x samples of raw noise. Row c is drawn from the stream
/// (seed, purpose, trial_index, c); white rows are i.i.d. N(0, 1), pink rows
/// are white rows reshaped to a 1/f power spectrum with the DC bin zeroed.
Matrix gen_noise(NoiseKind kind, std::size_t channels, std::size_t samples, std::uint64_t seed,
                 std::uint64_t trial_index = 0);

/// Rows for arbitrary channel ids, so that a subset of channels sees the same
/// noise it would in a full-trial draw.
Matrix gen_noise_rows(NoiseKind kind, std::span<const std::size_t> channel_ids, std::size_t samples,
                      std::uint64_t seed, rng::Purpose purpose, std::uint64_t trial_index);

/// generate -> filter -> per-channel zero mean / unit variance -> scale by
/// sqrt(P_n) -> add. The trial must already sit at spec.filter's rate.
TrialTensor add_noise(const TrialTensor& trial, const NoiseSpec& spec, std::uint64_t trial_index = 0,
                      PowerStats* stats = nullptr);

/// The same pipeline restricted to `rows`; P_s is `reference_power`. Other
/// rows are copied untouched.
TrialTensor add_noise_to_rows(const TrialTensor& trial, std::span<const std::size_t> rows, const NoiseSpec& spec,
                              rng::Purpose purpose, std::uint64_t trial_index, double reference_power,
                              PowerStats* stats = nullptr);

}  // namespace eegrob
