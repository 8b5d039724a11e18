#include "eegrob/perturb/noise.hpp"

#include <cmath>
#include <string>

#include "eegrob/core/error.hpp"
#include "eegrob/dsp/fft.hpp"
#include "eegrob/dsp/preprocess.hpp"

namespace eegrob {

namespace {

double centred_sum_of_squares(std::span<const double> row) {
  double mean = 0.0;
  for (double v : row) mean += v;
  mean /= static_cast<double>(row.size());
  double ss = 0.0;
  for (double v : row) ss += (v - mean) * (v - mean);
  return ss;
}

// Shapes a white row in place to a 1/f power spectrum: bin k (k >= 1,
// Nyquist included) is scaled by 1/sqrt(k), DC is zeroed.
void make_pink(std::span<double> row) {
  auto bins = dsp::rfft(row);
  bins[0] = 0.0;
  for (std::size_t k = 1; k < bins.size(); ++k) bins[k] /= std::sqrt(static_cast<double>(k));
  const auto out = dsp::irfft(bins, row.size());
  std::copy(out.begin(), out.end(), row.begin());
}

rng::Purpose purpose_of(NoiseKind kind) {
  return kind == NoiseKind::white ? rng::Purpose::white_noise : rng::Purpose::pink_noise;
}

}  // namespace

std::string_view to_string(NoiseKind kind) { return kind == NoiseKind::white ? "white" : "pink"; }

double signal_power(const TrialTensor& trial) {
  double total = 0.0;
  for (std::size_t c = 0; c < trial.channels(); ++c) total += centred_sum_of_squares(trial.channel(c));
  return total / static_cast<double>(trial.data().size());
}

double signal_power(const Matrix& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error("signal_power: no rows selected");
  double total = 0.0;
  for (std::size_t r : rows) total += centred_sum_of_squares(data.row(r));
  return total / (static_cast<double>(rows.size()) * static_cast<double>(data.cols()));
}

double target_noise_power(double signal_power, double snr_db) {
  if (!std::isfinite(snr_db)) throw ValidationError("snr_db", "must be a finite number");
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

Matrix gen_noise_rows(NoiseKind kind, std::span<const std::size_t> channel_ids, std::size_t samples,
                      std::uint64_t seed, rng::Purpose purpose, std::uint64_t trial_index) {
  if (samples < 1) throw ValidationError("samples", "must be at least 1");
  Matrix out(channel_ids.size(), samples);
  for (std::size_t r = 0; r < channel_ids.size(); ++r) {
    rng::CounterStream stream({seed, purpose, trial_index, static_cast<std::uint32_t>(channel_ids[r])});
    auto row = out.row(r);
    for (double& v : row) v = stream.normal();
    if (kind == NoiseKind::pink) make_pink(row);
  }
  return out;
}

Matrix gen_noise(NoiseKind kind, std::size_t channels, std::size_t samples, std::uint64_t seed,
                 std::uint64_t trial_index) {
  if (channels < 1) throw ValidationError("channels", "must be at least 1");
  std::vector<std::size_t> ids(channels);
  for (std::size_t c = 0; c < channels; ++c) ids[c] = c;
  return gen_noise_rows(kind, ids, samples, seed, purpose_of(kind), trial_index);
}

TrialTensor add_noise_to_rows(const TrialTensor& trial, std::span<const std::size_t> rows, const NoiseSpec& spec,
                              rng::Purpose purpose, std::uint64_t trial_index, double reference_power,
                              PowerStats* stats) {
  if (rows.empty()) throw ValidationError("channels", "no channels selected for noise");
  for (std::size_t r : rows) {
    if (r >= trial.channels()) throw ValidationError("channels", "index " + std::to_string(r) + " out of range");
  }
  spec.filter.validate();
  if (trial.rate_hz() != spec.filter.resample_to_hz) {
    throw ValidationError("filter.resample_to_hz", "trial is sampled at " + std::to_string(trial.rate_hz()) +
                                                       " Hz but the noise filter expects " +
                                                       std::to_string(spec.filter.resample_to_hz) + " Hz");
  }
  const double noise_power = target_noise_power(reference_power, spec.snr_db);
  if (!(reference_power > 0.0)) {
    throw ValidationError("snr_db", "signal power is zero, so an SNR of " + std::to_string(spec.snr_db) +
                                        " dB is undefined");
  }

  const auto raw = gen_noise_rows(spec.kind, rows, trial.samples(), spec.seed, purpose, trial_index);
  const auto filtered = dsp::filter_rows(raw, trial.rate_hz(), spec.filter);

  Matrix out = trial.data();
  const double gain = std::sqrt(noise_power);
  const auto n = static_cast<double>(trial.samples());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto noise = filtered.row(i);
    double mean = 0.0;
    for (double v : noise) mean += v;
    mean /= n;
    const double var = centred_sum_of_squares(noise) / n;
    if (!(var > 0.0)) {
      throw Error("noise for channel " + trial.channel_names()[rows[i]] + " has zero variance after filtering");
    }
    const double scale = gain / std::sqrt(var);
    auto dst = out.row(rows[i]);
    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += scale * (noise[t] - mean);
  }
  if (stats) *stats = {reference_power, noise_power};
  return trial.with_data(std::move(out));
}

TrialTensor add_noise(const TrialTensor& trial, const NoiseSpec& spec, std::uint64_t trial_index, PowerStats* stats) {
  std::vector<std::size_t> rows(trial.channels());
  for (std::size_t c = 0; c < rows.size(); ++c) rows[c] = c;
  return add_noise_to_rows(trial, rows, spec, purpose_of(spec.kind), trial_index, signal_power(trial), stats);
}

}  // namespace eegrob
