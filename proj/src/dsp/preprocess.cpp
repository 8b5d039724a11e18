#include "eegrob/dsp/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "eegrob/core/error.hpp"
#include "eegrob/dsp/fft.hpp"
#include "eegrob/dsp/iir.hpp"

namespace eegrob::dsp {

namespace {

constexpr std::int64_t kMaxRatioTerm = 1000;
constexpr double kKaiserBeta = 8.0;
constexpr int kHalfLengthPerFactor = 20;

struct Ratio {
  std::int64_t up;
  std::int64_t down;
};

// Continued-fraction search for up/down == ratio (to 1e-12 relative) with
// both terms <= kMaxRatioTerm.
std::optional<Ratio> rational_ratio(double ratio) {
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = ratio;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(x);
    if (a_real > 1e9) break;
    const auto a = static_cast<std::int64_t>(a_real);
    const std::int64_t h2 = a * h1 + h0;
    const std::int64_t k2 = a * k1 + k0;
    if (h2 > kMaxRatioTerm || k2 > kMaxRatioTerm) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - ratio) <= 1e-12 * ratio) {
      const std::int64_t g = std::gcd(h1, k1);
      return Ratio{h1 / g, k1 / g};
    }
    const double frac = x - a_real;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

class PolyphaseResampler {
 public:
  explicit PolyphaseResampler(Ratio r) : up_(r.up), down_(r.down) {
    const std::int64_t factor = std::max(up_, down_);
    half_ = kHalfLengthPerFactor * factor;
    const std::int64_t taps = 2 * half_ + 1;
    const double cutoff = 1.0 / static_cast<double>(factor);
    const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
    std::vector<double> h(static_cast<std::size_t>(taps));
    for (std::int64_t k = 0; k < taps; ++k) {
      const double pos = 2.0 * static_cast<double>(k) / static_cast<double>(taps - 1) - 1.0;
      const double window = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - pos * pos))) / i0_beta;
      h[static_cast<std::size_t>(k)] = cutoff * sinc(cutoff * static_cast<double>(k - half_)) * window;
    }
    phases_.resize(static_cast<std::size_t>(up_));
    for (std::int64_t phase = 0; phase < up_; ++phase) {
      auto& taps_for_phase = phases_[static_cast<std::size_t>(phase)];
      for (std::int64_t k = phase; k < taps; k += up_) taps_for_phase.push_back(h[static_cast<std::size_t>(k)]);
      const double sum = std::accumulate(taps_for_phase.begin(), taps_for_phase.end(), 0.0);
      for (double& v : taps_for_phase) v /= sum;
    }
  }

  std::vector<double> run(std::span<const double> x, std::size_t out_len) const {
    const auto last = static_cast<std::int64_t>(x.size()) - 1;
    std::vector<double> y(out_len);
    for (std::size_t n = 0; n < out_len; ++n) {
      const std::int64_t m = static_cast<std::int64_t>(n) * down_ + half_;
      const std::int64_t newest = m / up_;
      const auto& taps = phases_[static_cast<std::size_t>(m % up_)];
      double acc = 0.0;
      for (std::size_t j = 0; j < taps.size(); ++j) {
        const std::int64_t i = std::clamp<std::int64_t>(newest - static_cast<std::int64_t>(j), 0, last);
        acc += taps[j] * x[static_cast<std::size_t>(i)];
      }
      y[n] = acc;
    }
    return y;
  }

 private:
  std::int64_t up_;
  std::int64_t down_;
  std::int64_t half_ = 0;
  std::vector<std::vector<double>> phases_;
};

std::vector<double> fourier_resample(std::span<const double> x, std::size_t out_len) {
  const std::size_t n = x.size();
  const auto spectrum = rfft(x);
  std::vector<std::complex<double>> out(out_len / 2 + 1);
  const std::size_t keep = std::min(spectrum.size(), out.size());
  const double scale = static_cast<double>(out_len) / static_cast<double>(n);
  for (std::size_t k = 0; k < keep; ++k) out[k] = spectrum[k] * scale;
  // An even-length Nyquist bin is counted once by the inverse transform while
  // interior bins stand for a conjugate pair.
  if (out_len < n && out_len % 2 == 0) out[out_len / 2] = std::complex<double>(2.0 * out[out_len / 2].real(), 0.0);
  if (out_len > n && n % 2 == 0) out[n / 2] *= 0.5;
  return irfft(out, out_len);
}

Matrix map_rows(const Matrix& in, std::size_t out_cols, const auto& fn) {
  Matrix out(in.rows(), out_cols);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto y = fn(in.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

TrialTensor resample(const TrialTensor& trial, double target_hz) {
  if (!(target_hz > 0.0) || !std::isfinite(target_hz)) {
    throw ValidationError("resample_to_hz", "target rate must be positive");
  }
  if (target_hz == trial.rate_hz()) return trial;
  const double ratio = target_hz / trial.rate_hz();
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(trial.samples()) * ratio));
  if (out_len < 1) throw ValidationError("resample_to_hz", "target rate leaves no samples");

  Matrix data;
  if (auto r = rational_ratio(ratio)) {
    const PolyphaseResampler resampler(*r);
    data = map_rows(trial.data(), out_len, [&](std::span<const double> row) { return resampler.run(row, out_len); });
  } else {
    data = map_rows(trial.data(), out_len, [&](std::span<const double> row) { return fourier_resample(row, out_len); });
  }
  return TrialTensor(std::move(data), target_hz, trial.channel_names());
}

TrialTensor bandpass(const TrialTensor& trial, const FilterSpec& spec) {
  const auto sos = butterworth_bandpass(spec.order, spec.band_low_hz, spec.band_high_hz, trial.rate_hz());
  return trial.with_data(map_rows(trial.data(), trial.samples(),
                                  [&](std::span<const double> row) { return sosfiltfilt(sos, row); }));
}

TrialTensor notch(const TrialTensor& trial, double freq_hz, double quality) {
  const SosCascade sos{iir_notch(freq_hz, quality, trial.rate_hz())};
  return trial.with_data(map_rows(trial.data(), trial.samples(),
                                  [&](std::span<const double> row) { return sosfiltfilt(sos, row); }));
}

TrialTensor car(const TrialTensor& trial) {
  const auto& in = trial.data();
  Matrix out = in;
  const double inv = 1.0 / static_cast<double>(in.rows());
  for (std::size_t t = 0; t < in.cols(); ++t) {
    double mean = 0.0;
    for (std::size_t c = 0; c < in.rows(); ++c) mean += in(c, t);
    mean *= inv;
    for (std::size_t c = 0; c < in.rows(); ++c) out(c, t) = in(c, t) - mean;
  }
  return trial.with_data(std::move(out));
}

TrialTensor preprocess(const TrialTensor& trial, const FilterSpec& spec) {
  spec.validate();
  auto out = bandpass(resample(car(trial), spec.resample_to_hz), spec);
  for (double f : spec.notch_hz) out = notch(out, f);
  return out;
}

Matrix filter_rows(const Matrix& rows, double rate_hz, const FilterSpec& spec) {
  std::vector<SosCascade> stages;
  stages.push_back(butterworth_bandpass(spec.order, spec.band_low_hz, spec.band_high_hz, rate_hz));
  for (double f : spec.notch_hz) stages.push_back({iir_notch(f, kDefaultNotchQuality, rate_hz)});
  return map_rows(rows, rows.cols(), [&](std::span<const double> row) {
    std::vector<double> y(row.begin(), row.end());
    for (const auto& sos : stages) y = sosfiltfilt(sos, y);
    return y;
  });
}

}  // namespace eegrob::dsp
