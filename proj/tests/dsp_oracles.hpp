#pragma once

// Closed-form magnitude responses and a sine-fit gain probe, independent of
// the filter implementation under test.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace eegrob::oracle {

/// |H|^2 of a digital Butterworth bandpass designed by bilinear transform with
/// pre-warped edges, evaluated at f.
inline double butterworth_bandpass_power(int order, double lo, double hi, double rate, double f) {
  auto warp = [&](double x) { return 2.0 * rate * std::tan(std::numbers::pi * x / rate); };
  const double w = warp(f), wl = warp(lo), wh = warp(hi);
  const double w0sq = wl * wh;
  const double x = (w * w - w0sq) / (w * (wh - wl));
  return 1.0 / (1.0 + std::pow(x * x, order));
}

/// |H|^2 of the standard second-order notch at f.
inline double notch_power(double f0, double quality, double rate, double f) {
  const double w0 = 2.0 * std::numbers::pi * f0 / rate;
  const double w = 2.0 * std::numbers::pi * f / rate;
  const double beta = std::tan(w0 / quality / 2.0);
  const double d = std::pow(std::cos(w) - std::cos(w0), 2);
  const double s = std::pow(beta * std::sin(w), 2);
  return d + s == 0.0 ? 1.0 : d / (d + s);
}

/// Forward-backward filtering squares |H|, i.e. doubles its dB value.
inline double zero_phase_db(double power) { return 10.0 * std::log10(power) * 2.0; }

/// Least-squares amplitude of a sinusoid of frequency f (Hz) in y[from, to).
inline double fitted_amplitude(std::span<const double> y, double f, double rate, std::size_t from, std::size_t to) {
  double ss = 0, cc = 0, sc = 0, ys = 0, yc = 0;
  for (std::size_t t = from; t < to; ++t) {
    const double ph = 2.0 * std::numbers::pi * f * static_cast<double>(t) / rate;
    const double s = std::sin(ph), c = std::cos(ph);
    ss += s * s, cc += c * c, sc += s * c, ys += y[t] * s, yc += y[t] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return std::hypot(a, b);
}

inline std::vector<double> sine(std::size_t n, double f, double rate, double amplitude = 1.0, double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    v[t] = amplitude * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / rate + phase);
  }
  return v;
}

}  // namespace eegrob::oracle

namespace eegrob::oracle {

/// |X_k|^2 for k in [k_lo, k_hi] by the Goertzel recurrence (no FFT).
inline std::vector<double> periodogram_bins(std::span<const double> x, std::size_t k_lo, std::size_t k_hi) {
  const auto n = static_cast<double>(x.size());
  std::vector<double> out;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    const double coeff = 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / n);
    double s1 = 0.0, s2 = 0.0;
    for (double v : x) {
      const double s0 = v + coeff * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    out.push_back(s1 * s1 + s2 * s2 - coeff * s1 * s2);
  }
  return out;
}

/// Least-squares slope of log10 power against log10 frequency over
/// [f_lo, f_hi] Hz.
inline double periodogram_slope(std::span<const double> x, double rate, double f_lo, double f_hi) {
  const double df = rate / static_cast<double>(x.size());
  const auto k_lo = static_cast<std::size_t>(std::ceil(f_lo / df));
  const auto k_hi = static_cast<std::size_t>(std::floor(f_hi / df));
  const auto p = periodogram_bins(x, k_lo, k_hi);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto m = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lx = std::log10(static_cast<double>(k_lo + i) * df);
    const double ly = std::log10(p[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace eegrob::oracle
