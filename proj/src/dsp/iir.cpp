#include "eegrob/dsp/iir.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "eegrob/core/error.hpp"

namespace eegrob::dsp {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::complex<double> section_response(const Biquad& s, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

double section_pole_radius(const Biquad& s) {
  const double disc = s.a1 * s.a1 - 4.0 * s.a2;
  if (disc < 0.0) return std::sqrt(s.a2);
  const double r = std::sqrt(disc);
  return std::max(std::abs((-s.a1 + r) / 2.0), std::abs((-s.a1 - r) / 2.0));
}

}  // namespace

SosCascade butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz) {
  if (order < 1 || order > 12) throw ValidationError("order", "Butterworth order must be in 1..12");
  const double nyquist = rate_hz / 2.0;
  if (!(low_hz > 0.0)) throw ValidationError("band_low_hz", "must be positive");
  if (!(low_hz < high_hz)) throw ValidationError("band_high_hz", "must exceed band_low_hz");
  if (!(high_hz < nyquist)) {
    throw ValidationError("band_high_hz", "cutoff " + std::to_string(high_hz) + " Hz is not below Nyquist " +
                                              std::to_string(nyquist) + " Hz");
  }

  // Analog prototype -> bandpass -> bilinear, with pre-warped edges.
  const double fs2 = 2.0 * rate_hz;
  const double wl = fs2 * std::tan(kPi * low_hz / rate_hz);
  const double wh = fs2 * std::tan(kPi * high_hz / rate_hz);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);

  std::vector<cplx> poles;
  for (int m = -order + 1; m < order; m += 2) {
    const cplx proto = -std::exp(cplx(0.0, kPi * m / (2.0 * order)));
    const cplx lp = proto * bw / 2.0;
    const cplx disc = std::sqrt(lp * lp - w0 * w0);
    for (const cplx& p : {lp + disc, lp - disc}) poles.push_back((fs2 + p) / (fs2 - p));
  }

  std::vector<cplx> upper;
  std::vector<double> real;
  for (const auto& p : poles) {
    if (std::abs(p.imag()) <= 1e-12 * std::abs(p)) {
      real.push_back(p.real());
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(real.begin(), real.end());
  std::sort(upper.begin(), upper.end(), [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });

  SosCascade sos;
  for (const auto& p : upper) sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    sos.push_back({1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  }

  // Every section gets unit gain at the digital centre frequency; the
  // Butterworth bandpass response there is exactly 1 with zero phase.
  const double center = 2.0 * std::atan(w0 / fs2);
  for (auto& s : sos) {
    const double g = 1.0 / std::abs(section_response(s, center));
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return sos;
}

Biquad iir_notch(double freq_hz, double quality, double rate_hz) {
  if (!(freq_hz > 0.0) || !(freq_hz < rate_hz / 2.0)) {
    throw ValidationError("notch_hz", "notch " + std::to_string(freq_hz) + " Hz must lie in (0, Nyquist " +
                                          std::to_string(rate_hz / 2.0) + " Hz)");
  }
  if (!(quality > 0.0)) throw ValidationError("quality", "must be positive");
  const double w0 = 2.0 * kPi * freq_hz / rate_hz;
  const double beta = std::tan(w0 / quality / 2.0);
  const double gain = 1.0 / (1.0 + beta);
  const double c = std::cos(w0);
  return {gain, -2.0 * gain * c, gain, -2.0 * gain * c, 2.0 * gain - 1.0};
}

std::vector<double> sosfilt(const SosCascade& sos, std::span<const double> x, std::span<const double> zi) {
  if (!zi.empty() && zi.size() != 2 * sos.size()) throw Error("sosfilt: zi must hold two values per section");
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    double z0 = zi.empty() ? 0.0 : zi[2 * s];
    double z1 = zi.empty() ? 0.0 : zi[2 * s + 1];
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + z0;
      z0 = q.b1 * in - q.a1 * out + z1;
      z1 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> sosfilt_zi(const SosCascade& sos) {
  std::vector<double> zi;
  zi.reserve(2 * sos.size());
  double scale = 1.0;
  for (const auto& q : sos) {
    const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    zi.push_back((dc - q.b0) * scale);
    zi.push_back((q.b2 - q.a2 * dc) * scale);
    scale *= dc;
  }
  return zi;
}

std::size_t settling_length(const SosCascade& sos) {
  double r = 0.0;
  for (const auto& q : sos) r = std::max(r, section_pole_radius(q));
  if (r >= 1.0) throw Error("filter is unstable (pole radius " + std::to_string(r) + ")");
  if (r == 0.0) return 2;
  return static_cast<std::size_t>(std::ceil(std::log(1e-3) / std::log(r))) + 2;
}

std::vector<double> sosfiltfilt(const SosCascade& sos, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(3 * settling_length(sos), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sosfilt_zi(sos);
  std::vector<double> state(zi.size());

  std::transform(zi.begin(), zi.end(), state.begin(), [&](double z) { return z * ext.front(); });
  auto forward = sosfilt(sos, ext, state);
  std::reverse(forward.begin(), forward.end());
  std::transform(zi.begin(), zi.end(), state.begin(), [&](double z) { return z * forward.front(); });
  auto backward = sosfilt(sos, forward, state);
  std::reverse(backward.begin(), backward.end());

  return {backward.begin() + static_cast<std::ptrdiff_t>(pad), backward.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace eegrob::dsp
