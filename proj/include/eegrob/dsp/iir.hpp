#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace eegrob::dsp {

/// Second-order section, a0 normalised to 1:
/// H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

using SosCascade = std::vector<Biquad>;

/// Digital Butterworth bandpass of the given prototype order (2*order poles),
/// designed by bilinear transform with pre-warped band edges.
SosCascade butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz);

/// Second-order notch with -3 dB width freq/quality.
Biquad iir_notch(double freq_hz, double quality, double rate_hz);

/// Causal filtering, transposed direct form II. `zi` holds two state values
/// per section (may be empty for a zero initial state).
std::vector<double> sosfilt(const SosCascade& sos, std::span<const double> x, std::span<const double> zi = {});

/// Steady-state initial conditions for a unit step input.
std::vector<double> sosfilt_zi(const SosCascade& sos);

/// Samples until the slowest pole decays to 1e-3.
std::size_t settling_length(const SosCascade& sos);

/// Zero-phase forward-backward filtering with odd reflective padding of
/// 3 x settling_length (capped at len-1) and step-matched initial states.
std::vector<double> sosfiltfilt(const SosCascade& sos, std::span<const double> x);

}  // namespace eegrob::dsp
