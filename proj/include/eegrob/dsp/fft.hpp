#pragma once

#include <complex>
#include <span>
#include <vector>

namespace eegrob::dsp {

/// Real-input forward DFT; returns n/2+1 bins, unnormalised.
std::vector<std::complex<double>> rfft(std::span<const double> x);

/// Inverse of rfft for a length-n signal, scaled by 1/n.
std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n);

}  // namespace eegrob::dsp
