#pragma once

#include "eegrob/core/trial.hpp"
#include "eegrob/dsp/filter_spec.hpp"

namespace eegrob::dsp {

/// Output length round(T * target / rate). Rational ratios with denominator
/// <= 1000 use a polyphase Kaiser-windowed FIR with edge-replicated input and
/// per-phase unit DC gain; other ratios go through the FFT.
TrialTensor resample(const TrialTensor& trial, double target_hz);

/// Zero-phase Butterworth bandpass per channel.
TrialTensor bandpass(const TrialTensor& trial, const FilterSpec& spec);

/// Zero-phase second-order notch per channel.
TrialTensor notch(const TrialTensor& trial, double freq_hz, double quality = kDefaultNotchQuality);

/// Common average reference.
TrialTensor car(const TrialTensor& trial);

/// car -> resample -> bandpass -> notches.
TrialTensor preprocess(const TrialTensor& trial, const FilterSpec& spec);

/// Bandpass then notches on every row of `rows`, sampled at `rate_hz`.
/// Used to push synthesized noise through the same filters as clean data.
Matrix filter_rows(const Matrix& rows, double rate_hz, const FilterSpec& spec);

}  // namespace eegrob::dsp
