#pragma once

#include <complex>
#include <vector>

#include "signal/waveform.h"

namespace gsr {

enum class FilterFamily { kButterworth, kChebyshev1 };

// One biquad: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

struct SosFilter {
  std::vector<Biquad> sections;

  std::vector<double> apply(const std::vector<double>& x) const;
  // |H(e^{j 2 pi f / fs})|
  double magnitude_at(double freq_hz, double sample_rate) const;
};

// Digital lowpass via bilinear transform of the analog prototype.
// Chebyshev-1 passband ripple in dB. Throws if any pole lands on or
// outside the unit circle.
SosFilter design_lowpass(FilterFamily family, int order, double cutoff_hz,
                         double sample_rate, double ripple_db = 1.0);

}  // namespace gsr
