#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "core/check.h"

namespace gsr {

constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }

  void validate() const {
    GSR_CHECK(sample_rate == kSampleRate, "pipeline requires 16 kHz, got " << sample_rate);
    for (double s : samples) GSR_CHECK(std::isfinite(s), "non-finite sample in waveform");
  }

  double power() const {
    double p = 0.0;
    for (double s : samples) p += s * s;
    return samples.empty() ? 0.0 : p / static_cast<double>(samples.size());
  }

  double peak() const {
    double m = 0.0;
    for (double s : samples) m = std::max(m, std::fabs(s));
    return m;
  }
};

}  // namespace gsr
