#include "signal/mel.h"

#include <cmath>

namespace gsr {

namespace {
double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }
}  // namespace

Tensor mel_filterbank(int64_t n_mels, int64_t fft_size, double sample_rate) {
  const int64_t bins = fft_size / 2 + 1;
  GSR_CHECK(n_mels >= 1, "n_mels must be >= 1");
  GSR_CHECK(n_mels <= bins, "n_mels " << n_mels << " exceeds bin count " << bins);
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(static_cast<size_t>(n_mels) + 2);
  for (int64_t i = 0; i < n_mels + 2; ++i)
    centers[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                               static_cast<double>(n_mels + 1));
  Tensor fb({n_mels, bins});
  for (int64_t m = 0; m < n_mels; ++m) {
    const double f0 = centers[static_cast<size_t>(m)];
    const double f1 = centers[static_cast<size_t>(m) + 1];
    const double f2 = centers[static_cast<size_t>(m) + 2];
    for (int64_t k = 0; k < bins; ++k) {
      const double f = sample_rate / 2.0 * static_cast<double>(k) / static_cast<double>(bins - 1);
      double v = 0.0;
      if (f > f0 && f < f2)
        v = f <= f1 ? (f - f0) / std::max(f1 - f0, 1e-12)
                    : (f2 - f) / std::max(f2 - f1, 1e-12);
      fb[m * bins + k] = std::max(v, 0.0);
    }
    // keep every row non-degenerate even for very narrow triangles
    double rowsum = 0.0;
    for (int64_t k = 0; k < bins; ++k) rowsum += fb[m * bins + k];
    if (rowsum <= 0.0) {
      const int64_t k = std::min<int64_t>(
          bins - 1, static_cast<int64_t>(std::round(f1 / (sample_rate / 2.0) *
                                                    static_cast<double>(bins - 1))));
      fb[m * bins + k] = 1.0;
    }
  }
  return fb;
}

MelOp::MelOp(int64_t fft_size, int64_t hop, int64_t n_mels, double floor)
    : stft_(StftConfig{fft_size, hop, fft_size, true}), floor_(floor) {
  Tensor fb = mel_filterbank(n_mels, fft_size, kSampleRate);
  const int64_t bins = fft_size / 2 + 1;
  fb_ = Tensor({bins, n_mels});
  for (int64_t m = 0; m < n_mels; ++m)
    for (int64_t k = 0; k < bins; ++k) fb_[k * n_mels + m] = fb[m * bins + k];
}

Var MelOp::forward(const Var& wave) const {
  SpecVar s = stft_.forward(wave);
  Var mag = complex_abs(s.re, s.im);
  Var mel = matmul(mag, constant(fb_));
  return log_v(clamp_min(mel, floor_));
}

Tensor mel_spectrogram(const Waveform& w, int64_t fft_size, int64_t hop, int64_t n_mels) {
  GSR_CHECK(n_mels >= 1, "n_mels must be >= 1");
  GSR_CHECK(n_mels <= fft_size / 2 + 1, "n_mels exceeds fft bins");
  w.validate();
  NoGradGuard ng;
  MelOp op(fft_size, hop, n_mels);
  Var y = op.forward(Var(Tensor({1, w.size()}, w.samples)));
  return y.val().reshaped({y.dim(1), y.dim(2)});
}

}  // namespace gsr
