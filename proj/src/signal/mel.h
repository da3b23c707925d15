#pragma once

#include "signal/stft.h"

namespace gsr {

// Triangular mel filterbank, rows (n_mels) x bins (fft/2+1), HTK mel scale.
Tensor mel_filterbank(int64_t n_mels, int64_t fft_size, double sample_rate);

// log-mel magnitude spectrogram with a fixed floor before the log.
class MelOp {
 public:
  MelOp(int64_t fft_size, int64_t hop, int64_t n_mels, double floor = 1e-5);
  // wave (B, L) -> (B, T, n_mels)
  Var forward(const Var& wave) const;
  const Tensor& filterbank() const { return fb_; }

 private:
  StftOp stft_;
  Tensor fb_;  // (bins, n_mels), transposed for matmul
  double floor_;
};

// plain API per the signal front-end contract
Tensor mel_spectrogram(const Waveform& w, int64_t fft_size, int64_t hop, int64_t n_mels);

}  // namespace gsr
