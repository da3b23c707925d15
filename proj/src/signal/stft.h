#pragma once

#include "core/ops.h"
#include "signal/waveform.h"

namespace gsr {

struct StftConfig {
  int64_t window_length = 400;
  int64_t hop = 100;
  int64_t fft_size = 400;
  bool centered = true;

  void validate() const {
    GSR_CHECK(window_length == fft_size, "window_length must equal fft_size");
    GSR_CHECK(hop > 0 && window_length % hop == 0, "hop must divide window_length");
  }
  int64_t bins() const { return fft_size / 2 + 1; }
  int64_t frames(int64_t length) const {
    if (centered) return length / hop + 1;
    return (length - window_length) / hop + 1;
  }
};

// Real/imag pair moving through the tape together.
struct SpecVar {
  Var re, im;  // (..., T, F)
};

// STFT/iSTFT as constant-matrix DFTs so gradients flow through matmul.
// Centered mode reflect-pads by fft_size/2 on both sides.
class StftOp {
 public:
  explicit StftOp(StftConfig cfg);

  const StftConfig& config() const { return cfg_; }

  // wave: (B, L) -> re/im (B, T, F)
  SpecVar forward(const Var& wave) const;
  // re/im (B, T, F) -> (B, out_len); window-sum-normalized overlap-add
  Var inverse(const SpecVar& spec, int64_t out_len) const;

  const Tensor& window() const { return window_; }

 private:
  StftConfig cfg_;
  Tensor window_;               // (win)
  Tensor dft_re_, dft_im_;      // (win, F)
  Tensor idft_re_, idft_im_;    // (F, win), hermitian-weighted, includes 1/N
};

// Plain-tensor spectrogram as exchanged outside the tape.
struct ComplexSpectrogram {
  Tensor re, im;  // (T, F)
  int64_t frame_shift = 0;
  int64_t window_length = 0;
  int64_t fft_size = 0;

  Tensor magnitude() const;
  Tensor phase() const;  // in (-pi, pi]
};

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg);
Waveform istft(const ComplexSpectrogram& s, const StftConfig& cfg, int64_t out_length);

// Elementwise power-law compression; exponent in (0, 1].
Tensor compress_magnitude(const Tensor& mag, double exponent);
Tensor decompress_magnitude(const Tensor& cmag, double exponent);
Var compress_magnitude(const Var& mag, double exponent);
Var decompress_magnitude(const Var& cmag, double exponent);

}  // namespace gsr
