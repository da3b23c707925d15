#pragma once

#include "signal/stft.h"

namespace gsr {

// Direct complex filterbank constant-Q transform. One Hann-windowed complex
// exponential per bin, all bins sampled at a common hop. Kernel lengths are
// capped so short training segments stay analyzable; the cap widens the
// bandwidth of the lowest bins only.
struct CqtConfig {
  int64_t n_octaves = 8;
  int64_t bins_per_octave = 12;
  int64_t hop = 256;
  int64_t max_kernel = 4096;
  double f_min = 0.0;  // 0 -> (sr/2) / 2^n_octaves

  int64_t n_bins() const { return n_octaves * bins_per_octave; }
  double fmin_hz() const {
    return f_min > 0.0 ? f_min : (kSampleRate / 2.0) / std::pow(2.0, static_cast<double>(n_octaves));
  }
};

class CqtOp {
 public:
  explicit CqtOp(CqtConfig cfg);
  // wave (B, L) -> re/im (B, T, n_bins); requires L >= longest kernel
  SpecVar forward(const Var& wave) const;
  int64_t longest_kernel() const { return kernel_len_; }
  double bin_frequency(int64_t k) const;

 private:
  CqtConfig cfg_;
  int64_t kernel_len_ = 0;      // common frame length (longest kernel, capped)
  Tensor kern_re_, kern_im_;    // (kernel_len, n_bins)
};

// plain API; grid (T, n_bins) pair
struct CqtGrid {
  Tensor re, im;
};
CqtGrid cqt(const Waveform& w, int64_t n_octaves, int64_t bins_per_octave);

}  // namespace gsr
