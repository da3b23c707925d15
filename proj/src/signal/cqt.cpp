#include "signal/cqt.h"

#include <algorithm>
#include <cmath>

namespace gsr {

CqtOp::CqtOp(CqtConfig cfg) : cfg_(cfg) {
  const int64_t nb = cfg_.n_bins();
  const double fmin = cfg_.fmin_hz();
  const double q = 1.0 / (std::pow(2.0, 1.0 / static_cast<double>(cfg_.bins_per_octave)) - 1.0);

  std::vector<int64_t> lens(static_cast<size_t>(nb));
  for (int64_t k = 0; k < nb; ++k) {
    const double fk = fmin * std::pow(2.0, static_cast<double>(k) /
                                               static_cast<double>(cfg_.bins_per_octave));
    GSR_CHECK(fk < kSampleRate / 2.0, "CQT bin " << k << " above Nyquist");
    int64_t l = static_cast<int64_t>(std::round(q * kSampleRate / fk));
    lens[static_cast<size_t>(k)] = std::max<int64_t>(4, std::min(l, cfg_.max_kernel));
  }
  kernel_len_ = *std::max_element(lens.begin(), lens.end());

  kern_re_ = Tensor({kernel_len_, nb});
  kern_im_ = Tensor({kernel_len_, nb});
  for (int64_t k = 0; k < nb; ++k) {
    const double fk = bin_frequency(k);
    const int64_t l = lens[static_cast<size_t>(k)];
    const int64_t off = (kernel_len_ - l) / 2;  // center within the common frame
    double wsum = 0.0;
    for (int64_t i = 0; i < l; ++i)
      wsum += 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                    static_cast<double>(l)));
    const double norm = 1.0 / std::max(wsum, 1e-12);
    for (int64_t i = 0; i < l; ++i) {
      const double w =
          0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(l)));
      const double ang = 2.0 * M_PI * fk * static_cast<double>(i - l / 2) / kSampleRate;
      kern_re_[(off + i) * nb + k] = w * std::cos(ang) * norm;
      kern_im_[(off + i) * nb + k] = -w * std::sin(ang) * norm;
    }
  }
}

double CqtOp::bin_frequency(int64_t k) const {
  return cfg_.fmin_hz() *
         std::pow(2.0, static_cast<double>(k) / static_cast<double>(cfg_.bins_per_octave));
}

SpecVar CqtOp::forward(const Var& wave) const {
  GSR_CHECK(wave.shape().size() == 2, "CqtOp expects (B, L)");
  const int64_t L = wave.dim(1);
  GSR_CHECK(L >= kernel_len_,
            "waveform length " << L << " shorter than longest CQT kernel " << kernel_len_);
  // frame t is centered at t*hop
  Var padded = pad_zero_last(wave, kernel_len_ / 2, kernel_len_ - kernel_len_ / 2);
  Var frames = frame_last(padded, kernel_len_, cfg_.hop);  // (B, T, K)
  return {matmul(frames, constant(kern_re_)), matmul(frames, constant(kern_im_))};
}

CqtGrid cqt(const Waveform& w, int64_t n_octaves, int64_t bins_per_octave) {
  w.validate();
  CqtConfig cfg;
  cfg.n_octaves = n_octaves;
  cfg.bins_per_octave = bins_per_octave;
  NoGradGuard ng;
  CqtOp op(cfg);
  GSR_CHECK(w.size() >= op.longest_kernel(),
            "waveform shorter than lowest-frequency CQT kernel");
  SpecVar s = op.forward(Var(Tensor({1, w.size()}, w.samples)));
  const int64_t T = s.re.dim(1), F = s.re.dim(2);
  return {s.re.val().reshaped({T, F}), s.im.val().reshaped({T, F})};
}

}  // namespace gsr
