#include "signal/stft.h"

#include <cmath>

namespace gsr {

namespace {

Tensor periodic_hann(int64_t n) {
  Tensor w({n});
  for (int64_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

}  // namespace

StftOp::StftOp(StftConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int64_t n = cfg_.fft_size;
  const int64_t f = cfg_.bins();
  window_ = periodic_hann(cfg_.window_length);
  dft_re_ = Tensor({n, f});
  dft_im_ = Tensor({n, f});
  idft_re_ = Tensor({f, n});
  idft_im_ = Tensor({f, n});
  for (int64_t k = 0; k < f; ++k) {
    const double herm = (k == 0 || k == n / 2) ? 1.0 : 2.0;
    for (int64_t i = 0; i < n; ++i) {
      const double ang = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(i) /
                         static_cast<double>(n);
      dft_re_[i * f + k] = std::cos(ang);
      dft_im_[i * f + k] = -std::sin(ang);
      idft_re_[k * n + i] = herm * std::cos(ang) / static_cast<double>(n);
      idft_im_[k * n + i] = -herm * std::sin(ang) / static_cast<double>(n);
    }
  }
}

SpecVar StftOp::forward(const Var& wave) const {
  GSR_CHECK(wave.shape().size() == 2, "StftOp expects (B, L)");
  const int64_t L = wave.dim(1);
  GSR_CHECK(L > 0, "empty waveform");
  GSR_CHECK(wave.val().all_finite(), "non-finite values in waveform");
  Var x = wave;
  if (cfg_.centered) {
    const int64_t p = cfg_.fft_size / 2;
    GSR_CHECK(L >= 2, "waveform too short for centered framing");
    x = pad_reflect_last(x, p, p);
  } else {
    GSR_CHECK(L >= cfg_.window_length, "waveform shorter than analysis window");
  }
  Var frames = frame_last(x, cfg_.window_length, cfg_.hop);  // (B, T, win)
  Var windowed = mul(frames, constant(window_));
  return {matmul(windowed, constant(dft_re_)), matmul(windowed, constant(dft_im_))};
}

Var StftOp::inverse(const SpecVar& spec, int64_t out_len) const {
  const Shape& s = spec.re.shape();
  GSR_CHECK(s.size() == 3, "StftOp::inverse expects (B, T, F)");
  GSR_CHECK(spec.im.shape() == s, "re/im shape mismatch");
  GSR_CHECK(s[2] == cfg_.bins(),
            "spectrogram has " << s[2] << " bins, config wants " << cfg_.bins());
  const int64_t T = s[1];

  Var frames = add(matmul(spec.re, constant(idft_re_)), matmul(spec.im, constant(idft_im_)));
  Var windowed = mul(frames, constant(window_));
  const int64_t full = (T - 1) * cfg_.hop + cfg_.window_length;
  Var ola = overlap_add_last(windowed, cfg_.hop, full);

  // window-sum normalization
  Tensor env({full}, 0.0);
  for (int64_t t = 0; t < T; ++t)
    for (int64_t i = 0; i < cfg_.window_length; ++i)
      env[t * cfg_.hop + i] += window_[i] * window_[i];
  Tensor inv_env({full});
  for (int64_t i = 0; i < full; ++i) inv_env[i] = env[i] > 1e-11 ? 1.0 / env[i] : 0.0;
  Var norm = mul(ola, constant(inv_env));

  const int64_t start = cfg_.centered ? cfg_.fft_size / 2 : 0;
  const int64_t avail = full - start;
  if (out_len <= avail) return slice(norm, -1, start, out_len);
  Var y = slice(norm, -1, start, avail);
  return pad_zero_last(y, 0, out_len - avail);
}

Tensor ComplexSpectrogram::magnitude() const {
  Tensor m(re.shape());
  for (int64_t i = 0; i < re.size(); ++i)
    m[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
  return m;
}

Tensor ComplexSpectrogram::phase() const {
  Tensor p(re.shape());
  for (int64_t i = 0; i < re.size(); ++i) p[i] = std::atan2(im[i], re[i]);
  return p;
}

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  GSR_CHECK(!w.samples.empty(), "stft of empty waveform");
  w.validate();
  NoGradGuard ng;
  StftOp op(cfg);
  Var wave(Tensor({1, w.size()}, w.samples));
  SpecVar s = op.forward(wave);
  const int64_t T = s.re.dim(1), F = s.re.dim(2);
  ComplexSpectrogram out;
  out.re = s.re.val().reshaped({T, F});
  out.im = s.im.val().reshaped({T, F});
  out.frame_shift = cfg.hop;
  out.window_length = cfg.window_length;
  out.fft_size = cfg.fft_size;
  return out;
}

Waveform istft(const ComplexSpectrogram& s, const StftConfig& cfg, int64_t out_length) {
  cfg.validate();
  GSR_CHECK(s.fft_size == 0 || s.fft_size == cfg.fft_size,
            "spectrogram fft_size " << s.fft_size << " mismatches config " << cfg.fft_size);
  GSR_CHECK(s.frame_shift == 0 || s.frame_shift == cfg.hop,
            "spectrogram hop " << s.frame_shift << " mismatches config " << cfg.hop);
  GSR_CHECK(s.re.shape().size() == 2 && s.re.same_shape(s.im), "bad spectrogram tensors");
  GSR_CHECK(s.re.dim(1) == cfg.bins(), "bin count mismatch");
  NoGradGuard ng;
  StftOp op(cfg);
  const int64_t T = s.re.dim(0), F = s.re.dim(1);
  SpecVar sv{Var(s.re.reshaped({1, T, F})), Var(s.im.reshaped({1, T, F}))};
  Var y = op.inverse(sv, out_length);
  Waveform out;
  out.samples.assign(y.val().data(), y.val().data() + out_length);
  return out;
}

Tensor compress_magnitude(const Tensor& mag, double exponent) {
  GSR_CHECK(exponent > 0.0 && exponent <= 1.0, "exponent must be in (0, 1]");
  Tensor out(mag.shape());
  for (int64_t i = 0; i < mag.size(); ++i) {
    GSR_CHECK(mag[i] >= 0.0, "negative magnitude");
    out[i] = std::pow(mag[i], exponent);
  }
  return out;
}

Tensor decompress_magnitude(const Tensor& cmag, double exponent) {
  GSR_CHECK(exponent > 0.0 && exponent <= 1.0, "exponent must be in (0, 1]");
  Tensor out(cmag.shape());
  for (int64_t i = 0; i < cmag.size(); ++i) {
    GSR_CHECK(cmag[i] >= 0.0, "negative magnitude");
    out[i] = std::pow(cmag[i], 1.0 / exponent);
  }
  return out;
}

Var compress_magnitude(const Var& mag, double exponent) {
  GSR_CHECK(exponent > 0.0 && exponent <= 1.0, "exponent must be in (0, 1]");
  return pow_scalar(mag, exponent);
}

Var decompress_magnitude(const Var& cmag, double exponent) {
  GSR_CHECK(exponent > 0.0 && exponent <= 1.0, "exponent must be in (0, 1]");
  return pow_scalar(cmag, 1.0 / exponent);
}

}  // namespace gsr
