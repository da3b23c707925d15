#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "core/random.h"
#include "io/wav.h"
#include "signal/cqt.h"
#include "signal/mel.h"
#include "signal/stft.h"

using namespace gsr;

namespace {

Waveform random_wave(uint64_t seed, int64_t n, double amp = 0.5) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  for (auto& s : w.samples) s = rng.uniform(-amp, amp);
  return w;
}

Waveform sine_wave(double freq, int64_t n, double amp = 0.8) {
  Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    w.samples[static_cast<size_t>(i)] =
        amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / kSampleRate);
  return w;
}

}  // namespace

TEST_CASE("stft frame count and bins for 24000 samples") {
  StftConfig cfg;
  Waveform w = random_wave(1, 24000);
  ComplexSpectrogram s = stft(w, cfg);
  CHECK(s.re.shape() == Shape{241, 201});  // floor(L/hop)+1, fft/2+1
  CHECK(cfg.frames(24000) == 241);
  CHECK(cfg.bins() == 201);
}

TEST_CASE("stft of zeros is zero; errors on empty and NaN") {
  StftConfig cfg;
  Waveform z;
  z.samples.assign(4000, 0.0);
  ComplexSpectrogram s = stft(z, cfg);
  for (int64_t i = 0; i < s.re.size(); ++i) {
    CHECK(s.re[i] == 0.0);
    CHECK(s.im[i] == 0.0);
  }
  Waveform empty;
  CHECK_THROWS(stft(empty, cfg));
  Waveform bad;
  bad.samples = {0.0, std::nan("")};
  CHECK_THROWS(stft(bad, cfg));
}

TEST_CASE("stft of 2 kHz sinusoid peaks at bin 50 in every frame") {
  // non-centered framing: every frame sees the pure windowed sinusoid
  StftConfig cfg;
  cfg.centered = false;
  Waveform w = sine_wave(2000.0, 8000);
  ComplexSpectrogram s = stft(w, cfg);
  Tensor mag = s.magnitude();
  const int64_t T = mag.dim(0), F = mag.dim(1);
  for (int64_t t = 0; t < T; ++t) {
    int64_t best = 0;
    for (int64_t k = 1; k < F; ++k)
      if (mag[t * F + k] > mag[t * F + best]) best = k;
    CHECK(best == 50);
  }
  // centered framing: interior frames (edges see reflected signal)
  StftConfig ccfg;
  ComplexSpectrogram sc = stft(w, ccfg);
  Tensor magc = sc.magnitude();
  const int64_t Tc = magc.dim(0);
  for (int64_t t = 2; t < Tc - 2; ++t) {
    int64_t best = 0;
    for (int64_t k = 1; k < F; ++k)
      if (magc[t * F + k] > magc[t * F + best]) best = k;
    CHECK(best == 50);
  }
}

TEST_CASE("stft linearity") {
  StftConfig cfg;
  Waveform w1 = random_wave(2, 4000), w2 = random_wave(3, 4000);
  const double a = 0.7, b = -1.3;
  Waveform mix;
  mix.samples.resize(4000);
  for (size_t i = 0; i < 4000; ++i) mix.samples[i] = a * w1.samples[i] + b * w2.samples[i];
  ComplexSpectrogram s1 = stft(w1, cfg), s2 = stft(w2, cfg), sm = stft(mix, cfg);
  for (int64_t i = 0; i < sm.re.size(); ++i) {
    CHECK(sm.re[i] == doctest::Approx(a * s1.re[i] + b * s2.re[i]).epsilon(1e-9).scale(1.0));
    CHECK(sm.im[i] == doctest::Approx(a * s1.im[i] + b * s2.im[i]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("Parseval consistency within 1 percent") {
  StftConfig cfg;
  Waveform w = random_wave(4, 48000);
  ComplexSpectrogram s = stft(w, cfg);
  const int64_t N = cfg.fft_size, F = cfg.bins();
  StftOp op(cfg);
  double ew = 0.0;
  for (int64_t i = 0; i < N; ++i) ew += op.window()[i] * op.window()[i];
  double espec = 0.0;
  for (int64_t t = 0; t < s.re.dim(0); ++t)
    for (int64_t k = 0; k < F; ++k) {
      const double herm = (k == 0 || k == N / 2) ? 1.0 : 2.0;
      const int64_t i = t * F + k;
      espec += herm * (s.re[i] * s.re[i] + s.im[i] * s.im[i]);
    }
  const double esig_from_spec = espec * static_cast<double>(cfg.hop) / (ew * static_cast<double>(N));
  double esig = 0.0;
  for (double v : w.samples) esig += v * v;
  CHECK(std::fabs(esig_from_spec - esig) / esig < 0.01);
}

TEST_CASE("istft round trip below 1e-6") {
  StftConfig cfg;
  for (int64_t len : {24000L, 7000L, 4321L}) {
    Waveform w = random_wave(10 + static_cast<uint64_t>(len), len);
    ComplexSpectrogram s = stft(w, cfg);
    Waveform r = istft(s, cfg, len);
    REQUIRE(r.size() == len);
    double worst = 0.0;
    for (int64_t i = 0; i < len; ++i)
      worst = std::max(worst, std::fabs(r.samples[static_cast<size_t>(i)] -
                                        w.samples[static_cast<size_t>(i)]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("istft of zeros, truncation prefix, and geometry error") {
  StftConfig cfg;
  Waveform w = random_wave(5, 6000);
  ComplexSpectrogram s = stft(w, cfg);

  ComplexSpectrogram z = s;
  z.re.fill(0.0);
  z.im.fill(0.0);
  Waveform zr = istft(z, cfg, 6000);
  for (double v : zr.samples) CHECK(v == 0.0);

  Waveform full = istft(s, cfg, 6000);
  Waveform part = istft(s, cfg, 3000);
  for (int64_t i = 0; i < 3000; ++i)
    CHECK(part.samples[static_cast<size_t>(i)] == full.samples[static_cast<size_t>(i)]);

  StftConfig other;
  other.window_length = 512;
  other.fft_size = 512;
  other.hop = 128;
  CHECK_THROWS(istft(s, other, 6000));
}

TEST_CASE("compress/decompress magnitude contracts") {
  Tensor ones({3}, 1.0);
  Tensor c = compress_magnitude(ones, 0.3);
  for (int64_t i = 0; i < 3; ++i) CHECK(c[i] == 1.0);
  Tensor zeros({3});
  CHECK(compress_magnitude(zeros, 0.3)[0] == 0.0);

  // inverse pair on a [0, 10] grid
  Tensor grid({101});
  for (int64_t i = 0; i <= 100; ++i) grid[i] = 0.1 * static_cast<double>(i);
  Tensor back = decompress_magnitude(compress_magnitude(grid, 0.3), 0.3);
  for (int64_t i = 0; i <= 100; ++i) {
    if (grid[i] == 0.0)
      CHECK(back[i] == 0.0);
    else
      CHECK(std::fabs(back[i] - grid[i]) / grid[i] < 1e-9);
  }

  Tensor neg({1}, -1.0);
  CHECK_THROWS(compress_magnitude(neg, 0.3));
  CHECK_THROWS(compress_magnitude(ones, 1.5));
}

TEST_CASE("mel spectrogram floor, finiteness, and filterbank oracle") {
  Waveform z;
  z.samples.assign(4000, 0.0);
  Tensor m = mel_spectrogram(z, 400, 100, 40);
  for (int64_t i = 0; i < m.size(); ++i)
    CHECK(m[i] == doctest::Approx(std::log(1e-5)).epsilon(1e-12));

  Waveform noise = random_wave(6, 4000);
  Tensor mn = mel_spectrogram(noise, 400, 100, 40);
  CHECK(mn.all_finite());

  // filterbank on an all-ones spectrum equals per-row sums
  Tensor fb = mel_filterbank(40, 400, kSampleRate);
  const int64_t bins = 201;
  for (int64_t r = 0; r < 40; ++r) {
    double want = 0.0, got = 0.0;
    for (int64_t k = 0; k < bins; ++k) {
      want += fb[r * bins + k];
      got += fb[r * bins + k] * 1.0;
    }
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(want > 0.0);  // every row sums positive
  }

  CHECK_THROWS(mel_spectrogram(noise, 400, 100, 202));
}

TEST_CASE("cqt row count, zero input, and short-input error") {
  Waveform w = random_wave(7, 16000);
  CqtGrid g = cqt(w, 8, 12);
  CHECK(g.re.dim(1) == 96);

  Waveform z;
  z.samples.assign(16000, 0.0);
  CqtGrid gz = cqt(z, 8, 12);
  for (int64_t i = 0; i < gz.re.size(); ++i) {
    CHECK(gz.re[i] == 0.0);
    CHECK(gz.im[i] == 0.0);
  }

  Waveform tiny;
  tiny.samples.assign(512, 0.1);
  CHECK_THROWS(cqt(tiny, 8, 12));
}

TEST_CASE("cqt sinusoid at bin center peaks at that bin") {
  CqtConfig cfg;
  CqtOp op(cfg);
  const int64_t target = 60;  // 31.25 * 2^5 = 1000 Hz
  CHECK(op.bin_frequency(target) == doctest::Approx(1000.0).epsilon(1e-9));
  Waveform w = sine_wave(op.bin_frequency(target), 16000);
  CqtGrid g = cqt(w, 8, 12);
  const int64_t T = g.re.dim(0), F = g.re.dim(1);
  // average magnitude per row over interior frames
  std::vector<double> rowmag(static_cast<size_t>(F), 0.0);
  for (int64_t t = 8; t < T - 8; ++t)
    for (int64_t k = 0; k < F; ++k)
      rowmag[static_cast<size_t>(k)] += std::hypot(g.re[t * F + k], g.im[t * F + k]);
  int64_t best = 0;
  for (int64_t k = 1; k < F; ++k)
    if (rowmag[static_cast<size_t>(k)] > rowmag[static_cast<size_t>(best)]) best = k;
  CHECK(best == target);
}

TEST_CASE("wav io round trip pcm16 and float32") {
  Waveform w = random_wave(8, 5000, 0.9);
  write_wav("/tmp/gsr_test_pcm.wav", w);
  Waveform r = read_wav("/tmp/gsr_test_pcm.wav");
  CHECK(r.sample_rate == 16000);
  REQUIRE(r.size() == w.size());
  double worst = 0.0;
  for (size_t i = 0; i < w.samples.size(); ++i)
    worst = std::max(worst, std::fabs(r.samples[i] - w.samples[i]));
  CHECK(worst < 1.0 / 65000.0);

  write_wav("/tmp/gsr_test_f32.wav", w, true);
  Waveform rf = read_wav("/tmp/gsr_test_f32.wav");
  worst = 0.0;
  for (size_t i = 0; i < w.samples.size(); ++i)
    worst = std::max(worst, std::fabs(rf.samples[i] - w.samples[i]));
  CHECK(worst < 1e-7);
  std::remove("/tmp/gsr_test_pcm.wav");
  std::remove("/tmp/gsr_test_f32.wav");
}

TEST_CASE("differentiable stft/istft path carries gradients") {
  Rng rng(9);
  StftOp op(StftConfig{});
  Var wave(rng.uniform_tensor({1, 2000}, -0.5, 0.5), true);
  SpecVar s = op.forward(wave);
  Var y = op.inverse(s, 2000);
  Var loss = mean(square(y));
  backward(loss);
  CHECK(wave.grad().all_finite());
  double gsum = 0.0;
  for (int64_t i = 0; i < wave.grad().size(); ++i) gsum += std::fabs(wave.grad()[i]);
  CHECK(gsum > 0.0);
}
