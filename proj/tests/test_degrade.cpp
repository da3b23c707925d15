#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/random.h"
#include "degrade/degrade.h"

using namespace gsr;

namespace {

Waveform from(std::vector<double> v) {
  Waveform w;
  w.samples = std::move(v);
  return w;
}

Waveform random_wave(uint64_t seed, int64_t n, double amp = 0.5) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  for (auto& s : w.samples) s = rng.uniform(-amp, amp);
  return w;
}

double measured_snr_db(const Waveform& clean, const Waveform& noisy) {
  double pc = 0.0, pn = 0.0;
  for (size_t i = 0; i < clean.samples.size(); ++i) {
    pc += clean.samples[i] * clean.samples[i];
    const double d = noisy.samples[i] - clean.samples[i];
    pn += d * d;
  }
  return 10.0 * std::log10(pc / pn);
}

}  // namespace

TEST_CASE("add_noise gain closed forms and measured SNR") {
  Waveform clean = random_wave(1, 8000);
  // equal-power noise: same samples reversed
  Waveform noise = clean;
  std::reverse(noise.samples.begin(), noise.samples.end());

  Waveform y0 = add_noise(clean, noise, 0.0);  // g = 1
  for (size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(y0.samples[i] ==
          doctest::Approx(clean.samples[i] + noise.samples[i]).epsilon(1e-12));

  Waveform y20 = add_noise(clean, noise, 20.0);  // g = 0.1
  for (size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(y20.samples[i] ==
          doctest::Approx(clean.samples[i] + 0.1 * noise.samples[i]).epsilon(1e-12));

  for (double snr : {-10.0, -3.0, 0.0, 7.5, 20.0}) {
    Waveform other = random_wave(99, 3000, 0.2);
    Waveform y = add_noise(clean, other, snr);
    CHECK(std::fabs(measured_snr_db(clean, y) - snr) < 1e-6);
  }

  Waveform zero = from(std::vector<double>(100, 0.0));
  CHECK_THROWS(add_noise(zero, noise, 0.0));
  CHECK_THROWS(add_noise(clean, zero, 0.0));
}

TEST_CASE("reverberate identities and convolution oracle") {
  Waveform clean = random_wave(2, 2000);

  Waveform delta = from({1.0});
  Waveform y = reverberate(clean, delta);
  for (size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(y.samples[i] == doctest::Approx(clean.samples[i]).epsilon(1e-12));

  Waveform half = from({0.5});
  Waveform y2 = reverberate(clean, half);
  for (size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(y2.samples[i] == doctest::Approx(clean.samples[i]).epsilon(1e-12));

  // rir = delta[0] + 0.5 delta[160]
  std::vector<double> rirv(161, 0.0);
  rirv[0] = 1.0;
  rirv[160] = 0.5;
  Waveform rir = from(rirv);
  Waveform got = reverberate(clean, rir);
  // brute-force oracle: y[i] = x[i] + 0.5 x[i-160], then peak-normalize
  std::vector<double> want(clean.samples.size(), 0.0);
  for (size_t i = 0; i < want.size(); ++i) {
    want[i] = clean.samples[i];
    if (i >= 160) want[i] += 0.5 * clean.samples[i - 160];
  }
  double wpeak = 0.0, cpeak = clean.peak();
  for (double v : want) wpeak = std::max(wpeak, std::fabs(v));
  for (size_t i = 0; i < want.size(); ++i)
    CHECK(got.samples[i] == doctest::Approx(want[i] * cpeak / wpeak).epsilon(1e-10));

  Waveform zero_rir = from(std::vector<double>(32, 0.0));
  CHECK_THROWS(reverberate(clean, zero_rir));
}

TEST_CASE("bandwidth_limit: butterworth stopband and DC gain") {
  // analytic frequency-response oracle over the stopband
  SosFilter f = design_lowpass(FilterFamily::kButterworth, 8, 4000.0, kSampleRate);
  double pass_ref = f.magnitude_at(100.0, kSampleRate);
  CHECK(pass_ref == doctest::Approx(1.0).epsilon(1e-6));
  for (double fr = 6000.0; fr < 8000.0; fr += 100.0) {
    const double att_db = 20.0 * std::log10(pass_ref / f.magnitude_at(fr, kSampleRate));
    CHECK(att_db >= 40.0);
  }

  // empirical check on filtered white noise
  Waveform noise = random_wave(3, 32000, 0.5);
  Waveform filtered = bandwidth_limit(noise, 4000.0, FilterFamily::kButterworth, 8);
  CHECK(filtered.size() == noise.size());
  // Goertzel-style band energies via plain DFT on a long window
  auto band_energy = [](const Waveform& w, double lo, double hi) {
    const int64_t n = 16384;
    double e = 0.0;
    for (double fr = lo; fr < hi; fr += 50.0) {
      double re = 0.0, im = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const double ang = 2.0 * M_PI * fr * static_cast<double>(i) / kSampleRate;
        re += w.samples[static_cast<size_t>(i)] * std::cos(ang);
        im -= w.samples[static_cast<size_t>(i)] * std::sin(ang);
      }
      e += re * re + im * im;
    }
    return e;
  };
  const double stop = band_energy(filtered, 6000.0, 8000.0);
  const double pass = band_energy(filtered, 500.0, 2500.0);
  CHECK(10.0 * std::log10(pass / stop) >= 40.0);

  // DC-offset constant signal passes with unity gain after the transient
  Waveform dc = from(std::vector<double>(4000, 0.25));
  Waveform dcf = bandwidth_limit(dc, 4000.0, FilterFamily::kButterworth, 4);
  CHECK(dcf.samples.back() == doctest::Approx(0.25).epsilon(1e-3));

  CHECK_THROWS(bandwidth_limit(noise, 9000.0, FilterFamily::kButterworth, 4));
  CHECK_THROWS(bandwidth_limit(noise, 4000.0, FilterFamily::kButterworth, 12));
}

TEST_CASE("chebyshev-1 passband ripple bounded by design parameter") {
  const double ripple_db = 1.0;
  SosFilter f = design_lowpass(FilterFamily::kChebyshev1, 6, 3000.0, kSampleRate, ripple_db);
  const double eps = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
  const double floor_gain = 1.0 / std::sqrt(1.0 + eps * eps);
  double mx = 0.0, mn = 1e9;
  for (double fr = 10.0; fr <= 2950.0; fr += 10.0) {
    const double m = f.magnitude_at(fr, kSampleRate);
    mx = std::max(mx, m);
    mn = std::min(mn, m);
  }
  CHECK(mx <= 1.0 + 1e-9);
  CHECK(mn >= floor_gain - 1e-9);
}

TEST_CASE("designed filters stay stable across the legal grid") {
  for (int order = 2; order <= 8; ++order)
    for (double cutoff : {1000.0, 2000.0, 4000.0, 7000.0, 7900.0})
      for (FilterFamily fam : {FilterFamily::kButterworth, FilterFamily::kChebyshev1}) {
        SosFilter f = design_lowpass(fam, order, cutoff, kSampleRate);
        for (const Biquad& s : f.sections) {
          // |roots of z^2 + a1 z + a2| < 1  <=>  |a2| < 1 and |a1| < 1 + a2
          CHECK(std::fabs(s.a2) < 1.0);
          CHECK(std::fabs(s.a1) < 1.0 + s.a2 + 1e-12);
        }
      }
}

TEST_CASE("clip_waveform closed forms, counting oracle, idempotence") {
  Waveform w = random_wave(4, 1000, 1.0);
  Waveform c = clip_waveform(w, -0.5, 0.5);
  CHECK(c.peak() <= 0.5);

  Waveform id = clip_waveform(w, -2.0, 2.0);
  for (size_t i = 0; i < w.samples.size(); ++i) CHECK(id.samples[i] == w.samples[i]);

  // midpoint ramp over [-1, 1]: exactly half the samples exceed +-0.5
  const int64_t n = 4000;
  Waveform ramp;
  ramp.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    ramp.samples[static_cast<size_t>(i)] =
        -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  Waveform cr = clip_waveform(ramp, -0.5, 0.5);
  int64_t clipped = 0;
  for (int64_t i = 0; i < n; ++i)
    if (cr.samples[static_cast<size_t>(i)] != ramp.samples[static_cast<size_t>(i)]) ++clipped;
  CHECK(clipped == n / 2);

  Waveform cc = clip_waveform(cr, -0.5, 0.5);
  for (size_t i = 0; i < cr.samples.size(); ++i) CHECK(cc.samples[i] == cr.samples[i]);

  CHECK_THROWS(clip_waveform(w, 0.5, -0.5));
}

TEST_CASE("sample_recipe determinism, empty policy, and rate concentration") {
  DegradePolicy p = DegradePolicy::standard();
  DegradationRecipe r1 = sample_recipe(1234, p);
  DegradationRecipe r2 = sample_recipe(1234, p);
  REQUIRE(r1.steps.size() == r2.steps.size());
  for (size_t i = 0; i < r1.steps.size(); ++i) {
    CHECK(r1.steps[i].kind == r2.steps[i].kind);
    CHECK(r1.steps[i].snr_db == r2.steps[i].snr_db);
    CHECK(r1.steps[i].cutoff_hz == r2.steps[i].cutoff_hz);
  }

  DegradePolicy zero = DegradePolicy::standard();
  for (auto& k : zero.kernels) k.probability = 0.0;
  CHECK(sample_recipe(7, zero).steps.empty());

  DegradePolicy empty;
  CHECK_THROWS(sample_recipe(7, empty));

  DegradePolicy noise_only;
  KernelPolicy kp;
  kp.kind = KernelKind::kNoise;
  kp.probability = 0.5;
  noise_only.kernels.push_back(kp);
  int64_t hits = 0;
  const int64_t trials = 10000;
  for (int64_t s = 0; s < trials; ++s)
    if (!sample_recipe(static_cast<uint64_t>(s) + 1000, noise_only).steps.empty()) ++hits;
  const double rate = static_cast<double>(hits) / static_cast<double>(trials);
  CHECK(rate >= 0.47);
  CHECK(rate <= 0.53);

  // sampled parameters respect policy ranges
  for (int64_t s = 0; s < 200; ++s) {
    DegradationRecipe r = sample_recipe(static_cast<uint64_t>(s), p);
    for (const auto& st : r.steps) {
      if (st.kind == KernelKind::kNoise) {
        CHECK(st.snr_db >= -10.0);
        CHECK(st.snr_db <= 20.0);
      }
      if (st.kind == KernelKind::kBandwidth) {
        CHECK(st.cutoff_hz >= 2000.0);
        CHECK(st.cutoff_hz <= 7000.0);
        CHECK(st.order >= 2);
        CHECK(st.order <= 8);
      }
    }
  }
}

TEST_CASE("apply_recipe composition") {
  Waveform clean = random_wave(5, 6000, 0.6);
  std::vector<Waveform> noise_pool = {random_wave(6, 4000, 0.3), random_wave(7, 9000, 0.2)};
  std::vector<double> rirv(400, 0.0);
  rirv[0] = 1.0;
  for (int i = 1; i < 400; ++i) rirv[static_cast<size_t>(i)] = 0.4 * std::exp(-i / 60.0);
  std::vector<Waveform> rir_pool = {from(rirv)};

  DegradationRecipe empty;
  empty.seed = 42;
  ApplyResult r0 = apply_recipe(clean, empty, noise_pool, rir_pool);
  for (size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(r0.degraded.samples[i] == clean.samples[i]);

  DegradationRecipe clip_only;
  clip_only.seed = 42;
  KernelStep cs;
  cs.kind = KernelKind::kClip;
  cs.alpha_min = -0.5;
  cs.alpha_max = 0.5;
  clip_only.steps.push_back(cs);
  ApplyResult r1 = apply_recipe(clean, clip_only, noise_pool, rir_pool);
  Waveform direct = clip_waveform(clean, -0.5, 0.5);
  for (size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(r1.degraded.samples[i] == direct.samples[i]);

  // full recipe equals manual sequential application
  DegradationRecipe full;
  full.seed = 777;
  KernelStep rv;
  rv.kind = KernelKind::kReverb;
  KernelStep no;
  no.kind = KernelKind::kNoise;
  no.snr_db = 5.0;
  KernelStep bw;
  bw.kind = KernelKind::kBandwidth;
  bw.cutoff_hz = 3500.0;
  bw.family = FilterFamily::kButterworth;
  bw.order = 6;
  KernelStep cl;
  cl.kind = KernelKind::kClip;
  cl.alpha_min = -0.4;
  cl.alpha_max = 0.45;
  full.steps = {rv, no, bw, cl};
  ApplyResult rf = apply_recipe(clean, full, noise_pool, rir_pool);

  Waveform manual = reverberate(clean, rir_pool[0]);
  {
    const Waveform& src = noise_pool[static_cast<size_t>(rf.noise_index)];
    Waveform noise = src;
    if (src.size() > manual.size()) {
      const int64_t span = src.size() - manual.size();
      const int64_t off = static_cast<int64_t>(mix_seed(full.seed, 0x4352u) %
                                               static_cast<uint64_t>(span + 1));
      noise.samples.assign(src.samples.begin() + off,
                           src.samples.begin() + off + manual.size());
    }
    manual = add_noise(manual, noise, 5.0);
  }
  manual = bandwidth_limit(manual, 3500.0, FilterFamily::kButterworth, 6);
  manual = clip_waveform(manual, -0.4, 0.45);
  const double pk = manual.peak();
  if (pk > 1.0)
    for (double& v : manual.samples) v /= pk;
  for (size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(rf.degraded.samples[i] == doctest::Approx(manual.samples[i]).epsilon(1e-12));

  // pool errors
  DegradationRecipe needs_noise;
  needs_noise.seed = 1;
  needs_noise.steps = {no};
  CHECK_THROWS(apply_recipe(clean, needs_noise, {}, rir_pool));
  DegradationRecipe needs_rir;
  needs_rir.seed = 1;
  needs_rir.steps = {rv};
  CHECK_THROWS(apply_recipe(clean, needs_rir, noise_pool, {}));
}

TEST_CASE("recipe validation rejects duplicates and bad ranges") {
  DegradationRecipe r;
  KernelStep a;
  a.kind = KernelKind::kClip;
  a.alpha_min = -0.5;
  a.alpha_max = 0.5;
  r.steps = {a, a};
  CHECK_THROWS(r.validate());

  DegradationRecipe bad;
  KernelStep n;
  n.kind = KernelKind::kNoise;
  n.snr_db = -40.0;
  bad.steps = {n};
  CHECK_THROWS(bad.validate());
}
