#include "degrade/degrade.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "core/check.h"

namespace gsr {

Waveform add_noise(const Waveform& clean, const Waveform& noise, double snr_db) {
  GSR_CHECK(!clean.samples.empty() && !noise.samples.empty(), "empty input to add_noise");
  const size_t n = clean.samples.size();
  std::vector<double> fitted(n);
  for (size_t i = 0; i < n; ++i) fitted[i] = noise.samples[i % noise.samples.size()];

  double pc = 0.0, pn = 0.0;
  for (double v : clean.samples) pc += v * v;
  for (double v : fitted) pn += v * v;
  pc /= static_cast<double>(n);
  pn /= static_cast<double>(n);
  GSR_CHECK(pc > 0.0, "zero-power clean signal");
  GSR_CHECK(pn > 0.0, "zero-power noise signal");

  const double g = std::pow(10.0, -snr_db / 20.0) * std::sqrt(pc / pn);
  Waveform out = clean;
  for (size_t i = 0; i < n; ++i) out.samples[i] += g * fitted[i];
  return out;
}

Waveform reverberate(const Waveform& clean, const Waveform& rir) {
  GSR_CHECK(!rir.samples.empty(), "empty RIR");
  double rir_peak = 0.0;
  size_t peak_idx = 0;
  for (size_t i = 0; i < rir.samples.size(); ++i) {
    const double a = std::fabs(rir.samples[i]);
    if (a > rir_peak) {
      rir_peak = a;
      peak_idx = i;
    }
  }
  GSR_CHECK(rir_peak > 0.0, "all-zero RIR");

  const int64_t L = clean.size();
  const int64_t R = rir.size();
  Waveform out = clean;
  // y[i] = sum_k rir[k] * clean[i + peak - k]
  for (int64_t i = 0; i < L; ++i) {
    const int64_t shift = i + static_cast<int64_t>(peak_idx);
    double acc = 0.0;
    const int64_t k0 = std::max<int64_t>(0, shift - (L - 1));
    const int64_t k1 = std::min<int64_t>(R - 1, shift);
    for (int64_t k = k0; k <= k1; ++k)
      acc += rir.samples[static_cast<size_t>(k)] * clean.samples[static_cast<size_t>(shift - k)];
    out.samples[static_cast<size_t>(i)] = acc;
  }
  const double out_peak = out.peak();
  if (out_peak > 0.0) {
    const double s = clean.peak() / out_peak;
    for (double& v : out.samples) v *= s;
  }
  return out;
}

Waveform bandwidth_limit(const Waveform& clean, double cutoff_hz, FilterFamily family,
                         int order, double ripple_db) {
  GSR_CHECK(cutoff_hz > 0 && cutoff_hz < kSampleRate / 2.0, "cutoff outside (0, 8000) Hz");
  GSR_CHECK(order >= 2 && order <= 8, "filter order must be in [2, 8]");
  SosFilter f = design_lowpass(family, order, cutoff_hz, clean.sample_rate, ripple_db);
  Waveform out = clean;
  out.samples = f.apply(clean.samples);
  return out;
}

Waveform clip_waveform(const Waveform& clean, double alpha_min, double alpha_max) {
  GSR_CHECK(alpha_min < alpha_max, "clip thresholds must satisfy alpha_min < alpha_max");
  Waveform out = clean;
  for (double& v : out.samples) v = std::max(alpha_min, std::min(alpha_max, v));
  return out;
}

const char* kernel_kind_name(KernelKind k) {
  switch (k) {
    case KernelKind::kReverb: return "reverb";
    case KernelKind::kNoise: return "noise";
    case KernelKind::kBandwidth: return "bandwidth";
    case KernelKind::kClip: return "clip";
  }
  return "?";
}

void DegradationRecipe::validate() const {
  bool seen[4] = {false, false, false, false};
  for (const KernelStep& s : steps) {
    const int k = static_cast<int>(s.kind);
    GSR_CHECK(!seen[k], "kernel " << kernel_kind_name(s.kind) << " appears twice");
    seen[k] = true;
    switch (s.kind) {
      case KernelKind::kNoise:
        GSR_CHECK(s.snr_db >= -15.0 && s.snr_db <= 20.0, "SNR outside [-15, 20] dB");
        break;
      case KernelKind::kBandwidth:
        GSR_CHECK(s.cutoff_hz >= 1000.0 && s.cutoff_hz <= 7000.0,
                  "cutoff outside [1000, 7000] Hz");
        GSR_CHECK(s.order >= 2 && s.order <= 8, "order outside [2, 8]");
        break;
      case KernelKind::kClip:
        GSR_CHECK(s.alpha_min < 0.0 && s.alpha_max > 0.0, "clip thresholds must straddle 0");
        break;
      case KernelKind::kReverb:
        break;
    }
  }
}

DegradePolicy DegradePolicy::standard() {
  DegradePolicy p;
  for (KernelKind k : {KernelKind::kReverb, KernelKind::kNoise, KernelKind::kBandwidth,
                       KernelKind::kClip}) {
    KernelPolicy kp;
    kp.kind = k;
    p.kernels.push_back(kp);
  }
  return p;
}

DegradationRecipe sample_recipe(uint64_t rng_seed, const DegradePolicy& policy) {
  GSR_CHECK(!policy.kernels.empty(), "empty degradation policy");
  Rng rng(rng_seed);
  DegradationRecipe recipe;
  recipe.seed = rng_seed;

  // canonical application order regardless of policy order
  auto policy_for = [&](KernelKind k) -> const KernelPolicy* {
    for (const auto& kp : policy.kernels)
      if (kp.kind == k) return &kp;
    return nullptr;
  };
  for (KernelKind k : {KernelKind::kReverb, KernelKind::kNoise, KernelKind::kBandwidth,
                       KernelKind::kClip}) {
    const KernelPolicy* kp = policy_for(k);
    if (!kp) continue;
    const bool on = rng.uniform() < kp->probability;
    // draw parameters unconditionally so the stream stays aligned across policies
    KernelStep step;
    step.kind = k;
    switch (k) {
      case KernelKind::kNoise:
        step.snr_db = rng.uniform(kp->snr_lo, kp->snr_hi);
        break;
      case KernelKind::kBandwidth: {
        step.cutoff_hz = rng.uniform(kp->cutoff_lo, kp->cutoff_hi);
        step.order = static_cast<int>(rng.uniform_int(kp->order_lo, kp->order_hi));
        const bool cheb = kp->allow_chebyshev && (!kp->allow_butterworth || rng.uniform() < 0.5);
        step.family = cheb ? FilterFamily::kChebyshev1 : FilterFamily::kButterworth;
        step.ripple_db = kp->ripple_db;
        break;
      }
      case KernelKind::kClip: {
        const double a = rng.uniform(kp->clip_lo, kp->clip_hi);
        const double b = rng.uniform(kp->clip_lo, kp->clip_hi);
        step.alpha_min = -a;
        step.alpha_max = b;
        break;
      }
      case KernelKind::kReverb:
        break;
    }
    if (on) recipe.steps.push_back(step);
  }
  recipe.validate();
  return recipe;
}

ApplyResult apply_recipe(const Waveform& clean, const DegradationRecipe& recipe,
                         const std::vector<Waveform>& noise_pool,
                         const std::vector<Waveform>& rir_pool) {
  recipe.validate();
  ApplyResult res;
  res.degraded = clean;
  res.recipe_used = recipe;

  auto has = [&](KernelKind k) {
    for (const auto& s : recipe.steps)
      if (s.kind == k) return true;
    return false;
  };
  auto step_of = [&](KernelKind k) -> const KernelStep& {
    for (const auto& s : recipe.steps)
      if (s.kind == k) return s;
    GSR_FAIL("missing step");
  };

  if (has(KernelKind::kReverb)) {
    GSR_CHECK(!rir_pool.empty(), "recipe needs a RIR but the pool is empty");
    res.rir_index = static_cast<int64_t>(mix_seed(recipe.seed, 0x5252u) %
                                         rir_pool.size());
    res.degraded = reverberate(res.degraded, rir_pool[static_cast<size_t>(res.rir_index)]);
  }
  if (has(KernelKind::kNoise)) {
    GSR_CHECK(!noise_pool.empty(), "recipe needs noise but the pool is empty");
    res.noise_index = static_cast<int64_t>(mix_seed(recipe.seed, 0x4e4fu) %
                                           noise_pool.size());
    const Waveform& src = noise_pool[static_cast<size_t>(res.noise_index)];
    Waveform noise = src;
    if (src.size() > res.degraded.size()) {
      // seeded random crop of longer clips
      const int64_t span = src.size() - res.degraded.size();
      const int64_t off = static_cast<int64_t>(mix_seed(recipe.seed, 0x4352u) %
                                               static_cast<uint64_t>(span + 1));
      noise.samples.assign(src.samples.begin() + off,
                           src.samples.begin() + off + res.degraded.size());
    }
    res.degraded = add_noise(res.degraded, noise, step_of(KernelKind::kNoise).snr_db);
  }
  if (has(KernelKind::kBandwidth)) {
    const KernelStep& s = step_of(KernelKind::kBandwidth);
    res.degraded = bandwidth_limit(res.degraded, s.cutoff_hz, s.family, s.order, s.ripple_db);
  }
  if (has(KernelKind::kClip)) {
    const KernelStep& s = step_of(KernelKind::kClip);
    res.degraded = clip_waveform(res.degraded, s.alpha_min, s.alpha_max);
  }

  const double pk = res.degraded.peak();
  if (pk > 1.0)
    for (double& v : res.degraded.samples) v /= pk;
  return res;
}

void CorpusManifest::validate() const {
  GSR_CHECK(!clean_paths.empty(), "manifest has no clean items");
  auto check_readable = [](const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
      std::ifstream f(p);
      GSR_CHECK(f.good(), "unreadable path in manifest: " << p);
    }
  };
  check_readable(clean_paths);
  check_readable(noise_paths);
  check_readable(rir_paths);
}

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream f(path);
  GSR_CHECK(f.good(), "cannot open manifest " << path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    // trim
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line = line.substr(start);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '{') {
      auto row = nlohmann::json::parse(line);
      out.push_back(row.at("path").get<std::string>());
    } else {
      out.push_back(line);
    }
  }
  return out;
}

}  // namespace gsr
