#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/random.h"
#include "degrade/filters.h"
#include "signal/waveform.h"

namespace gsr {

// ---------------------------------------------------------------------------
// degradation kernels
// ---------------------------------------------------------------------------

// clean + g * noise with g chosen so the clean-to-scaled-noise ratio is snr_db.
// noise is tiled or truncated to the clean length first.
Waveform add_noise(const Waveform& clean, const Waveform& noise, double snr_db);

// direct convolution with the RIR, trimmed so the direct-path peak of the RIR
// aligns with sample 0; output peak matched to the clean peak.
Waveform reverberate(const Waveform& clean, const Waveform& rir);

Waveform bandwidth_limit(const Waveform& clean, double cutoff_hz, FilterFamily family,
                         int order, double ripple_db = 1.0);

Waveform clip_waveform(const Waveform& clean, double alpha_min, double alpha_max);

// ---------------------------------------------------------------------------
// recipes
// ---------------------------------------------------------------------------

enum class KernelKind { kReverb, kNoise, kBandwidth, kClip };
const char* kernel_kind_name(KernelKind k);

struct KernelStep {
  KernelKind kind;
  // noise
  double snr_db = 0.0;
  // bandwidth
  double cutoff_hz = 0.0;
  FilterFamily family = FilterFamily::kButterworth;
  int order = 4;
  double ripple_db = 1.0;
  // clip
  double alpha_min = -1.0, alpha_max = 1.0;
};

struct DegradationRecipe {
  std::vector<KernelStep> steps;  // canonical order: reverb, noise, bandwidth, clip
  uint64_t seed = 0;
  void validate() const;  // each kind at most once, params in legal ranges
};

struct KernelPolicy {
  KernelKind kind;
  double probability = 0.5;
  // parameter ranges (inclusive); used per kind
  double snr_lo = -10.0, snr_hi = 20.0;
  double cutoff_lo = 2000.0, cutoff_hi = 7000.0;
  int order_lo = 2, order_hi = 8;
  bool allow_chebyshev = true, allow_butterworth = true;
  double ripple_db = 1.0;
  double clip_lo = 0.1, clip_hi = 0.9;  // symmetric |threshold| range
};

struct DegradePolicy {
  std::vector<KernelPolicy> kernels;
  static DegradePolicy standard();  // all four kernels, probability 0.5 each
};

DegradationRecipe sample_recipe(uint64_t rng_seed, const DegradePolicy& policy);

struct ApplyResult {
  Waveform degraded;
  DegradationRecipe recipe_used;
  int64_t noise_index = -1;
  int64_t rir_index = -1;
};

ApplyResult apply_recipe(const Waveform& clean, const DegradationRecipe& recipe,
                         const std::vector<Waveform>& noise_pool,
                         const std::vector<Waveform>& rir_pool);

// ---------------------------------------------------------------------------
// corpus manifests
// ---------------------------------------------------------------------------

struct CorpusManifest {
  std::vector<std::string> clean_paths;
  std::vector<std::string> noise_paths;
  std::vector<std::string> rir_paths;
  std::string split;
  void validate() const;  // nonempty clean list, all paths readable
};

// one path per line, or JSONL rows {"path": ..., "duration": ...}
std::vector<std::string> read_manifest(const std::string& path);

}  // namespace gsr
