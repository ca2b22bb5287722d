// rvec/augment.hpp

// Copyright 2026  The rvec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef RVEC_AUGMENT_HPP_
#define RVEC_AUGMENT_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rvec/audio.hpp"
#include "rvec/common.hpp"
#include "rvec/dsp.hpp"

namespace rvec {

/// Online augmentation policy: each of the three augmentations fires
/// independently with apply_probability. Speed ratios must contain 1.0.
struct AugmentConfig {
  double apply_probability = 0.6;
  std::pair<double, double> snr_db_range{0.0, 20.0};
  std::vector<double> speed_ratios{0.9, 1.0, 1.1};
  std::uint64_t rng_seed = 0;

  void validate() const {
    RVEC_CHECK(apply_probability >= 0.0 && apply_probability <= 1.0,
               "AugmentConfig: apply_probability must lie in [0,1], got ", apply_probability);
    RVEC_CHECK(std::find(speed_ratios.begin(), speed_ratios.end(), 1.0) != speed_ratios.end(),
               "AugmentConfig: speed_ratios must contain 1.0");
    RVEC_CHECK(snr_db_range.first <= snr_db_range.second,
               "AugmentConfig: snr_db_range is inverted");
  }
};

/// Mix noise into clean at the requested SNR. The noise is tiled/cropped to
/// the clean length; the gain g solves 10*log10(P_clean / P_scaled_noise) =
/// snr_db with powers taken as mean squares over the clean-length window.
inline AudioBuffer add_noise(const AudioBuffer& clean, const AudioBuffer& noise,
                             double snr_db) {
  RVEC_CHECK(!clean.samples.empty(), "add_noise: empty clean input");
  RVEC_CHECK(!noise.samples.empty(), "add_noise: empty noise input");
  const std::size_t n = clean.samples.size();

  double p_clean = 0.0;
  for (float s : clean.samples) p_clean += static_cast<double>(s) * s;
  p_clean /= static_cast<double>(n);
  RVEC_CHECK(p_clean > 0.0, "add_noise: clean input is silent (zero power)");

  std::vector<float> tiled(n);
  for (std::size_t i = 0; i < n; ++i) tiled[i] = noise.samples[i % noise.samples.size()];
  double p_noise = 0.0;
  for (float s : tiled) p_noise += static_cast<double>(s) * s;
  p_noise /= static_cast<double>(n);
  RVEC_CHECK(p_noise > 0.0, "add_noise: noise input is silent (zero power)");

  const double g = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  AudioBuffer out = clean;
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = static_cast<float>(clean.samples[i] + g * tiled[i]);
  return out;
}

/// Convolve with an impulse response, truncate to the input length, and scale
/// down if the peak exceeds 1.
inline AudioBuffer reverberate(const AudioBuffer& dry, std::span<const float> rir) {
  RVEC_CHECK(!dry.samples.empty(), "reverberate: empty input");
  RVEC_CHECK(!rir.empty(), "reverberate: empty impulse response");
  bool all_zero = true;
  for (float v : rir)
    if (v != 0.0f) { all_zero = false; break; }
  RVEC_CHECK(!all_zero, "reverberate: all-zero impulse response");

  std::vector<double> conv = fft_convolve_full(
      std::span<const float>(dry.samples.data(), dry.samples.size()), rir);
  const std::size_t n = dry.samples.size();
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(conv[i]));
  const double scale = peak > 1.0 ? 1.0 / peak : 1.0;

  AudioBuffer out = dry;
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<float>(conv[i] * scale);
  return out;
}

/// Multiply playback speed by ratio via linear-interpolation resampling.
/// Output length is round(len / ratio); the sample rate field is unchanged.
inline AudioBuffer speed_perturb(const AudioBuffer& audio, double ratio) {
  RVEC_CHECK(ratio > 0.0, "speed_perturb: ratio must be positive, got ", ratio);
  if (ratio == 1.0) return audio;
  RVEC_CHECK(!audio.samples.empty(), "speed_perturb: empty input");
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(audio.samples.size()) / ratio));
  AudioBuffer out = audio;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = detail::sample_at(audio.samples, static_cast<double>(i) * ratio);
  return out;
}

struct AugmentResult {
  AudioBuffer audio;
  double speed_ratio = 1.0;  // 1.0 when speed perturbation did not fire
};

/// Apply the three augmentations online, each independently with probability
/// cfg.apply_probability, in the fixed order noise -> reverb -> speed. An
/// empty pool skips that augmentation. When speed fires, the ratio is drawn
/// uniformly from cfg.speed_ratios minus {1.0} and returned so the caller can
/// remap the class label. Deterministic given the rng state.
inline AugmentResult augment_online(const AudioBuffer& audio, const AugmentConfig& cfg,
                                    std::span<const AudioBuffer> noise_pool,
                                    std::span<const std::vector<float>> rir_pool,
                                    Rng& rng) {
  cfg.validate();
  const bool fire_noise = rng.bernoulli(cfg.apply_probability);
  const bool fire_reverb = rng.bernoulli(cfg.apply_probability);
  const bool fire_speed = rng.bernoulli(cfg.apply_probability);

  AugmentResult res{audio, 1.0};
  if (fire_noise && !noise_pool.empty()) {
    const AudioBuffer& noise = noise_pool[rng.uniform_index(noise_pool.size())];
    double snr = rng.uniform(cfg.snr_db_range.first, cfg.snr_db_range.second);
    res.audio = add_noise(res.audio, noise, snr);
  }
  if (fire_reverb && !rir_pool.empty()) {
    const std::vector<float>& rir = rir_pool[rng.uniform_index(rir_pool.size())];
    res.audio = reverberate(res.audio, rir);
  }
  if (fire_speed) {
    std::vector<double> ratios;
    for (double r : cfg.speed_ratios)
      if (r != 1.0) ratios.push_back(r);
    std::sort(ratios.begin(), ratios.end());
    if (!ratios.empty()) {
      res.speed_ratio = ratios[rng.uniform_index(ratios.size())];
      res.audio = speed_perturb(res.audio, res.speed_ratio);
    }
  }
  return res;
}

}  // namespace rvec

#endif  // RVEC_AUGMENT_HPP_
