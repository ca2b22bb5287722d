// rvec/fbank.hpp

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

#ifndef RVEC_FBANK_HPP_
#define RVEC_FBANK_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rvec/audio.hpp"
#include "rvec/common.hpp"
#include "rvec/dsp.hpp"

namespace rvec {

/// Frames x n_mels log mel-filterbank energies.
struct FeatureMatrix {
  int rows = 0;  // frames (time)
  int cols = 0;  // feature dims
  std::vector<float> data;  // row-major
  double frame_shift_seconds = 0.010;

  float& at(int t, int d) { return data[static_cast<std::size_t>(t) * cols + d]; }
  float at(int t, int d) const { return data[static_cast<std::size_t>(t) * cols + d]; }
  const float* row(int t) const { return data.data() + static_cast<std::size_t>(t) * cols; }
};

struct FbankOptions {
  int n_mels = 80;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  double log_floor = 1e-10;
};

/// Utterance-wise mean normalization: subtract the per-dimension mean over
/// this utterance's frames. Idempotent.
inline FeatureMatrix cmn(const FeatureMatrix& in) {
  RVEC_CHECK(in.rows >= 1, "cmn: empty feature matrix");
  FeatureMatrix out = in;
  for (int d = 0; d < in.cols; ++d) {
    double mu = 0.0;
    for (int t = 0; t < in.rows; ++t) mu += in.at(t, d);
    mu /= in.rows;
    for (int t = 0; t < in.rows; ++t)
      out.at(t, d) = static_cast<float>(in.at(t, d) - mu);
  }
  return out;
}

namespace detail {

inline double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }

/// Triangular mel filterbank spanning 0..Nyquist, weights computed in the mel
/// domain on FFT bin center frequencies. Returns n_mels x (n_fft/2 + 1).
inline std::vector<std::vector<float>> make_mel_banks(int n_mels, int n_fft,
                                                      int sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(nyquist);
  const double mel_delta = (mel_hi - mel_lo) / (n_mels + 1);
  const double bin_width = static_cast<double>(sample_rate) / n_fft;

  std::vector<std::vector<float>> banks(n_mels, std::vector<float>(n_bins, 0.0f));
  for (int m = 0; m < n_mels; ++m) {
    const double left = mel_lo + m * mel_delta;
    const double center = mel_lo + (m + 1) * mel_delta;
    const double right = mel_lo + (m + 2) * mel_delta;
    for (int k = 0; k < n_bins; ++k) {
      const double mel = hz_to_mel(bin_width * k);
      if (mel > left && mel < right) {
        banks[m][k] = static_cast<float>(mel <= center ? (mel - left) / (center - left)
                                                       : (right - mel) / (right - center));
      }
    }
  }
  return banks;
}

}  // namespace detail

/// 80-dim log mel-filterbank features with utterance-wise mean normalization.
///
/// Framing: frame t covers samples [t*hop, t*hop + win) so the frame count is
/// 1 + floor((len - win) / hop). Each frame is Hann-windowed, zero-padded to
/// the next power of two, and reduced to an STFT magnitude spectrum; the mel
/// energies are floored before the natural log. There is no voice activity
/// detection anywhere in this pipeline: every frame of the input contributes
/// one output row.
inline FeatureMatrix compute_fbank(const AudioBuffer& audio, const FbankOptions& opts = {}) {
  RVEC_CHECK(audio.sample_rate > 0, "compute_fbank: non-positive sample rate");
  const int win = static_cast<int>(std::lround(opts.frame_length_ms * audio.sample_rate / 1000.0));
  const int hop = static_cast<int>(std::lround(opts.frame_shift_ms * audio.sample_rate / 1000.0));
  RVEC_CHECK(win > 0 && hop > 0, "compute_fbank: degenerate framing");
  RVEC_CHECK(static_cast<int>(audio.samples.size()) >= win,
             "compute_fbank: audio shorter than one frame (", audio.samples.size(),
             " samples < ", win, ")");

  const int n_frames = 1 + static_cast<int>((audio.samples.size() - win) / hop);
  const int n_fft = next_pow2(win);
  const auto banks = detail::make_mel_banks(opts.n_mels, n_fft, audio.sample_rate);

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (win - 1));

  FeatureMatrix fm;
  fm.rows = n_frames;
  fm.cols = opts.n_mels;
  fm.frame_shift_seconds = opts.frame_shift_ms / 1000.0;
  fm.data.resize(static_cast<std::size_t>(n_frames) * opts.n_mels);

  std::vector<std::complex<double>> buf(n_fft);
  std::vector<double> mag(n_fft / 2 + 1);
  for (int t = 0; t < n_frames; ++t) {
    const float* frame = audio.samples.data() + static_cast<std::size_t>(t) * hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < win; ++i) buf[i] = frame[i] * window[i];
    fft_inplace(buf, false);
    for (int k = 0; k <= n_fft / 2; ++k) mag[k] = std::abs(buf[k]);
    for (int m = 0; m < opts.n_mels; ++m) {
      double e = 0.0;
      const auto& bank = banks[m];
      for (int k = 0; k <= n_fft / 2; ++k) e += bank[k] * mag[k];
      fm.at(t, m) = static_cast<float>(std::log(std::max(e, opts.log_floor)));
    }
  }
  return cmn(fm);
}

// ---------------------------------------------------------------------------
// Binary feature dump: "FBNK", u32 frames, u32 dim, frames*dim f32 row-major.
// ---------------------------------------------------------------------------

inline void write_fbank(const std::string& path, const FeatureMatrix& fm) {
  std::ofstream os(path, std::ios::binary);
  RVEC_CHECK(os.good(), "write_fbank: cannot open ", path);
  os.write("FBNK", 4);
  detail::write_u32le(os, static_cast<std::uint32_t>(fm.rows));
  detail::write_u32le(os, static_cast<std::uint32_t>(fm.cols));
  os.write(reinterpret_cast<const char*>(fm.data.data()),
           static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
  RVEC_CHECK(os.good(), "write_fbank: write failed: ", path);
}

inline FeatureMatrix read_fbank(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  RVEC_CHECK(is.good(), "read_fbank: cannot open ", path);
  char magic[4];
  is.read(magic, 4);
  RVEC_CHECK(is.good() && std::strncmp(magic, "FBNK", 4) == 0, "read_fbank: bad magic in ", path);
  FeatureMatrix fm;
  fm.rows = static_cast<int>(detail::read_u32le(is));
  fm.cols = static_cast<int>(detail::read_u32le(is));
  RVEC_CHECK(is.good() && fm.rows >= 0 && fm.cols >= 0, "read_fbank: bad header in ", path);
  fm.data.resize(static_cast<std::size_t>(fm.rows) * fm.cols);
  is.read(reinterpret_cast<char*>(fm.data.data()),
          static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
  RVEC_CHECK(is.gcount() == static_cast<std::streamsize>(fm.data.size() * sizeof(float)),
             "read_fbank: truncated payload in ", path);
  return fm;
}

}  // namespace rvec

#endif  // RVEC_FBANK_HPP_
