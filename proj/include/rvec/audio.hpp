// rvec/audio.hpp

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

#ifndef RVEC_AUDIO_HPP_
#define RVEC_AUDIO_HPP_

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "rvec/common.hpp"

namespace rvec {

/// Mono waveform with its bookkeeping ids. Samples are amplitudes in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = 16000;
  std::string utterance_id;
  std::string speaker_id;
  std::string genre;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

namespace detail {

/// Linear-interpolation sample lookup with edge clamping.
inline float sample_at(const std::vector<float>& s, double x) {
  if (x <= 0.0) return s.front();
  double last = static_cast<double>(s.size() - 1);
  if (x >= last) return s.back();
  std::size_t i0 = static_cast<std::size_t>(x);
  double frac = x - static_cast<double>(i0);
  if (frac == 0.0) return s[i0];
  return static_cast<float>((1.0 - frac) * s[i0] + frac * s[i0 + 1]);
}

}  // namespace detail

/// Resample to a new rate by linear interpolation. Identity when the rates
/// already match.
inline AudioBuffer resample(const AudioBuffer& in, int new_rate) {
  RVEC_CHECK(new_rate > 0, "resample: target rate must be positive");
  if (in.sample_rate == new_rate || in.samples.empty()) {
    AudioBuffer out = in;
    out.sample_rate = new_rate;
    return out;
  }
  double step = static_cast<double>(in.sample_rate) / new_rate;
  std::size_t out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(in.samples.size()) * new_rate / in.sample_rate));
  AudioBuffer out;
  out.sample_rate = new_rate;
  out.utterance_id = in.utterance_id;
  out.speaker_id = in.speaker_id;
  out.genre = in.genre;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = detail::sample_at(in.samples, static_cast<double>(i) * step);
  return out;
}

// ---------------------------------------------------------------------------
// WAV I/O (16-bit PCM mono)
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16le(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32le(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

inline void write_u16le(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace detail

/// Read a 16-bit PCM mono WAV file. When working_rate is positive and differs
/// from the file's rate the waveform is resampled to working_rate.
inline AudioBuffer load_wav(const std::string& path, int working_rate = 16000) {
  std::ifstream is(path, std::ios::binary);
  RVEC_CHECK(is.good(), "load_wav: cannot open ", path);
  char tag[5] = {0};
  is.read(tag, 4);
  RVEC_CHECK(is.good() && std::strncmp(tag, "RIFF", 4) == 0, "load_wav: not a RIFF file: ", path);
  detail::read_u32le(is);  // riff size
  is.read(tag, 4);
  RVEC_CHECK(is.good() && std::strncmp(tag, "WAVE", 4) == 0, "load_wav: not a WAVE file: ", path);

  int channels = 0, rate = 0, bits = 0;
  bool got_fmt = false;
  std::vector<float> samples;
  bool got_data = false;
  while (is.read(tag, 4)) {
    std::uint32_t chunk_size = detail::read_u32le(is);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      std::uint16_t fmt = detail::read_u16le(is);
      channels = detail::read_u16le(is);
      rate = static_cast<int>(detail::read_u32le(is));
      detail::read_u32le(is);  // byte rate
      detail::read_u16le(is);  // block align
      bits = detail::read_u16le(is);
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
      RVEC_CHECK(fmt == 1, "load_wav: only PCM supported (format ", fmt, "): ", path);
      got_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      RVEC_CHECK(got_fmt, "load_wav: data chunk before fmt chunk: ", path);
      RVEC_CHECK(channels == 1, "load_wav: expected mono, got ", channels, " channels: ", path);
      RVEC_CHECK(bits == 16, "load_wav: expected 16-bit samples, got ", bits, ": ", path);
      std::size_t n = chunk_size / 2;
      std::vector<std::int16_t> raw(n);
      is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 2));
      RVEC_CHECK(is.gcount() == static_cast<std::streamsize>(n * 2),
                 "load_wav: truncated data chunk: ", path);
      samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) samples[i] = raw[i] / 32768.0f;
      got_data = true;
      break;
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  RVEC_CHECK(got_data, "load_wav: no data chunk: ", path);

  AudioBuffer buf;
  buf.samples = std::move(samples);
  buf.sample_rate = rate;
  if (working_rate > 0 && rate != working_rate) buf = resample(buf, working_rate);
  return buf;
}

inline void save_wav(const std::string& path, const AudioBuffer& buf) {
  std::ofstream os(path, std::ios::binary);
  RVEC_CHECK(os.good(), "save_wav: cannot open ", path);
  const std::uint32_t n = static_cast<std::uint32_t>(buf.samples.size());
  const std::uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  detail::write_u32le(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  detail::write_u32le(os, 16);
  detail::write_u16le(os, 1);  // PCM
  detail::write_u16le(os, 1);  // mono
  detail::write_u32le(os, static_cast<std::uint32_t>(buf.sample_rate));
  detail::write_u32le(os, static_cast<std::uint32_t>(buf.sample_rate * 2));
  detail::write_u16le(os, 2);
  detail::write_u16le(os, 16);
  os.write("data", 4);
  detail::write_u32le(os, data_bytes);
  for (float s : buf.samples) {
    float c = std::clamp(s, -1.0f, 1.0f);
    auto v = static_cast<std::int16_t>(std::lround(c * 32767.0f));
    detail::write_u16le(os, static_cast<std::uint16_t>(v));
  }
  RVEC_CHECK(os.good(), "save_wav: write failed: ", path);
}

// ---------------------------------------------------------------------------
// Short-utterance concatenation
// ---------------------------------------------------------------------------

/// Concatenate short training utterances within each (speaker, genre) group
/// until every output reaches min_duration seconds (or the group runs out of
/// short utterances). Utterances already long enough pass through unchanged.
/// A merged buffer keeps the utterance id of its first component; outputs are
/// ordered by (speaker, genre, utterance id). Total sample count is conserved.
inline std::vector<AudioBuffer> concat_short_utterances(
    const std::vector<AudioBuffer>& utts, double min_duration = 5.0) {
  if (utts.empty()) return {};
  int rate = utts.front().sample_rate;
  for (const auto& u : utts)
    RVEC_CHECK(u.sample_rate == rate, "concat_short_utterances: mixed sample rates (",
               rate, " vs ", u.sample_rate, " in ", u.utterance_id, ")");

  std::map<std::pair<std::string, std::string>, std::vector<const AudioBuffer*>> groups;
  for (const auto& u : utts) groups[{u.speaker_id, u.genre}].push_back(&u);

  std::vector<AudioBuffer> out;
  const double min_samples = min_duration * rate;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(),
              [](const AudioBuffer* a, const AudioBuffer* b) {
                return a->utterance_id < b->utterance_id;
              });
    AudioBuffer pack;
    for (const AudioBuffer* u : members) {
      if (static_cast<double>(u->samples.size()) >= min_samples) {
        out.push_back(*u);
        continue;
      }
      if (pack.samples.empty()) {
        pack.utterance_id = u->utterance_id;
        pack.speaker_id = u->speaker_id;
        pack.genre = u->genre;
        pack.sample_rate = rate;
      }
      pack.samples.insert(pack.samples.end(), u->samples.begin(), u->samples.end());
      if (static_cast<double>(pack.samples.size()) >= min_samples) {
        out.push_back(std::move(pack));
        pack = AudioBuffer{};
      }
    }
    if (!pack.samples.empty()) out.push_back(std::move(pack));
  }
  std::sort(out.begin(), out.end(), [](const AudioBuffer& a, const AudioBuffer& b) {
    return std::tie(a.speaker_id, a.genre, a.utterance_id) <
           std::tie(b.speaker_id, b.genre, b.utterance_id);
  });
  return out;
}

}  // namespace rvec

#endif  // RVEC_AUDIO_HPP_
