// rvec/store.hpp

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

#ifndef RVEC_STORE_HPP_
#define RVEC_STORE_HPP_

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rvec/audio.hpp"  // little-endian helpers
#include "rvec/common.hpp"

namespace rvec {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

/// Utterance embeddings keyed by utterance id. Ordered by id so that
/// serialization is deterministic and round-trips are bit-exact.
class EmbeddingStore {
 public:
  struct Record {
    std::string speaker_id;
    std::vector<float> vector;
  };

  EmbeddingStore() = default;
  explicit EmbeddingStore(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool has(const std::string& utt) const { return records_.count(utt) != 0; }

  void add(const std::string& utt, const std::string& spk, std::vector<float> vec) {
    RVEC_CHECK(!utt.empty(), "EmbeddingStore: empty utterance id");
    if (dim_ == 0) dim_ = static_cast<int>(vec.size());
    RVEC_CHECK(static_cast<int>(vec.size()) == dim_, "EmbeddingStore: vector for \"", utt,
               "\" has dim ", vec.size(), ", store dim is ", dim_);
    RVEC_CHECK(records_.emplace(utt, Record{spk, std::move(vec)}).second,
               "EmbeddingStore: duplicate utterance id \"", utt, "\"");
  }

  const Record& at(const std::string& utt) const {
    auto it = records_.find(utt);
    if (it == records_.end()) fail("EmbeddingStore: unknown utterance id \"", utt, "\"");
    return it->second;
  }

  const std::map<std::string, Record>& records() const { return records_; }

  /// Speaker -> utterance ids, both sorted.
  std::map<std::string, std::vector<std::string>> by_speaker() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [utt, rec] : records_) out[rec.speaker_id].push_back(utt);
    return out;
  }

 private:
  int dim_ = 0;
  std::map<std::string, Record> records_;
};

// ---------------------------------------------------------------------------
// Store file: "SPKE", u32 dim, u32 count, then per record u16 utterance-id
// length, utf-8 id, u16 speaker-id length, utf-8 id, dim little-endian f32.
// ---------------------------------------------------------------------------

inline void write_store(const std::string& path, const EmbeddingStore& store) {
  RVEC_CHECK(!store.empty(), "write_store: refusing to write an empty store");
  std::ofstream os(path, std::ios::binary);
  RVEC_CHECK(os.good(), "write_store: cannot open ", path);
  os.write("SPKE", 4);
  detail::write_u32le(os, static_cast<std::uint32_t>(store.dim()));
  detail::write_u32le(os, static_cast<std::uint32_t>(store.size()));
  for (const auto& [utt, rec] : store.records()) {
    RVEC_CHECK(utt.size() <= 0xffff && rec.speaker_id.size() <= 0xffff,
               "write_store: id longer than 65535 bytes");
    detail::write_u16le(os, static_cast<std::uint16_t>(utt.size()));
    os.write(utt.data(), static_cast<std::streamsize>(utt.size()));
    detail::write_u16le(os, static_cast<std::uint16_t>(rec.speaker_id.size()));
    os.write(rec.speaker_id.data(), static_cast<std::streamsize>(rec.speaker_id.size()));
    os.write(reinterpret_cast<const char*>(rec.vector.data()),
             static_cast<std::streamsize>(rec.vector.size() * sizeof(float)));
  }
  RVEC_CHECK(os.good(), "write_store: write failed: ", path);
}

/// expected_dim > 0 enforces the store dimension on load.
inline EmbeddingStore read_store(const std::string& path, int expected_dim = 0) {
  std::ifstream is(path, std::ios::binary);
  RVEC_CHECK(is.good(), "read_store: cannot open ", path);
  char magic[4];
  is.read(magic, 4);
  RVEC_CHECK(is.good() && std::strncmp(magic, "SPKE", 4) == 0, "read_store: bad magic in ", path);
  const int dim = static_cast<int>(detail::read_u32le(is));
  const std::uint32_t count = detail::read_u32le(is);
  RVEC_CHECK(is.good() && dim > 0, "read_store: bad header in ", path);
  RVEC_CHECK(expected_dim == 0 || dim == expected_dim, "read_store: dim mismatch in ", path,
             " (file has ", dim, ", expected ", expected_dim, ")");
  EmbeddingStore store(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint16_t utt_len = detail::read_u16le(is);
    std::string utt(utt_len, '\0');
    is.read(utt.data(), utt_len);
    std::uint16_t spk_len = detail::read_u16le(is);
    std::string spk(spk_len, '\0');
    is.read(spk.data(), spk_len);
    std::vector<float> vec(dim);
    is.read(reinterpret_cast<char*>(vec.data()),
            static_cast<std::streamsize>(vec.size() * sizeof(float)));
    RVEC_CHECK(is.good() && is.gcount() == static_cast<std::streamsize>(vec.size() * sizeof(float)),
               "read_store: truncated payload in ", path, " (record ", i, ")");
    store.add(utt, spk, std::move(vec));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialPair {
  std::string enroll_speaker;
  std::string test_utterance;
  std::optional<bool> target;  // empty when the trial file carries no label
};

struct TrialSet {
  std::vector<TrialPair> pairs;
  std::map<std::string, std::vector<std::string>> enroll_map;  // speaker -> utterance ids

  bool fully_labeled() const {
    for (const auto& p : pairs)
      if (!p.target.has_value()) return false;
    return !pairs.empty();
  }
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

}  // namespace detail

/// Trial file: one trial per line, "enroll_speaker test_utterance [label]"
/// with label "target"/"nontarget" (aliases "1"/"0"). Order is preserved;
/// duplicate (enroll, test) pairs are rejected.
inline TrialSet parse_trials(const std::string& path) {
  std::ifstream is(path);
  RVEC_CHECK(is.good(), "parse_trials: cannot open ", path);
  TrialSet ts;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    RVEC_CHECK(toks.size() == 2 || toks.size() == 3, "parse_trials: line ", lineno,
               ": expected 2 or 3 fields, got ", toks.size());
    TrialPair p;
    p.enroll_speaker = toks[0];
    p.test_utterance = toks[1];
    if (toks.size() == 3) {
      if (toks[2] == "target" || toks[2] == "1") p.target = true;
      else if (toks[2] == "nontarget" || toks[2] == "0") p.target = false;
      else fail("parse_trials: line ", lineno, ": unknown label \"", toks[2], "\"");
    }
    RVEC_CHECK(seen.emplace(p.enroll_speaker, p.test_utterance).second, "parse_trials: line ",
               lineno, ": duplicate trial (", p.enroll_speaker, ", ", p.test_utterance, ")");
    ts.pairs.push_back(std::move(p));
  }
  RVEC_CHECK(!ts.pairs.empty(), "parse_trials: no trials in ", path);
  return ts;
}

/// Enrollment side file: "enroll_speaker utterance_id" per line.
inline void parse_enrollment(const std::string& path, TrialSet& ts) {
  std::ifstream is(path);
  RVEC_CHECK(is.good(), "parse_enrollment: cannot open ", path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    RVEC_CHECK(toks.size() == 2, "parse_enrollment: line ", lineno,
               ": expected \"speaker utterance\", got ", toks.size(), " fields");
    ts.enroll_map[toks[0]].push_back(toks[1]);
  }
}

// ---------------------------------------------------------------------------
// Score files: "enroll_speaker test_utterance score", order preserved.
// ---------------------------------------------------------------------------

struct ScoreFile {
  std::vector<std::pair<std::string, std::string>> trials;
  std::vector<double> scores;
};

inline std::string format_scores(const ScoreFile& sf) {
  RVEC_CHECK(sf.trials.size() == sf.scores.size(), "format_scores: misaligned score file");
  std::ostringstream os;
  os << std::setprecision(12);
  for (std::size_t i = 0; i < sf.scores.size(); ++i)
    os << sf.trials[i].first << ' ' << sf.trials[i].second << ' ' << sf.scores[i] << '\n';
  return os.str();
}

inline ScoreFile read_scores(const std::string& path) {
  std::ifstream is(path);
  RVEC_CHECK(is.good(), "read_scores: cannot open ", path);
  ScoreFile sf;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    RVEC_CHECK(toks.size() == 3, "read_scores: line ", lineno, ": expected 3 fields");
    try {
      sf.scores.push_back(std::stod(toks[2]));
    } catch (const std::exception&) {
      fail("read_scores: line ", lineno, ": bad score \"", toks[2], "\"");
    }
    sf.trials.emplace_back(toks[0], toks[1]);
  }
  RVEC_CHECK(!sf.scores.empty(), "read_scores: no scores in ", path);
  return sf;
}

// ---------------------------------------------------------------------------
// Atomic writes: write to a temp file in the same directory, then rename.
// ---------------------------------------------------------------------------

template <typename WriteFn>
void atomic_write(const std::string& path, WriteFn&& fn) {
  const std::string tmp = path + ".tmp";
  fn(tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  RVEC_CHECK(!ec, "atomic_write: rename to ", path, " failed: ", ec.message());
}

inline void atomic_write_text(const std::string& path, const std::string& content) {
  atomic_write(path, [&](const std::string& tmp) {
    std::ofstream os(tmp, std::ios::binary);  // binary keeps LF endings
    RVEC_CHECK(os.good(), "atomic_write_text: cannot open ", tmp);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    RVEC_CHECK(os.good(), "atomic_write_text: write failed: ", tmp);
  });
}

}  // namespace rvec

#endif  // RVEC_STORE_HPP_
