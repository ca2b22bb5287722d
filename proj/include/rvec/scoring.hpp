// rvec/scoring.hpp

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

#ifndef RVEC_SCORING_HPP_
#define RVEC_SCORING_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rvec/common.hpp"
#include "rvec/store.hpp"

namespace rvec {

/// Cosine similarity, symmetric, in [-1, 1]. Rejects zero vectors.
template <typename A, typename B>
double cosine_score(const std::vector<A>& a, const std::vector<B>& b) {
  RVEC_CHECK(a.size() == b.size(), "cosine_score: dim mismatch (", a.size(), " vs ", b.size(), ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  RVEC_CHECK(na > 0.0 && nb > 0.0, "cosine_score: zero vector");
  return dot / std::sqrt(na * nb);
}

/// Imposter cohort: one arithmetic-mean embedding per training speaker,
/// unnormalized (cosine normalizes). Speakers whose mean collapses to the
/// zero vector are excluded and listed in excluded_speakers.
struct Cohort {
  std::vector<std::vector<float>> vectors;
  std::vector<std::string> speaker_ids;
  std::vector<std::string> excluded_speakers;

  std::size_t size() const { return vectors.size(); }
};

inline Cohort build_cohort(const EmbeddingStore& train) {
  RVEC_CHECK(!train.empty(), "build_cohort: empty embedding store");
  Cohort cohort;
  for (const auto& [spk, utts] : train.by_speaker()) {
    std::vector<double> acc(train.dim(), 0.0);
    for (const auto& utt : utts) {
      const auto& v = train.at(utt).vector;
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
    }
    std::vector<float> mean(train.dim());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
      mean[i] = static_cast<float>(acc[i] / static_cast<double>(utts.size()));
      norm2 += static_cast<double>(mean[i]) * mean[i];
    }
    if (norm2 == 0.0) {
      cohort.excluded_speakers.push_back(spk);
      continue;
    }
    cohort.speaker_ids.push_back(spk);
    cohort.vectors.push_back(std::move(mean));
  }
  RVEC_CHECK(!cohort.vectors.empty(), "build_cohort: every speaker mean was degenerate");
  return cohort;
}

inline EmbeddingStore cohort_to_store(const Cohort& cohort) {
  EmbeddingStore store;
  for (std::size_t i = 0; i < cohort.size(); ++i)
    store.add(cohort.speaker_ids[i], cohort.speaker_ids[i], cohort.vectors[i]);
  return store;
}

inline Cohort cohort_from_store(const EmbeddingStore& store) {
  Cohort cohort;
  for (const auto& [utt, rec] : store.records()) {
    cohort.speaker_ids.push_back(utt);
    cohort.vectors.push_back(rec.vector);
  }
  RVEC_CHECK(!cohort.vectors.empty(), "cohort_from_store: empty store");
  return cohort;
}

struct SideStats {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Mean and population std of the top_k highest cosine scores between the
/// embedding and the cohort vectors.
template <typename T>
SideStats asnorm_stats(const std::vector<T>& embedding, const Cohort& cohort, int top_k) {
  RVEC_CHECK(top_k >= 2, "asnorm: top_k must be >= 2, got ", top_k);
  RVEC_CHECK(static_cast<std::size_t>(top_k) <= cohort.size(), "asnorm: top_k ", top_k,
             " exceeds cohort size ", cohort.size());
  std::vector<double> scores(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i)
    scores[i] = cosine_score(embedding, cohort.vectors[i]);
  std::partial_sort(scores.begin(), scores.begin() + top_k, scores.end(),
                    std::greater<double>());
  scores.resize(top_k);
  SideStats st;
  st.mu = detail::mean_of(scores);
  st.sigma = detail::stddev_of(scores, st.mu);
  return st;
}

inline double asnorm_apply(double raw, const SideStats& enroll, const SideStats& test) {
  RVEC_CHECK(enroll.sigma > 0.0, "asnorm: zero score variance on enroll side");
  RVEC_CHECK(test.sigma > 0.0, "asnorm: zero score variance on test side");
  return 0.5 * ((raw - enroll.mu) / enroll.sigma + (raw - test.mu) / test.sigma);
}

/// Adaptive score normalization against the top_k cohort scores of each side.
template <typename A, typename B>
double asnorm(double raw, const std::vector<A>& enroll, const std::vector<B>& test,
              const Cohort& cohort, int top_k = 600) {
  return asnorm_apply(raw, asnorm_stats(enroll, cohort, top_k),
                      asnorm_stats(test, cohort, top_k));
}

// ---------------------------------------------------------------------------
// Enrollment combination
// ---------------------------------------------------------------------------

enum class Strategy { kUttConcat, kEmbAvg, kScoreAvg };

inline Strategy strategy_from_name(const std::string& name) {
  if (name == "uttconcat" || name == "utt-concat") return Strategy::kUttConcat;
  if (name == "embavg" || name == "emb-avg") return Strategy::kEmbAvg;
  if (name == "scoreavg" || name == "score-avg") return Strategy::kScoreAvg;
  fail("unknown strategy \"", name, "\" (expected uttconcat, embavg or scoreavg)");
}

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kUttConcat: return "uttconcat";
    case Strategy::kEmbAvg: return "embavg";
    default: return "scoreavg";
  }
}

/// Per-speaker enrollment inputs. concat_embedding is the embedding of the
/// concatenated enrollment audio and is required by the UttConcat strategy.
struct EnrollmentMaterials {
  std::vector<std::vector<float>> utterance_embeddings;
  std::optional<std::vector<float>> concat_embedding;
};

struct AsnormOptions {
  bool enabled = false;
  const Cohort* cohort = nullptr;
  int top_k = 600;
  /// ScoreAvg only: normalize the averaged score against the mean-embedding
  /// statistics instead of normalizing each utterance score first.
  bool scoreavg_norm_after = false;
};

namespace detail {

inline std::vector<float> mean_embedding(const std::vector<std::vector<float>>& embs) {
  std::vector<double> acc(embs.front().size(), 0.0);
  for (const auto& e : embs) {
    RVEC_CHECK(e.size() == acc.size(), "mean_embedding: dim mismatch");
    for (std::size_t i = 0; i < e.size(); ++i) acc[i] += e[i];
  }
  std::vector<float> mean(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    mean[i] = static_cast<float>(acc[i] / static_cast<double>(embs.size()));
  return mean;
}

}  // namespace detail

/// Score one (enrollment speaker, test utterance) trial under the chosen
/// multi-utterance strategy. AS-norm, when enabled, applies to the final
/// score for UttConcat/EmbAvg and per utterance score before averaging for
/// ScoreAvg (unless scoreavg_norm_after is set).
inline double combine_enrollment(Strategy strategy, const EnrollmentMaterials& materials,
                                 const std::vector<float>& test,
                                 const AsnormOptions& norm = {}) {
  const bool use_norm = norm.enabled;
  if (use_norm) RVEC_CHECK(norm.cohort != nullptr, "combine_enrollment: asnorm without cohort");
  const SideStats test_stats =
      use_norm ? asnorm_stats(test, *norm.cohort, norm.top_k) : SideStats{};

  switch (strategy) {
    case Strategy::kUttConcat: {
      RVEC_CHECK(materials.concat_embedding.has_value(),
                 "combine_enrollment: UttConcat requires the concatenated-audio embedding");
      const double raw = cosine_score(*materials.concat_embedding, test);
      if (!use_norm) return raw;
      return asnorm_apply(raw, asnorm_stats(*materials.concat_embedding, *norm.cohort, norm.top_k),
                          test_stats);
    }
    case Strategy::kEmbAvg: {
      RVEC_CHECK(!materials.utterance_embeddings.empty(),
                 "combine_enrollment: empty enrollment set");
      const std::vector<float> mean = detail::mean_embedding(materials.utterance_embeddings);
      const double raw = cosine_score(mean, test);
      if (!use_norm) return raw;
      return asnorm_apply(raw, asnorm_stats(mean, *norm.cohort, norm.top_k), test_stats);
    }
    default: {
      RVEC_CHECK(!materials.utterance_embeddings.empty(),
                 "combine_enrollment: empty enrollment set");
      double sum = 0.0;
      for (const auto& e : materials.utterance_embeddings) {
        const double raw = cosine_score(e, test);
        if (use_norm && !norm.scoreavg_norm_after)
          sum += asnorm_apply(raw, asnorm_stats(e, *norm.cohort, norm.top_k), test_stats);
        else
          sum += raw;
      }
      double avg = sum / static_cast<double>(materials.utterance_embeddings.size());
      if (use_norm && norm.scoreavg_norm_after) {
        const std::vector<float> mean = detail::mean_embedding(materials.utterance_embeddings);
        avg = asnorm_apply(avg, asnorm_stats(mean, *norm.cohort, norm.top_k), test_stats);
      }
      return avg;
    }
  }
}

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

struct ScoreSet {
  std::vector<double> scores;
  std::string system;
  std::string chain;  // human-readable scoring chain description
};

/// Z-normalize a score set over its own trials (population statistics).
inline std::vector<double> znorm_scores(const std::vector<double>& scores) {
  RVEC_CHECK(scores.size() >= 2, "znorm_scores: need at least 2 scores");
  const double mu = detail::mean_of(scores);
  const double sigma = detail::stddev_of(scores, mu);
  RVEC_CHECK(sigma > 0.0, "znorm_scores: constant score set");
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - mu) / sigma;
  return out;
}

/// Weighted mean of z-normalized score sets; weights normalized to sum 1.
inline ScoreSet fuse_scores_weighted(const std::vector<ScoreSet>& sets,
                                     std::vector<double> weights) {
  RVEC_CHECK(!sets.empty(), "fuse_scores: no score sets");
  RVEC_CHECK(weights.size() == sets.size(), "fuse_scores: one weight per score set required");
  const std::size_t n = sets.front().scores.size();
  for (const auto& s : sets)
    RVEC_CHECK(s.scores.size() == n, "fuse_scores: misaligned score sets (", s.scores.size(),
               " vs ", n, " trials)");
  double wsum = 0.0;
  for (double w : weights) {
    RVEC_CHECK(w > 0.0, "fuse_scores: weights must be positive");
    wsum += w;
  }
  for (double& w : weights) w /= wsum;

  ScoreSet fused;
  fused.system = "fusion";
  fused.scores.assign(n, 0.0);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const std::vector<double> z = znorm_scores(sets[k].scores);
    for (std::size_t i = 0; i < n; ++i) fused.scores[i] += weights[k] * z[i];
    if (k) fused.chain += " + ";
    fused.chain += detail::cat(sets[k].system, "*", weights[k]);
  }
  return fused;
}

/// Performance-weighted fusion: weight_i proportional to 1/minDCF_i.
inline ScoreSet fuse_scores(const std::vector<ScoreSet>& sets,
                            const std::vector<double>& min_dcfs) {
  RVEC_CHECK(min_dcfs.size() == sets.size(), "fuse_scores: one minDCF per score set required");
  std::vector<double> weights(min_dcfs.size());
  for (std::size_t i = 0; i < min_dcfs.size(); ++i) {
    RVEC_CHECK(min_dcfs[i] > 0.0, "fuse_scores: minDCF values must be positive");
    weights[i] = 1.0 / min_dcfs[i];
  }
  return fuse_scores_weighted(sets, std::move(weights));
}

}  // namespace rvec

#endif  // RVEC_SCORING_HPP_
