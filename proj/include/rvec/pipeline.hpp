// rvec/pipeline.hpp

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

#ifndef RVEC_PIPELINE_HPP_
#define RVEC_PIPELINE_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rvec/common.hpp"
#include "rvec/metrics.hpp"
#include "rvec/scoring.hpp"
#include "rvec/store.hpp"

namespace rvec {

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct EvalReport {
  double min_dcf = 0.0;
  double threshold = 0.0;
  double eer_percent = 0.0;
  double fnr_percent = 0.0;
  double fpr_percent = 0.0;
  double p_target = 0.01;
  long long n_target = 0;
  long long n_nontarget = 0;

  /// Human-readable block followed by machine-readable key=value lines.
  std::string format() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "minDCF(" << p_target << "): " << min_dcf << "  (threshold " << threshold << ")\n";
    os << "EER: " << eer_percent << "%\n";
    os << "FNR @ minDCF threshold: " << fnr_percent << "%\n";
    os << "FPR @ minDCF threshold: " << fpr_percent << "%\n";
    os << "trials: " << (n_target + n_nontarget) << " (" << n_target << " target / "
       << n_nontarget << " nontarget)\n";
    os.unsetf(std::ios::fixed);
    os.precision(12);
    os << "mindcf=" << min_dcf << "\n";
    os << "mindcf_threshold=" << threshold << "\n";
    os << "eer_percent=" << eer_percent << "\n";
    os << "fnr_percent=" << fnr_percent << "\n";
    os << "fpr_percent=" << fpr_percent << "\n";
    os << "p_target=" << p_target << "\n";
    os << "n_target=" << n_target << "\n";
    os << "n_nontarget=" << n_nontarget << "\n";
    return os.str();
  }
};

inline EvalReport evaluate_scores(const std::vector<double>& scores,
                                  const std::vector<int>& labels,
                                  const DcfParams& params = {}) {
  const DetCurve curve = det_sweep(scores, labels);
  const MinDcfResult md = min_dcf(curve, params);
  const auto [fnr_pc, fpr_pc] = operating_point(curve, md.threshold);
  EvalReport rep;
  rep.min_dcf = md.value;
  rep.threshold = md.threshold;
  rep.eer_percent = eer(curve);
  rep.fnr_percent = fnr_pc;
  rep.fpr_percent = fpr_pc;
  rep.p_target = params.p_target;
  rep.n_target = curve.n_target;
  rep.n_nontarget = curve.n_nontarget;
  return rep;
}

inline std::string format_det_curve(const DetCurve& curve) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "# threshold fnr fpr\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    os << curve.thresholds[i] << ' ' << curve.fnr[i] << ' ' << curve.fpr[i] << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Verification pipeline
// ---------------------------------------------------------------------------

struct VerifyOptions {
  Strategy strategy = Strategy::kEmbAvg;
  bool asnorm = true;
  int top_k = 600;
  bool scoreavg_norm_after = false;
  DcfParams dcf;
};

struct VerifyResult {
  ScoreFile scores;
  std::optional<EvalReport> report;  // present when every trial is labeled
  std::string chain;
};

/// Score a trial set against an embedding store. The enrollment map resolves
/// each enrollment speaker to its utterance ids; for UttConcat, concat_store
/// holds one embedding per enrollment speaker extracted from the concatenated
/// enrollment audio. Trials evaluate in file order; scoring is a pure
/// function of the inputs.
inline VerifyResult run_verification(const TrialSet& trials, const EmbeddingStore& store,
                                     const Cohort* cohort, const VerifyOptions& opts,
                                     const EmbeddingStore* concat_store = nullptr) {
  RVEC_CHECK(!trials.pairs.empty(), "run_verification: empty trial set");
  if (opts.asnorm)
    RVEC_CHECK(cohort != nullptr, "run_verification: asnorm enabled but no cohort given");
  if (opts.strategy == Strategy::kUttConcat)
    RVEC_CHECK(concat_store != nullptr,
               "run_verification: UttConcat requires a concatenated-enrollment store");

  // Resolve every id up front so the error can list all missing ids at once.
  std::set<std::string> missing;
  std::set<std::string> enroll_speakers;
  for (const auto& p : trials.pairs) {
    enroll_speakers.insert(p.enroll_speaker);
    if (!store.has(p.test_utterance)) missing.insert(p.test_utterance);
  }
  for (const auto& spk : enroll_speakers) {
    auto it = trials.enroll_map.find(spk);
    if (it == trials.enroll_map.end() || it->second.empty()) {
      missing.insert(spk + " (no enrollment utterances)");
      continue;
    }
    for (const auto& utt : it->second)
      if (!store.has(utt)) missing.insert(utt);
    if (opts.strategy == Strategy::kUttConcat && !concat_store->has(spk))
      missing.insert(spk + " (no concatenated-enrollment embedding)");
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    fail("run_verification: unresolvable ids: ", list);
  }

  AsnormOptions norm;
  norm.enabled = opts.asnorm;
  norm.cohort = cohort;
  norm.top_k = opts.top_k;
  norm.scoreavg_norm_after = opts.scoreavg_norm_after;

  std::map<std::string, EnrollmentMaterials> materials;
  for (const auto& spk : enroll_speakers) {
    EnrollmentMaterials m;
    for (const auto& utt : trials.enroll_map.at(spk))
      m.utterance_embeddings.push_back(store.at(utt).vector);
    if (opts.strategy == Strategy::kUttConcat)
      m.concat_embedding = concat_store->at(spk).vector;
    materials.emplace(spk, std::move(m));
  }

  VerifyResult res;
  res.chain = detail::cat("cosine", opts.asnorm ? "+asnorm" : "", "/",
                          strategy_name(opts.strategy));
  res.scores.trials.reserve(trials.pairs.size());
  res.scores.scores.resize(trials.pairs.size());
  for (const auto& p : trials.pairs) res.scores.trials.emplace_back(p.enroll_speaker,
                                                                    p.test_utterance);
  const auto n_trials = static_cast<long long>(trials.pairs.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n_trials; ++i) {
    const TrialPair& p = trials.pairs[static_cast<std::size_t>(i)];
    res.scores.scores[static_cast<std::size_t>(i)] =
        combine_enrollment(opts.strategy, materials.at(p.enroll_speaker),
                           store.at(p.test_utterance).vector, norm);
  }

  if (trials.fully_labeled()) {
    std::vector<int> labels(trials.pairs.size());
    for (std::size_t i = 0; i < trials.pairs.size(); ++i)
      labels[i] = *trials.pairs[i].target ? 1 : 0;
    res.report = evaluate_scores(res.scores.scores, labels, opts.dcf);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

struct QueryRanking {
  std::string query_id;
  std::vector<std::pair<std::string, double>> hits;  // (utterance id, score), best first
};

struct RetrievalResult {
  std::vector<QueryRanking> rankings;
  bool clamped = false;  // k exceeded the pool size
};

/// Rank each query against every pool utterance with the verification scoring
/// chain (cosine, optional AS-norm) and keep the k best. Ties break by
/// utterance id ascending; k larger than the pool returns the full ranking
/// with the clamped flag set.
inline RetrievalResult retrieve_topk(const std::vector<std::pair<std::string, std::vector<float>>>& queries,
                                     const EmbeddingStore& pool, int k = 10,
                                     const AsnormOptions& norm = {}) {
  RVEC_CHECK(!pool.empty(), "retrieve_topk: empty pool");
  RVEC_CHECK(k >= 1, "retrieve_topk: k must be >= 1");
  if (norm.enabled) RVEC_CHECK(norm.cohort != nullptr, "retrieve_topk: asnorm without cohort");

  RetrievalResult res;
  res.clamped = static_cast<std::size_t>(k) > pool.size();
  const int kept = res.clamped ? static_cast<int>(pool.size()) : k;

  std::vector<SideStats> pool_stats;
  std::vector<const std::string*> pool_ids;
  std::vector<const std::vector<float>*> pool_vecs;
  pool_ids.reserve(pool.size());
  pool_vecs.reserve(pool.size());
  for (const auto& [utt, rec] : pool.records()) {
    pool_ids.push_back(&utt);
    pool_vecs.push_back(&rec.vector);
  }
  if (norm.enabled) {
    pool_stats.resize(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      pool_stats[i] = asnorm_stats(*pool_vecs[i], *norm.cohort, norm.top_k);
  }

  for (const auto& [qid, qvec] : queries) {
    const SideStats qstats =
        norm.enabled ? asnorm_stats(qvec, *norm.cohort, norm.top_k) : SideStats{};
    std::vector<std::pair<double, std::size_t>> scored(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      double s = cosine_score(qvec, *pool_vecs[i]);
      if (norm.enabled) s = asnorm_apply(s, qstats, pool_stats[i]);
      scored[i] = {s, i};
    }
    std::sort(scored.begin(), scored.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return *pool_ids[a.second] < *pool_ids[b.second];
              });
    QueryRanking qr;
    qr.query_id = qid;
    for (int i = 0; i < kept; ++i)
      qr.hits.emplace_back(*pool_ids[scored[i].second], scored[i].first);
    res.rankings.push_back(std::move(qr));
  }
  return res;
}

/// Retrieval dump: one line per hit, "query_id rank utterance_id score".
inline std::string format_retrieval(const RetrievalResult& res) {
  std::ostringstream os;
  os << std::setprecision(12);
  for (const auto& qr : res.rankings)
    for (std::size_t r = 0; r < qr.hits.size(); ++r)
      os << qr.query_id << ' ' << (r + 1) << ' ' << qr.hits[r].first << ' '
         << qr.hits[r].second << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// key=value configuration files
// ---------------------------------------------------------------------------

/// Lines of "key=value"; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> parse_config(const std::string& path) {
  std::ifstream is(path);
  RVEC_CHECK(is.good(), "parse_config: cannot open ", path);
  std::map<std::string, std::string> cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    RVEC_CHECK(eq != std::string::npos && eq > 0, "parse_config: line ", lineno,
               ": expected key=value");
    cfg[trimmed.substr(0, eq)] = trimmed.substr(eq + 1);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// CN-Celeb adapters (best effort)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string basename_no_ext(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base.erase(dot);
  return base;
}

inline std::string strip_enroll_suffix(const std::string& id) {
  const std::string suffix = "-enroll";
  if (id.size() > suffix.size() && id.compare(id.size() - suffix.size(), suffix.size(), suffix) == 0)
    return id.substr(0, id.size() - suffix.size());
  return id;
}

}  // namespace detail

/// Convert a CN-Celeb style trial list ("<enroll> <test path> [0/1]") to the
/// native trial format: enrollment ids lose an "-enroll" suffix, test paths
/// reduce to their basename without extension.
inline std::string convert_cnceleb_trials(const std::string& in_path) {
  std::ifstream is(in_path);
  RVEC_CHECK(is.good(), "convert_cnceleb_trials: cannot open ", in_path);
  std::ostringstream os;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    RVEC_CHECK(toks.size() == 2 || toks.size() == 3, "convert_cnceleb_trials: line ", lineno,
               ": expected 2 or 3 fields");
    os << detail::strip_enroll_suffix(detail::basename_no_ext(toks[0])) << ' '
       << detail::basename_no_ext(toks[1]);
    if (toks.size() == 3) {
      RVEC_CHECK(toks[2] == "0" || toks[2] == "1", "convert_cnceleb_trials: line ", lineno,
                 ": expected label 0 or 1");
      os << ' ' << (toks[2] == "1" ? "target" : "nontarget");
    }
    os << '\n';
  }
  return os.str();
}

/// Convert a CN-Celeb style enrollment list ("<enroll id> <path>...") to the
/// native "speaker utterance" map format.
inline std::string convert_cnceleb_enroll(const std::string& in_path) {
  std::ifstream is(in_path);
  RVEC_CHECK(is.good(), "convert_cnceleb_enroll: cannot open ", in_path);
  std::ostringstream os;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    RVEC_CHECK(toks.size() >= 2, "convert_cnceleb_enroll: line ", lineno,
               ": expected an id and at least one path");
    const std::string spk = detail::strip_enroll_suffix(detail::basename_no_ext(toks[0]));
    for (std::size_t i = 1; i < toks.size(); ++i)
      os << spk << ' ' << detail::basename_no_ext(toks[i]) << '\n';
  }
  return os.str();
}

}  // namespace rvec

#endif  // RVEC_PIPELINE_HPP_
