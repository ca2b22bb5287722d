// rvec/metrics.hpp

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

#ifndef RVEC_METRICS_HPP_
#define RVEC_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "rvec/common.hpp"

namespace rvec {

/// Threshold-swept detection error tradeoff under the decision rule
/// "accept iff score >= threshold". One point per unique score plus the two
/// infinities; fnr is non-decreasing and fpr non-increasing in threshold.
struct DetCurve {
  std::vector<double> thresholds;
  std::vector<double> fnr;
  std::vector<double> fpr;
  long long n_target = 0;
  long long n_nontarget = 0;
  // sorted raw scores, kept for exact operating points at arbitrary thresholds
  std::vector<double> targets_sorted;
  std::vector<double> nontargets_sorted;
};

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void validate() const {
    RVEC_CHECK(p_target > 0.0 && p_target < 1.0, "DcfParams: p_target must lie in (0,1)");
    RVEC_CHECK(c_miss > 0.0 && c_fa > 0.0, "DcfParams: costs must be positive");
  }
};

/// labels[i] != 0 marks trial i as a target.
inline DetCurve det_sweep(const std::vector<double>& scores, const std::vector<int>& labels) {
  RVEC_CHECK(scores.size() == labels.size(), "det_sweep: scores/labels size mismatch");
  DetCurve c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    RVEC_CHECK(std::isfinite(scores[i]), "det_sweep: non-finite score at index ", i);
    (labels[i] ? c.targets_sorted : c.nontargets_sorted).push_back(scores[i]);
  }
  c.n_target = static_cast<long long>(c.targets_sorted.size());
  c.n_nontarget = static_cast<long long>(c.nontargets_sorted.size());
  RVEC_CHECK(c.n_target >= 1 && c.n_nontarget >= 1,
             "det_sweep: need at least one target and one nontarget trial");
  std::sort(c.targets_sorted.begin(), c.targets_sorted.end());
  std::sort(c.nontargets_sorted.begin(), c.nontargets_sorted.end());

  std::vector<double> uniq(scores);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  const double inf = std::numeric_limits<double>::infinity();
  c.thresholds.reserve(uniq.size() + 2);
  c.thresholds.push_back(-inf);
  for (double t : uniq) c.thresholds.push_back(t);
  c.thresholds.push_back(inf);

  c.fnr.reserve(c.thresholds.size());
  c.fpr.reserve(c.thresholds.size());
  for (double t : c.thresholds) {
    // misses: targets strictly below the threshold (score >= t accepts)
    const auto miss = std::lower_bound(c.targets_sorted.begin(), c.targets_sorted.end(), t) -
                      c.targets_sorted.begin();
    const auto fa = c.nontargets_sorted.end() -
                    std::lower_bound(c.nontargets_sorted.begin(), c.nontargets_sorted.end(), t);
    c.fnr.push_back(static_cast<double>(miss) / static_cast<double>(c.n_target));
    c.fpr.push_back(static_cast<double>(fa) / static_cast<double>(c.n_nontarget));
  }
  return c;
}

/// Equal error rate in percent: the crossing of fnr and fpr, linearly
/// interpolated between adjacent curve points when they do not meet exactly.
inline double eer(const DetCurve& curve) {
  const std::size_t n = curve.thresholds.size();
  RVEC_CHECK(n >= 2, "eer: empty curve");
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = curve.fnr[i] - curve.fpr[i];
    if (diff == 0.0) return 100.0 * curve.fnr[i];
    if (diff > 0.0) {
      RVEC_CHECK(i > 0, "eer: malformed curve");
      const double f0 = curve.fnr[i - 1], f1 = curve.fnr[i];
      const double p0 = curve.fpr[i - 1], p1 = curve.fpr[i];
      const double denom = (f1 - f0) - (p1 - p0);
      const double alpha = denom != 0.0 ? (p0 - f0) / denom : 0.0;
      return 100.0 * (f0 + alpha * (f1 - f0));
    }
  }
  fail("eer: no crossing found (malformed curve)");
}

struct MinDcfResult {
  double value = 0.0;
  double threshold = 0.0;
};

/// Minimum detection cost over all curve points. Normalized by
/// min(c_miss*p_target, c_fa*(1-p_target)) unless normalize is false.
/// Returns the smallest threshold attaining the minimum.
inline MinDcfResult min_dcf(const DetCurve& curve, const DcfParams& params = {},
                            bool normalize = true) {
  params.validate();
  RVEC_CHECK(!curve.thresholds.empty(), "min_dcf: empty curve");
  const double miss_w = params.c_miss * params.p_target;
  const double fa_w = params.c_fa * (1.0 - params.p_target);
  const double divisor = normalize ? std::min(miss_w, fa_w) : 1.0;

  MinDcfResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    const double dcf = (miss_w * curve.fnr[i] + fa_w * curve.fpr[i]) / divisor;
    if (dcf < best.value) {
      best.value = dcf;
      best.threshold = curve.thresholds[i];
    }
  }
  return best;
}

/// (FNR, FPR) in percent of the accept-iff->=-threshold rule at an arbitrary
/// threshold, computed exactly from the stored scores.
inline std::pair<double, double> operating_point(const DetCurve& curve, double threshold) {
  RVEC_CHECK(curve.n_target >= 1 && curve.n_nontarget >= 1, "operating_point: empty curve");
  const auto miss =
      std::lower_bound(curve.targets_sorted.begin(), curve.targets_sorted.end(), threshold) -
      curve.targets_sorted.begin();
  const auto fa = curve.nontargets_sorted.end() -
                  std::lower_bound(curve.nontargets_sorted.begin(), curve.nontargets_sorted.end(),
                                   threshold);
  return {100.0 * static_cast<double>(miss) / static_cast<double>(curve.n_target),
          100.0 * static_cast<double>(fa) / static_cast<double>(curve.n_nontarget)};
}

/// Mean average precision of truncated retrieval lists. Per query,
/// AP = sum of precision@k over hit ranks k, divided by min(R, cap) where R
/// is the query's relevant-id count; mAP is the mean over queries.
inline double mean_average_precision(const std::vector<std::vector<std::string>>& rankings,
                                     const std::vector<std::set<std::string>>& relevance,
                                     int cap = 10) {
  RVEC_CHECK(rankings.size() == relevance.size(),
             "mean_average_precision: rankings/relevance size mismatch");
  RVEC_CHECK(!rankings.empty(), "mean_average_precision: no queries");
  RVEC_CHECK(cap >= 1, "mean_average_precision: cap must be >= 1");
  double ap_sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const auto& list = rankings[q];
    RVEC_CHECK(!list.empty(), "mean_average_precision: empty ranking for query ", q);
    RVEC_CHECK(static_cast<int>(list.size()) <= cap, "mean_average_precision: ranking for query ",
               q, " longer than cap ", cap);
    const auto& rel = relevance[q];
    RVEC_CHECK(!rel.empty(), "mean_average_precision: query ", q, " has no relevant ids");
    int hits = 0;
    double ap = 0.0;
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (rel.count(list[k])) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(k + 1);
      }
    }
    ap /= std::min<int>(static_cast<int>(rel.size()), cap);
    ap_sum += ap;
  }
  return ap_sum / static_cast<double>(rankings.size());
}

}  // namespace rvec

#endif  // RVEC_METRICS_HPP_
