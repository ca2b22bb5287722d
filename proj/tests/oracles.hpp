// tests/oracles.hpp

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

// Brute-force reference implementations the tests check the library against.
// Everything here is deliberately naive and independent of the library's
// computation paths.

#ifndef RVEC_TESTS_ORACLES_HPP_
#define RVEC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rvec/aam.hpp"
#include "rvec/net.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Detection metrics by exhaustive per-threshold counting (O(n^2) overall).
// ---------------------------------------------------------------------------

struct RatePoint {
  double threshold;
  double fnr;
  double fpr;
};

inline RatePoint count_rates(const std::vector<double>& scores, const std::vector<int>& labels,
                             double threshold) {
  long long miss = 0, fa = 0, n_t = 0, n_n = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) {
      ++n_t;
      if (scores[i] < threshold) ++miss;  // accept iff score >= threshold
    } else {
      ++n_n;
      if (scores[i] >= threshold) ++fa;
    }
  }
  return {threshold, static_cast<double>(miss) / n_t, static_cast<double>(fa) / n_n};
}

inline std::vector<RatePoint> sweep_all_thresholds(const std::vector<double>& scores,
                                                   const std::vector<int>& labels) {
  std::vector<double> uniq(scores);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<RatePoint> pts;
  pts.push_back(count_rates(scores, labels, -inf));
  for (double t : uniq) pts.push_back(count_rates(scores, labels, t));
  pts.push_back(count_rates(scores, labels, inf));
  return pts;
}

inline double eer_percent(const std::vector<double>& scores, const std::vector<int>& labels) {
  const auto pts = sweep_all_thresholds(scores, labels);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double diff = pts[i].fnr - pts[i].fpr;
    if (diff == 0.0) return 100.0 * pts[i].fnr;
    if (diff > 0.0) {
      const double f0 = pts[i - 1].fnr, f1 = pts[i].fnr;
      const double p0 = pts[i - 1].fpr, p1 = pts[i].fpr;
      const double denom = (f1 - f0) - (p1 - p0);
      const double alpha = denom != 0.0 ? (p0 - f0) / denom : 0.0;
      return 100.0 * (f0 + alpha * (f1 - f0));
    }
  }
  return -1.0;
}

struct MinDcfPoint {
  double value;
  double threshold;
};

inline MinDcfPoint min_dcf(const std::vector<double>& scores, const std::vector<int>& labels,
                           double p_target, double c_miss = 1.0, double c_fa = 1.0) {
  const double miss_w = c_miss * p_target;
  const double fa_w = c_fa * (1.0 - p_target);
  const double divisor = std::min(miss_w, fa_w);
  MinDcfPoint best{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& pt : sweep_all_thresholds(scores, labels)) {
    const double dcf = (miss_w * pt.fnr + fa_w * pt.fpr) / divisor;
    if (dcf < best.value) best = {dcf, pt.threshold};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Finite-difference gradients for the margin loss.
// ---------------------------------------------------------------------------

struct FdGradients {
  std::vector<double> grad_embedding;
  std::vector<double> grad_weights;
};

inline FdGradients fd_gradients(const std::vector<double>& embedding,
                                const rvec::ClassifierHead& head, int label,
                                const rvec::AamConfig& cfg, double step = 1e-4) {
  FdGradients out;
  out.grad_embedding.resize(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    std::vector<double> hi = embedding, lo = embedding;
    hi[i] += step;
    lo[i] -= step;
    out.grad_embedding[i] = (rvec::aam_loss(hi, head, label, cfg).loss -
                             rvec::aam_loss(lo, head, label, cfg).loss) /
                            (2.0 * step);
  }
  out.grad_weights.resize(head.w.size());
  for (std::size_t k = 0; k < head.w.size(); ++k) {
    rvec::ClassifierHead hi = head, lo = head;
    hi.w[k] += step;
    lo.w[k] -= step;
    out.grad_weights[k] = (rvec::aam_loss(embedding, hi, label, cfg).loss -
                           rvec::aam_loss(embedding, lo, label, cfg).loss) /
                          (2.0 * step);
  }
  return out;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff2 += (a[i] - b[i]) * (a[i] - b[i]);
    norm2 += b[i] * b[i];
  }
  return std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-300);
}

// ---------------------------------------------------------------------------
// Standard normalized-softmax cross-entropy gradient, coded directly from the
// closed form: grad_x = (s/|x|) * sum_j (p_j - [j=y]) (w_hat_j - cos_j x_hat),
// grad_wj = (s/|w_j|) * (p_j - [j=y]) (x_hat - cos_j w_hat_j).
// ---------------------------------------------------------------------------

struct SoftmaxGrad {
  double loss;
  std::vector<double> grad_embedding;
  std::vector<double> grad_weights;
};

inline SoftmaxGrad softmax_grad(const std::vector<double>& x, const rvec::ClassifierHead& head,
                                int label, double scale) {
  const int n = head.num_classes, dim = head.dim;
  double xn = 0.0;
  for (double v : x) xn += v * v;
  xn = std::sqrt(xn);
  std::vector<double> xhat(dim);
  for (int i = 0; i < dim; ++i) xhat[i] = x[i] / xn;

  std::vector<double> wn(n), cosines(n);
  for (int j = 0; j < n; ++j) {
    const double* wj = head.row(j);
    double nw = 0.0, dot = 0.0;
    for (int i = 0; i < dim; ++i) {
      nw += wj[i] * wj[i];
      dot += wj[i] * xhat[i];
    }
    wn[j] = std::sqrt(nw);
    cosines[j] = dot / wn[j];
  }
  double zmax = -1e300;
  for (int j = 0; j < n; ++j) zmax = std::max(zmax, scale * cosines[j]);
  double lse = 0.0;
  std::vector<double> p(n);
  for (int j = 0; j < n; ++j) {
    p[j] = std::exp(scale * cosines[j] - zmax);
    lse += p[j];
  }
  for (int j = 0; j < n; ++j) p[j] /= lse;

  SoftmaxGrad out;
  out.loss = zmax + std::log(lse) - scale * cosines[label];
  out.grad_embedding.assign(dim, 0.0);
  out.grad_weights.assign(static_cast<std::size_t>(n) * dim, 0.0);
  for (int j = 0; j < n; ++j) {
    const double gj = (p[j] - (j == label ? 1.0 : 0.0)) * scale;
    const double* wj = head.row(j);
    for (int i = 0; i < dim; ++i) {
      const double what = wj[i] / wn[j];
      out.grad_embedding[i] += gj * (what - cosines[j] * xhat[i]) / xn;
      out.grad_weights[static_cast<std::size_t>(j) * dim + i] =
          gj * (xhat[i] - cosines[j] * what) / wn[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Misc numeric oracles.
// ---------------------------------------------------------------------------

inline std::vector<double> direct_convolve(const std::vector<float>& a,
                                           const std::vector<float>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      out[i + j] += static_cast<double>(a[i]) * b[j];
  return out;
}

inline double naive_cell_mean(const rvec::Tensor3& x, int ci, int fi) {
  double s = 0.0;
  for (int ti = 0; ti < x.t; ++ti) s += x.at(ci, fi, ti);
  return s / x.t;
}

/// Full-sort retrieval reference: every pool score, sorted by (-score, id).
inline std::vector<std::pair<std::string, double>> full_sort_ranking(
    const std::vector<float>& query,
    const std::vector<std::pair<std::string, std::vector<float>>>& pool, int k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& [id, vec] : pool) {
    double dot = 0.0, nq = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < vec.size(); ++i) {
      dot += static_cast<double>(query[i]) * vec[i];
      nq += static_cast<double>(query[i]) * query[i];
      nv += static_cast<double>(vec[i]) * vec[i];
    }
    all.emplace_back(id, dot / std::sqrt(nq * nv));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  return all;
}

/// Nearest head row by cosine; the brute-force classifier used to grade
/// trained heads.
inline int nearest_row(const std::vector<double>& x, const rvec::ClassifierHead& head) {
  int best = -1;
  double best_cos = -2.0;
  for (int j = 0; j < head.num_classes; ++j) {
    const double* wj = head.row(j);
    double dot = 0.0, nw = 0.0, nx = 0.0;
    for (int i = 0; i < head.dim; ++i) {
      dot += wj[i] * x[i];
      nw += wj[i] * wj[i];
      nx += x[i] * x[i];
    }
    const double c = dot / std::sqrt(nw * nx);
    if (c > best_cos) {
      best_cos = c;
      best = j;
    }
  }
  return best;
}

}  // namespace oracles

#endif  // RVEC_TESTS_ORACLES_HPP_
