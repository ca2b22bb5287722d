// rvec/aam.hpp

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

#ifndef RVEC_AAM_HPP_
#define RVEC_AAM_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "rvec/checkpoint.hpp"
#include "rvec/common.hpp"
#include "rvec/fbank.hpp"

namespace rvec {

/// Additive-angular-margin softmax configuration. The target-class logit is
/// s*cos(theta_y + m); all other logits are s*cos(theta_j).
struct AamConfig {
  double scale = 32.0;
  double margin = 0.2;
  int num_classes = 0;

  void validate() const {
    RVEC_CHECK(scale > 0.0, "AamConfig: scale must be positive");
    RVEC_CHECK(margin >= 0.0 && margin < M_PI / 2.0,
               "AamConfig: margin must lie in [0, pi/2), got ", margin);
    RVEC_CHECK(num_classes >= 2, "AamConfig: need at least 2 classes");
  }
};

/// One training stage: classification (long, short segments, small margin)
/// or large-margin finetuning (short, long segments, margin 0.5, no speed
/// perturbation).
struct StagePlan {
  int epochs = 165;
  double segment_seconds = 2.0;
  double lr_init = 0.1;
  double lr_final = 0.00005;
  bool speed_perturb_enabled = true;

  static StagePlan stage1() { return StagePlan{}; }
  static StagePlan stage2() { return StagePlan{5, 6.0, 0.0001, 0.000025, false}; }

  void validate() const {
    RVEC_CHECK(epochs >= 0, "StagePlan: negative epoch count");
    RVEC_CHECK(lr_init >= lr_final && lr_final > 0.0,
               "StagePlan: requires lr_init >= lr_final > 0");
  }
};

/// Class-weight matrix of the AAM classifier. Rows are L2-normalized on use,
/// not in storage.
struct ClassifierHead {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> w;  // [num_classes][dim]

  double* row(int j) { return w.data() + static_cast<std::size_t>(j) * dim; }
  const double* row(int j) const { return w.data() + static_cast<std::size_t>(j) * dim; }
};

inline ClassifierHead make_head(int num_classes, int dim, Rng& rng) {
  ClassifierHead head;
  head.num_classes = num_classes;
  head.dim = dim;
  head.w.resize(static_cast<std::size_t>(num_classes) * dim);
  const double std_dev = std::sqrt(1.0 / dim);
  for (auto& x : head.w) x = rng.normal() * std_dev;
  return head;
}

/// Speed-perturbed copies count as new speakers: ratio 1.0 keeps the index,
/// 0.9 offsets by base_speakers and 1.1 by 2*base_speakers, tripling the
/// class count.
inline int expand_speed_label(int speaker_index, double ratio, int base_speakers) {
  RVEC_CHECK(speaker_index >= 0 && speaker_index < base_speakers,
             "expand_speed_label: speaker index ", speaker_index, " out of range [0, ",
             base_speakers, ")");
  if (ratio == 1.0) return speaker_index;
  if (ratio == 0.9) return speaker_index + base_speakers;
  if (ratio == 1.1) return speaker_index + 2 * base_speakers;
  fail("expand_speed_label: unknown ratio ", ratio, " (expected 0.9, 1.0 or 1.1)");
}

struct AamLossResult {
  double loss = 0.0;
  std::vector<double> logits;
};

namespace detail {

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct AamForward {
  double x_norm = 0.0;
  std::vector<double> xhat;
  std::vector<double> w_norms;   // per row
  std::vector<double> cosines;   // clamped to [-1, 1]
  std::vector<double> logits;
  std::vector<double> probs;
  bool margin_in_range = true;   // theta_y + m <= pi
  double sin_y = 0.0;
};

inline AamForward aam_forward(std::span<const double> embedding, const ClassifierHead& head,
                              int label, const AamConfig& cfg) {
  cfg.validate();
  RVEC_CHECK(head.num_classes == cfg.num_classes, "aam: head/config class count mismatch");
  RVEC_CHECK(static_cast<int>(embedding.size()) == head.dim,
             "aam: embedding dim ", embedding.size(), " != head dim ", head.dim);
  RVEC_CHECK(label >= 0 && label < cfg.num_classes, "aam: label ", label, " out of range");

  AamForward fw;
  fw.x_norm = l2_norm(embedding);
  RVEC_CHECK(fw.x_norm > 0.0, "aam: zero embedding");
  fw.xhat.resize(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) fw.xhat[i] = embedding[i] / fw.x_norm;

  const int n = head.num_classes;
  fw.w_norms.resize(n);
  fw.cosines.resize(n);
  for (int j = 0; j < n; ++j) {
    const double* wj = head.row(j);
    double wn = 0.0, dot = 0.0;
    for (int i = 0; i < head.dim; ++i) {
      wn += wj[i] * wj[i];
      dot += wj[i] * fw.xhat[i];
    }
    wn = std::sqrt(wn);
    RVEC_CHECK(wn > 0.0, "aam: zero weight row ", j);
    fw.w_norms[j] = wn;
    fw.cosines[j] = std::clamp(dot / wn, -1.0, 1.0);
  }

  const double cos_m = std::cos(cfg.margin);
  const double sin_m = std::sin(cfg.margin);
  const double cos_y = fw.cosines[label];
  fw.sin_y = std::sqrt(std::max(1.0 - cos_y * cos_y, 0.0));
  // theta_y + m stays within [0, pi] iff cos(theta_y) > cos(pi - m); outside
  // that range fall back to the linear penalty cos(theta) - m*sin(m).
  fw.margin_in_range = cos_y > -cos_m;
  const double phi = fw.margin_in_range ? cos_y * cos_m - fw.sin_y * sin_m
                                        : cos_y - cfg.margin * sin_m;

  fw.logits.resize(n);
  for (int j = 0; j < n; ++j) fw.logits[j] = cfg.scale * fw.cosines[j];
  fw.logits[label] = cfg.scale * phi;

  double zmax = *std::max_element(fw.logits.begin(), fw.logits.end());
  double sum = 0.0;
  fw.probs.resize(n);
  for (int j = 0; j < n; ++j) {
    fw.probs[j] = std::exp(fw.logits[j] - zmax);
    sum += fw.probs[j];
  }
  for (int j = 0; j < n; ++j) fw.probs[j] /= sum;
  return fw;
}

}  // namespace detail

/// Cross-entropy of the margin-scaled softmax. With margin 0 this reduces to
/// scaled-softmax cross-entropy over cosine logits exactly.
inline AamLossResult aam_loss(std::span<const double> embedding, const ClassifierHead& head,
                              int label, const AamConfig& cfg) {
  detail::AamForward fw = detail::aam_forward(embedding, head, label, cfg);
  double zmax = *std::max_element(fw.logits.begin(), fw.logits.end());
  double lse = 0.0;
  for (double z : fw.logits) lse += std::exp(z - zmax);
  AamLossResult res;
  res.loss = zmax + std::log(lse) - fw.logits[label];
  res.logits = std::move(fw.logits);
  return res;
}

struct AamGradients {
  std::vector<double> grad_embedding;  // d loss / d unnormalized embedding
  std::vector<double> grad_weights;    // d loss / d unnormalized head rows, [classes][dim]
  double loss = 0.0;
};

/// Exact analytic gradient of aam_loss with respect to the unnormalized
/// embedding and head rows, chained through both L2 normalizations and the
/// angle-margin term. At the cos domain edge the target derivative uses a
/// clamped sin(theta_y).
inline AamGradients aam_grad(std::span<const double> embedding, const ClassifierHead& head,
                             int label, const AamConfig& cfg) {
  detail::AamForward fw = detail::aam_forward(embedding, head, label, cfg);
  const int n = head.num_classes;
  const int dim = head.dim;

  // d loss / d logit
  std::vector<double> gz = fw.probs;
  gz[label] -= 1.0;

  // d logit / d cosine
  std::vector<double> gc(n);
  for (int j = 0; j < n; ++j) gc[j] = gz[j] * cfg.scale;
  if (fw.margin_in_range) {
    const double sin_y = std::max(fw.sin_y, 1e-9);
    gc[label] *= std::cos(cfg.margin) + fw.cosines[label] / sin_y * std::sin(cfg.margin);
  }
  // else: phi = cos - m*sin(m), derivative 1

  AamGradients out;
  out.grad_embedding.assign(dim, 0.0);
  out.grad_weights.assign(static_cast<std::size_t>(n) * dim, 0.0);
  for (int j = 0; j < n; ++j) {
    const double* wj = head.row(j);
    const double wn = fw.w_norms[j];
    const double cj = fw.cosines[j];
    double* gw = out.grad_weights.data() + static_cast<std::size_t>(j) * dim;
    for (int i = 0; i < dim; ++i) {
      const double what = wj[i] / wn;
      out.grad_embedding[i] += gc[j] * (what - cj * fw.xhat[i]) / fw.x_norm;
      gw[i] = gc[j] * (fw.xhat[i] - cj * what) / wn;
    }
  }
  double zmax = *std::max_element(fw.logits.begin(), fw.logits.end());
  double lse = 0.0;
  for (double z : fw.logits) lse += std::exp(z - zmax);
  out.loss = zmax + std::log(lse) - fw.logits[label];
  return out;
}

/// Exponential decay: lr(epoch) = lr_init * (lr_final/lr_init)^(epoch/epochs).
/// Endpoints are exact; log(lr) is affine in epoch.
inline double lr_at(double epoch, const StagePlan& plan) {
  plan.validate();
  RVEC_CHECK(epoch >= 0.0 && epoch <= plan.epochs, "lr_at: epoch ", epoch,
             " outside [0, ", plan.epochs, "]");
  if (plan.lr_init == plan.lr_final) return plan.lr_init;
  if (epoch == 0.0) return plan.lr_init;
  if (epoch == static_cast<double>(plan.epochs)) return plan.lr_final;
  return plan.lr_init *
         std::pow(plan.lr_final / plan.lr_init, epoch / static_cast<double>(plan.epochs));
}

/// Random contiguous training segment of round(seconds/frame_shift) frames.
/// Utterances shorter than the segment wrap around cyclically.
inline FeatureMatrix sample_segment(const FeatureMatrix& features, double seconds,
                                    double frame_shift_seconds, Rng& rng) {
  RVEC_CHECK(features.rows >= 1, "sample_segment: empty features");
  const int len = static_cast<int>(std::lround(seconds / frame_shift_seconds));
  RVEC_CHECK(len >= 1, "sample_segment: degenerate segment length");
  FeatureMatrix out;
  out.rows = len;
  out.cols = features.cols;
  out.frame_shift_seconds = features.frame_shift_seconds;
  out.data.resize(static_cast<std::size_t>(len) * features.cols);
  const int T = features.rows;
  const int offset = T >= len ? static_cast<int>(rng.uniform_index(T - len + 1))
                              : static_cast<int>(rng.uniform_index(T));
  for (int i = 0; i < len; ++i) {
    const int src = (offset + i) % T;
    std::copy_n(features.row(src), features.cols, out.data.begin() +
                                                      static_cast<std::size_t>(i) * features.cols);
  }
  return out;
}

struct TrainOptions {
  int batch_size = 128;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

struct TrainResult {
  ClassifierHead head;
  std::vector<double> epoch_loss;  // mean loss per epoch
  std::vector<double> epoch_lr;
};

/// Keep only the first base_classes rows — the identity-ratio classes — when
/// moving from the speed-expanded stage to finetuning.
inline ClassifierHead restrict_head(const ClassifierHead& head, int base_classes) {
  RVEC_CHECK(base_classes >= 1 && base_classes <= head.num_classes,
             "restrict_head: bad class count ", base_classes);
  ClassifierHead out;
  out.num_classes = base_classes;
  out.dim = head.dim;
  out.w.assign(head.w.begin(), head.w.begin() + static_cast<std::size_t>(base_classes) * head.dim);
  return out;
}

/// Mini-batch SGD with momentum and weight decay over the AAM objective on
/// fixed embeddings. Deterministic for a given seed: initialization, epoch
/// shuffles and the in-batch accumulation order are all pinned.
inline TrainResult train_head(const std::vector<std::pair<std::vector<double>, int>>& dataset,
                              const StagePlan& plan, const AamConfig& cfg, std::uint64_t seed,
                              const ClassifierHead* init = nullptr,
                              const TrainOptions& opts = {}) {
  plan.validate();
  cfg.validate();
  RVEC_CHECK(!dataset.empty(), "train_head: empty dataset");
  const int dim = static_cast<int>(dataset.front().first.size());
  for (const auto& [x, y] : dataset) {
    RVEC_CHECK(static_cast<int>(x.size()) == dim, "train_head: inconsistent embedding dims");
    RVEC_CHECK(y >= 0 && y < cfg.num_classes, "train_head: class index ", y,
               " out of range [0, ", cfg.num_classes, ")");
  }

  Rng rng(seed);
  TrainResult res;
  if (init) {
    RVEC_CHECK(init->num_classes == cfg.num_classes && init->dim == dim,
               "train_head: init head shape mismatch");
    res.head = *init;
  } else {
    res.head = make_head(cfg.num_classes, dim, rng);
  }

  std::vector<double> velocity(res.head.w.size(), 0.0);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < plan.epochs; ++epoch) {
    const double lr = lr_at(epoch, plan);
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + opts.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      std::vector<double> grad(res.head.w.size(), 0.0);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& [x, y] = dataset[order[i]];
        AamGradients g = aam_grad(x, res.head, y, cfg);
        loss_sum += g.loss;
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g.grad_weights[k];
      }
      for (std::size_t k = 0; k < grad.size(); ++k) {
        const double g = grad[k] * inv_batch + opts.weight_decay * res.head.w[k];
        velocity[k] = opts.momentum * velocity[k] + g;
        res.head.w[k] -= lr * velocity[k];
      }
    }
    res.epoch_loss.push_back(loss_sum / static_cast<double>(dataset.size()));
    res.epoch_lr.push_back(lr);
  }
  return res;
}

/// Loss trace: one line per epoch, "epoch<TAB>lr<TAB>mean_loss".
inline std::string format_loss_trace(const TrainResult& res) {
  std::string out;
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
    out += detail::cat(e, "\t", res.epoch_lr[e], "\t", res.epoch_loss[e], "\n");
  return out;
}

inline void save_head(const std::string& path, const ClassifierHead& head) {
  TensorFile tf;
  tf.spec_code = 0;
  NamedTensor t;
  t.name = "head.w";
  t.dims = {static_cast<std::uint32_t>(head.num_classes), static_cast<std::uint32_t>(head.dim)};
  t.data.resize(head.w.size());
  for (std::size_t i = 0; i < head.w.size(); ++i) t.data[i] = static_cast<float>(head.w[i]);
  tf.tensors.push_back(std::move(t));
  write_tensor_file(path, tf);
}

inline ClassifierHead load_head(const std::string& path) {
  TensorFile tf = read_tensor_file(path);
  const NamedTensor& t = tf.get("head.w");
  RVEC_CHECK(t.dims.size() == 2, "load_head: head.w must be rank 2");
  ClassifierHead head;
  head.num_classes = static_cast<int>(t.dims[0]);
  head.dim = static_cast<int>(t.dims[1]);
  head.w.assign(t.data.begin(), t.data.end());
  return head;
}

}  // namespace rvec

#endif  // RVEC_AAM_HPP_
