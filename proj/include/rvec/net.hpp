// rvec/net.hpp

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

#ifndef RVEC_NET_HPP_
#define RVEC_NET_HPP_

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rvec/checkpoint.hpp"
#include "rvec/common.hpp"
#include "rvec/fbank.hpp"

namespace rvec {

enum class BlockKind { kBasic, kBottleneck };

/// Architecture description for the residual speaker embedding extractors.
/// The basic kind with depths (3,4,6,3) is the 34-layer extractor; the
/// bottleneck kinds cover the deeper 152/221/293-layer variants.
struct NetSpec {
  BlockKind kind = BlockKind::kBasic;
  std::array<int, 4> depths{3, 4, 6, 3};
  int base_width = 32;
  int emb_dim = 256;
  int input_mels = 80;

  static NetSpec resnet34() { return NetSpec{BlockKind::kBasic, {3, 4, 6, 3}}; }
  static NetSpec resnet152() { return NetSpec{BlockKind::kBottleneck, {3, 8, 36, 3}}; }
  static NetSpec resnet221() { return NetSpec{BlockKind::kBottleneck, {6, 16, 48, 3}}; }
  static NetSpec resnet293() { return NetSpec{BlockKind::kBottleneck, {10, 20, 64, 3}}; }

  static NetSpec by_code(int code) {
    switch (code) {
      case 34: return resnet34();
      case 152: return resnet152();
      case 221: return resnet221();
      case 293: return resnet293();
      default: fail("NetSpec: unknown spec code ", code, " (expected 34, 152, 221 or 293)");
    }
  }

  int code() const {
    if (kind == BlockKind::kBasic && depths == std::array<int, 4>{3, 4, 6, 3}) return 34;
    if (kind == BlockKind::kBottleneck) {
      if (depths == std::array<int, 4>{3, 8, 36, 3}) return 152;
      if (depths == std::array<int, 4>{6, 16, 48, 3}) return 221;
      if (depths == std::array<int, 4>{10, 20, 64, 3}) return 293;
    }
    return 0;
  }

  int expansion() const { return kind == BlockKind::kBasic ? 1 : 4; }
  int stage_width(int stage) const { return base_width << stage; }
  int stage_out_channels(int stage) const { return stage_width(stage) * expansion(); }
  /// Pooled length after statistics pooling: 2 * (mels/8) * stage-4 channels.
  int flatten_dim() const { return 2 * (input_mels / 8) * stage_out_channels(3); }

  void validate() const {
    for (int d : depths) RVEC_CHECK(d >= 1, "NetSpec: stage depths must be >= 1");
    RVEC_CHECK(base_width >= 1, "NetSpec: base_width must be >= 1");
    RVEC_CHECK(emb_dim >= 1, "NetSpec: emb_dim must be >= 1");
    RVEC_CHECK(input_mels >= 8 && input_mels % 8 == 0,
               "NetSpec: input_mels must be a positive multiple of 8, got ", input_mels);
  }
};

/// Channels x frequency x time feature map, contiguous in time.
struct Tensor3 {
  int c = 0, f = 0, t = 0;
  std::vector<float> v;

  Tensor3() = default;
  Tensor3(int c_, int f_, int t_)
      : c(c_), f(f_), t(t_), v(static_cast<std::size_t>(c_) * f_ * t_, 0.0f) {}

  float* plane(int ci) { return v.data() + static_cast<std::size_t>(ci) * f * t; }
  const float* plane(int ci) const { return v.data() + static_cast<std::size_t>(ci) * f * t; }
  float at(int ci, int fi, int ti) const {
    return v[(static_cast<std::size_t>(ci) * f + fi) * t + ti];
  }
};

struct Conv2d {
  int in_c = 0, out_c = 0, ksize = 3, stride = 1, pad = 1;
  std::vector<float> w;  // [out_c][in_c][k][k]

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_c) * in_c * ksize * ksize;
  }
};

struct BatchNorm {
  int channels = 0;
  std::vector<float> gamma, beta, mean, var;
  float eps = 1e-5f;
};

struct Linear {
  int in_dim = 0, out_dim = 0;
  std::vector<float> w;  // [out][in]
  std::vector<float> b;
};

struct ResidualBlock {
  BlockKind kind = BlockKind::kBasic;
  int stride = 1;
  std::vector<Conv2d> convs;     // 2 for basic, 3 for bottleneck
  std::vector<BatchNorm> bns;
  bool has_proj = false;
  Conv2d proj;
  BatchNorm proj_bn;
};

/// Instantiated network. Immutable after construction; forward passes over
/// distinct inputs may run concurrently.
struct Network {
  NetSpec spec;
  Conv2d stem;
  BatchNorm stem_bn;
  std::vector<std::vector<ResidualBlock>> stages;
  Linear emb;
  std::uint64_t seed = 0;
};

struct Embedding {
  std::vector<float> vector;
  std::string utterance_id;
  std::string speaker_id;
};

/// Per-stage output shapes recorded during a forward pass.
struct StageTrace {
  std::array<int, 3> stem_shape{};                   // {F, T, C}
  std::array<std::array<int, 3>, 4> stage_shape{};   // {F, T, C} after each stage
  int pooled_len = 0;
  int emb_dim = 0;
};

namespace detail {

inline Conv2d make_conv(int in_c, int out_c, int ksize, int stride, Rng& rng) {
  Conv2d cv;
  cv.in_c = in_c;
  cv.out_c = out_c;
  cv.ksize = ksize;
  cv.stride = stride;
  cv.pad = ksize / 2;
  cv.w.resize(cv.weight_count());
  const double std_dev = std::sqrt(2.0 / (static_cast<double>(in_c) * ksize * ksize));
  for (auto& x : cv.w) x = static_cast<float>(rng.normal() * std_dev);
  return cv;
}

inline BatchNorm make_bn(int channels) {
  BatchNorm bn;
  bn.channels = channels;
  bn.gamma.assign(channels, 1.0f);
  bn.beta.assign(channels, 0.0f);
  bn.mean.assign(channels, 0.0f);
  bn.var.assign(channels, 1.0f);
  return bn;
}

inline int conv_out_extent(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

/// Direct 2-D convolution, accumulation order fixed per output element.
inline Tensor3 conv2d(const Conv2d& cv, const Tensor3& in) {
  const int k = cv.ksize, s = cv.stride, p = cv.pad;
  const int fo_n = conv_out_extent(in.f, k, s, p);
  const int to_n = conv_out_extent(in.t, k, s, p);
  Tensor3 out(cv.out_c, fo_n, to_n);
#pragma omp parallel for schedule(static)
  for (int co = 0; co < cv.out_c; ++co) {
    float* op = out.plane(co);
    for (int ci = 0; ci < cv.in_c; ++ci) {
      const float* ip = in.plane(ci);
      const float* wp = cv.w.data() + (static_cast<std::size_t>(co) * cv.in_c + ci) * k * k;
      for (int kf = 0; kf < k; ++kf) {
        // valid output rows: 0 <= fo*s + kf - p < in.f
        int fo_lo = p > kf ? (p - kf + s - 1) / s : 0;
        int fo_hi = std::min(fo_n - 1, (in.f - 1 + p - kf) / s);
        for (int kt = 0; kt < k; ++kt) {
          const float wv = wp[kf * k + kt];
          int to_lo = p > kt ? (p - kt + s - 1) / s : 0;
          int to_hi = std::min(to_n - 1, (in.t - 1 + p - kt) / s);
          if (to_hi < to_lo) continue;
          const int span = to_hi - to_lo + 1;
          for (int fu = fo_lo; fu <= fo_hi; ++fu) {
            const float* irow =
                ip + static_cast<std::size_t>(fu * s + kf - p) * in.t + (to_lo * s + kt - p);
            float* orow = op + static_cast<std::size_t>(fu) * to_n + to_lo;
            if (s == 1) {
              for (int tu = 0; tu < span; ++tu) orow[tu] += wv * irow[tu];
            } else {
              for (int tu = 0; tu < span; ++tu) orow[tu] += wv * irow[tu * s];
            }
          }
        }
      }
    }
  }
  return out;
}

/// Inference-mode batchnorm with frozen running statistics.
inline void bn_inplace(const BatchNorm& bn, Tensor3& x) {
  RVEC_CHECK(bn.channels == x.c, "batchnorm: channel mismatch");
  for (int ci = 0; ci < x.c; ++ci) {
    const float scale = bn.gamma[ci] / std::sqrt(bn.var[ci] + bn.eps);
    const float shift = bn.beta[ci] - bn.mean[ci] * scale;
    float* p = x.plane(ci);
    const std::size_t n = static_cast<std::size_t>(x.f) * x.t;
    for (std::size_t i = 0; i < n; ++i) p[i] = p[i] * scale + shift;
  }
}

inline void relu_inplace(Tensor3& x) {
  for (auto& v : x.v) v = v > 0.0f ? v : 0.0f;
}

inline void add_inplace(Tensor3& x, const Tensor3& y) {
  RVEC_CHECK(x.v.size() == y.v.size(), "residual add: shape mismatch");
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] += y.v[i];
}

inline Tensor3 block_forward(const ResidualBlock& blk, const Tensor3& in) {
  Tensor3 h = conv2d(blk.convs[0], in);
  bn_inplace(blk.bns[0], h);
  relu_inplace(h);
  h = conv2d(blk.convs[1], h);
  bn_inplace(blk.bns[1], h);
  if (blk.kind == BlockKind::kBottleneck) {
    relu_inplace(h);
    h = conv2d(blk.convs[2], h);
    bn_inplace(blk.bns[2], h);
  }
  if (blk.has_proj) {
    Tensor3 sc = conv2d(blk.proj, in);
    bn_inplace(blk.proj_bn, sc);
    add_inplace(h, sc);
  } else {
    add_inplace(h, in);
  }
  relu_inplace(h);
  return h;
}

inline ResidualBlock make_block(BlockKind kind, int in_c, int width, int expansion,
                                int stride, Rng& rng) {
  ResidualBlock blk;
  blk.kind = kind;
  blk.stride = stride;
  const int out_c = width * expansion;
  if (kind == BlockKind::kBasic) {
    blk.convs.push_back(make_conv(in_c, width, 3, stride, rng));
    blk.convs.push_back(make_conv(width, width, 3, 1, rng));
    blk.bns.push_back(make_bn(width));
    blk.bns.push_back(make_bn(width));
  } else {
    // 1x1 reduce, 3x3 (carries the stride), 1x1 expand
    blk.convs.push_back(make_conv(in_c, width, 1, 1, rng));
    blk.convs.push_back(make_conv(width, width, 3, stride, rng));
    blk.convs.push_back(make_conv(width, out_c, 1, 1, rng));
    blk.bns.push_back(make_bn(width));
    blk.bns.push_back(make_bn(width));
    blk.bns.push_back(make_bn(out_c));
  }
  if (stride != 1 || in_c != out_c) {
    blk.has_proj = true;
    blk.proj = make_conv(in_c, out_c, 1, stride, rng);
    blk.proj_bn = make_bn(out_c);
  }
  return blk;
}

}  // namespace detail

/// Build a network with deterministic He-style initialization from the seed.
inline Network build_network(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Network net;
  net.spec = spec;
  net.seed = seed;
  net.stem = detail::make_conv(1, spec.base_width, 3, 1, rng);
  net.stem_bn = detail::make_bn(spec.base_width);

  int in_c = spec.base_width;
  net.stages.resize(4);
  for (int s = 0; s < 4; ++s) {
    const int width = spec.stage_width(s);
    const int out_c = spec.stage_out_channels(s);
    const int stage_stride = s == 0 ? 1 : 2;
    for (int b = 0; b < spec.depths[s]; ++b) {
      const int stride = b == 0 ? stage_stride : 1;
      net.stages[s].push_back(detail::make_block(spec.kind, in_c, width, spec.expansion(),
                                                 stride, rng));
      in_c = out_c;
    }
  }

  net.emb.in_dim = spec.flatten_dim();
  net.emb.out_dim = spec.emb_dim;
  net.emb.w.resize(static_cast<std::size_t>(net.emb.out_dim) * net.emb.in_dim);
  const double std_dev = std::sqrt(1.0 / net.emb.in_dim);
  for (auto& x : net.emb.w) x = static_cast<float>(rng.normal() * std_dev);
  net.emb.b.assign(net.emb.out_dim, 0.0f);
  return net;
}

/// Statistics pooling: per (frequency, channel) cell, mean and population
/// standard deviation over time (epsilon 1e-10 inside the square root).
/// Output is the mean block followed by the std block, each F x C row-major,
/// giving length 2*F*C.
inline std::vector<float> stats_pool(const Tensor3& x) {
  RVEC_CHECK(x.t >= 1, "stats_pool: empty time axis");
  const std::size_t fc = static_cast<std::size_t>(x.f) * x.c;
  std::vector<float> out(2 * fc);
  for (int ci = 0; ci < x.c; ++ci) {
    const float* p = x.plane(ci);
    for (int fi = 0; fi < x.f; ++fi) {
      const float* row = p + static_cast<std::size_t>(fi) * x.t;
      double mu = 0.0;
      for (int ti = 0; ti < x.t; ++ti) mu += row[ti];
      mu /= x.t;
      double var = 0.0;
      for (int ti = 0; ti < x.t; ++ti) var += (row[ti] - mu) * (row[ti] - mu);
      var /= x.t;
      const std::size_t cell = static_cast<std::size_t>(fi) * x.c + ci;
      out[cell] = static_cast<float>(mu);
      out[fc + cell] = static_cast<float>(std::sqrt(std::max(var, 0.0) + 1e-10));
    }
  }
  return out;
}

/// Forward pass: features (T x mels) -> 256-dim embedding. Requires T >= 8 so
/// the time axis survives the three stride-2 stages.
inline Embedding forward(const Network& net, const FeatureMatrix& features,
                         StageTrace* trace = nullptr) {
  RVEC_CHECK(features.rows >= 8,
             "forward: input must have at least 8 frames, got ", features.rows);
  RVEC_CHECK(features.cols == net.spec.input_mels, "forward: expected ", net.spec.input_mels,
             " feature dims, got ", features.cols);

  Tensor3 x(1, features.cols, features.rows);
  for (int t = 0; t < features.rows; ++t)
    for (int d = 0; d < features.cols; ++d)
      x.v[static_cast<std::size_t>(d) * features.rows + t] = features.at(t, d);

  x = detail::conv2d(net.stem, x);
  detail::bn_inplace(net.stem_bn, x);
  detail::relu_inplace(x);
  if (trace) trace->stem_shape = {x.f, x.t, x.c};

  for (int s = 0; s < 4; ++s) {
    for (const auto& blk : net.stages[s]) x = detail::block_forward(blk, x);
    if (trace) trace->stage_shape[s] = {x.f, x.t, x.c};
  }

  std::vector<float> pooled = stats_pool(x);
  if (trace) trace->pooled_len = static_cast<int>(pooled.size());

  Embedding e;
  e.vector.resize(net.emb.out_dim);
  for (int o = 0; o < net.emb.out_dim; ++o) {
    const float* wrow = net.emb.w.data() + static_cast<std::size_t>(o) * net.emb.in_dim;
    double acc = net.emb.b[o];
    for (int i = 0; i < net.emb.in_dim; ++i) acc += static_cast<double>(wrow[i]) * pooled[i];
    e.vector[o] = static_cast<float>(acc);
  }
  if (trace) trace->emb_dim = static_cast<int>(e.vector.size());
  return e;
}

inline std::vector<Embedding> forward_batch(const Network& net,
                                            const std::vector<FeatureMatrix>& batch) {
  std::vector<Embedding> out;
  out.reserve(batch.size());
  for (const auto& fm : batch) out.push_back(forward(net, fm));
  return out;
}

/// Learnable parameter count: conv kernels, batchnorm affine pairs and,
/// unless excluded, the embedding projection. Running statistics and the
/// classifier head are not counted.
inline long long param_count(const Network& net, bool include_embedding = true) {
  long long n = 0;
  auto count_conv = [&](const Conv2d& cv) { n += static_cast<long long>(cv.weight_count()); };
  auto count_bn = [&](const BatchNorm& bn) { n += 2LL * bn.channels; };
  count_conv(net.stem);
  count_bn(net.stem_bn);
  for (const auto& stage : net.stages) {
    for (const auto& blk : stage) {
      for (const auto& cv : blk.convs) count_conv(cv);
      for (const auto& bn : blk.bns) count_bn(bn);
      if (blk.has_proj) {
        count_conv(blk.proj);
        count_bn(blk.proj_bn);
      }
    }
  }
  if (include_embedding)
    n += static_cast<long long>(net.emb.w.size()) + static_cast<long long>(net.emb.b.size());
  return n;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace detail {

inline void push_conv(TensorFile& tf, const std::string& name, const Conv2d& cv) {
  tf.tensors.push_back({name + ".w",
                        {static_cast<std::uint32_t>(cv.out_c), static_cast<std::uint32_t>(cv.in_c),
                         static_cast<std::uint32_t>(cv.ksize), static_cast<std::uint32_t>(cv.ksize)},
                        cv.w});
}

inline void push_bn(TensorFile& tf, const std::string& name, const BatchNorm& bn) {
  const std::uint32_t c = static_cast<std::uint32_t>(bn.channels);
  tf.tensors.push_back({name + ".gamma", {c}, bn.gamma});
  tf.tensors.push_back({name + ".beta", {c}, bn.beta});
  tf.tensors.push_back({name + ".mean", {c}, bn.mean});
  tf.tensors.push_back({name + ".var", {c}, bn.var});
}

inline void load_conv(const TensorFile& tf, const std::string& name, Conv2d& cv) {
  const NamedTensor& t = tf.get(name + ".w");
  RVEC_CHECK(t.data.size() == cv.weight_count(), "checkpoint: size mismatch for ", name);
  cv.w = t.data;
}

inline void load_bn(const TensorFile& tf, const std::string& name, BatchNorm& bn) {
  auto pull = [&](const char* part, std::vector<float>& dst) {
    const NamedTensor& t = tf.get(name + "." + part);
    RVEC_CHECK(t.data.size() == static_cast<std::size_t>(bn.channels),
               "checkpoint: size mismatch for ", name, ".", part);
    dst = t.data;
  };
  pull("gamma", bn.gamma);
  pull("beta", bn.beta);
  pull("mean", bn.mean);
  pull("var", bn.var);
}

}  // namespace detail

inline void save_network(const std::string& path, const Network& net) {
  TensorFile tf;
  tf.spec_code = static_cast<std::uint32_t>(net.spec.code());
  tf.tensors.push_back(
      {"spec.meta",
       {8},
       {static_cast<float>(net.spec.kind == BlockKind::kBottleneck ? 1 : 0),
        static_cast<float>(net.spec.depths[0]), static_cast<float>(net.spec.depths[1]),
        static_cast<float>(net.spec.depths[2]), static_cast<float>(net.spec.depths[3]),
        static_cast<float>(net.spec.base_width), static_cast<float>(net.spec.emb_dim),
        static_cast<float>(net.spec.input_mels)}});
  detail::push_conv(tf, "stem.conv", net.stem);
  detail::push_bn(tf, "stem.bn", net.stem_bn);
  for (std::size_t s = 0; s < net.stages.size(); ++s) {
    for (std::size_t b = 0; b < net.stages[s].size(); ++b) {
      const auto& blk = net.stages[s][b];
      const std::string base = detail::cat("s", s + 1, ".b", b);
      for (std::size_t c = 0; c < blk.convs.size(); ++c) {
        detail::push_conv(tf, detail::cat(base, ".conv", c + 1), blk.convs[c]);
        detail::push_bn(tf, detail::cat(base, ".bn", c + 1), blk.bns[c]);
      }
      if (blk.has_proj) {
        detail::push_conv(tf, base + ".proj", blk.proj);
        detail::push_bn(tf, base + ".projbn", blk.proj_bn);
      }
    }
  }
  tf.tensors.push_back({"emb.w",
                        {static_cast<std::uint32_t>(net.emb.out_dim),
                         static_cast<std::uint32_t>(net.emb.in_dim)},
                        net.emb.w});
  tf.tensors.push_back({"emb.b", {static_cast<std::uint32_t>(net.emb.out_dim)}, net.emb.b});
  write_tensor_file(path, tf);
}

inline Network load_network(const std::string& path) {
  TensorFile tf = read_tensor_file(path);
  const NamedTensor& meta = tf.get("spec.meta");
  RVEC_CHECK(meta.data.size() == 8, "checkpoint: malformed spec.meta");
  NetSpec spec;
  spec.kind = meta.data[0] != 0.0f ? BlockKind::kBottleneck : BlockKind::kBasic;
  for (int i = 0; i < 4; ++i) spec.depths[i] = static_cast<int>(meta.data[1 + i]);
  spec.base_width = static_cast<int>(meta.data[5]);
  spec.emb_dim = static_cast<int>(meta.data[6]);
  spec.input_mels = static_cast<int>(meta.data[7]);

  Network net = build_network(spec, 0);
  detail::load_conv(tf, "stem.conv", net.stem);
  detail::load_bn(tf, "stem.bn", net.stem_bn);
  for (std::size_t s = 0; s < net.stages.size(); ++s) {
    for (std::size_t b = 0; b < net.stages[s].size(); ++b) {
      auto& blk = net.stages[s][b];
      const std::string base = detail::cat("s", s + 1, ".b", b);
      for (std::size_t c = 0; c < blk.convs.size(); ++c) {
        detail::load_conv(tf, detail::cat(base, ".conv", c + 1), blk.convs[c]);
        detail::load_bn(tf, detail::cat(base, ".bn", c + 1), blk.bns[c]);
      }
      if (blk.has_proj) {
        detail::load_conv(tf, base + ".proj", blk.proj);
        detail::load_bn(tf, base + ".projbn", blk.proj_bn);
      }
    }
  }
  const NamedTensor& ew = tf.get("emb.w");
  RVEC_CHECK(ew.data.size() == net.emb.w.size(), "checkpoint: size mismatch for emb.w");
  net.emb.w = ew.data;
  const NamedTensor& eb = tf.get("emb.b");
  RVEC_CHECK(eb.data.size() == net.emb.b.size(), "checkpoint: size mismatch for emb.b");
  net.emb.b = eb.data;
  return net;
}

}  // namespace rvec

#endif  // RVEC_NET_HPP_
