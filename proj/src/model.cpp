// Copyright 2026 The EEGTCAV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "common.hpp"

namespace eegtcav::model {
namespace {

template <typename S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

constexpr double kNormEps = 1.0e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <typename S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(kInvSqrt2)));
}

template <typename S>
S gelu_grad(S x) {
  const S cdf = S(0.5) * (S(1) + std::erf(x * S(kInvSqrt2)));
  const S pdf = std::exp(S(-0.5) * x * x) * S(kInvSqrt2Pi);
  return cdf + x * pdf;
}

template <typename S>
VecT<S> flatten_rm(const MatT<S>& m) {
  VecT<S> v(m.size());
  Eigen::Index idx = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[idx++] = m(r, c);
  }
  return v;
}

template <typename S>
MatT<S> unflatten_rm(const VecT<S>& v, Eigen::Index rows, Eigen::Index cols) {
  MatT<S> m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[idx++];
  }
  return m;
}

// Strided conv (kernel == stride) as an im2col GEMM. Column t of the patch
// matrix stacks the k input columns of window t, block j holding input
// column t*k + j.
template <typename S>
MatT<S> im2col_strided(const MatT<S>& in, int k) {
  const Eigen::Index cin = in.rows();
  const Eigen::Index tout = in.cols() / k;
  MatT<S> col(cin * k, tout);
  for (Eigen::Index t = 0; t < tout; ++t) {
    for (int j = 0; j < k; ++j) {
      col.block(static_cast<Eigen::Index>(j) * cin, t, cin, 1) = in.col(t * k + j);
    }
  }
  return col;
}

template <typename S>
MatT<S> conv_forward(const MatT<S>& in, const MatT<S>& kernel, const VecT<S>& bias, int k) {
  MatT<S> out = kernel * im2col_strided(in, k);
  out.colwise() += bias;
  return out;
}

template <typename S>
void conv_backward(const MatT<S>& in, const MatT<S>& kernel, const MatT<S>& dout, int k,
                   MatT<S>* din, MatT<S>* dkernel, VecT<S>* dbias) {
  MatT<S> col = im2col_strided(in, k);
  dkernel->noalias() += dout * col.transpose();
  *dbias += dout.rowwise().sum();
  MatT<S> dcol = kernel.transpose() * dout;
  din->setZero(in.rows(), in.cols());
  const Eigen::Index cin = in.rows();
  for (Eigen::Index t = 0; t < dout.cols(); ++t) {
    for (int j = 0; j < k; ++j) {
      din->col(t * k + j) = dcol.block(static_cast<Eigen::Index>(j) * cin, t, cin, 1);
    }
  }
}

template <typename S>
struct GnCache {
  MatT<S> xhat;
  VecT<S> invstd;  // one entry per group
};

template <typename S>
MatT<S> group_norm_forward(const MatT<S>& x, const VecT<S>& scale, const VecT<S>& shift,
                           int groups, GnCache<S>* cache) {
  const Eigen::Index ch = x.rows();
  const Eigen::Index gs = ch / groups;
  MatT<S> xhat(ch, x.cols());
  VecT<S> invstd(groups);
  for (int g = 0; g < groups; ++g) {
    auto block = x.middleRows(static_cast<Eigen::Index>(g) * gs, gs);
    const S mean = block.mean();
    const S var = (block.array() - mean).square().mean();
    const S inv = S(1) / std::sqrt(var + S(kNormEps));
    xhat.middleRows(static_cast<Eigen::Index>(g) * gs, gs) =
        ((block.array() - mean) * inv).matrix();
    invstd[g] = inv;
  }
  MatT<S> y =
      ((xhat.array().colwise() * scale.array()).colwise() + shift.array()).matrix();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->invstd = std::move(invstd);
  }
  return y;
}

template <typename S>
MatT<S> group_norm_backward(const GnCache<S>& cache, const VecT<S>& scale, const MatT<S>& dy,
                            int groups, VecT<S>* dscale, VecT<S>* dshift) {
  const Eigen::Index ch = dy.rows();
  const Eigen::Index gs = ch / groups;
  *dscale += (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
  *dshift += dy.rowwise().sum();
  MatT<S> dxhat = (dy.array().colwise() * scale.array()).matrix();
  MatT<S> dx(ch, dy.cols());
  for (int g = 0; g < groups; ++g) {
    auto dxh = dxhat.middleRows(static_cast<Eigen::Index>(g) * gs, gs);
    auto xh = cache.xhat.middleRows(static_cast<Eigen::Index>(g) * gs, gs);
    const S m1 = dxh.mean();
    const S m2 = (dxh.array() * xh.array()).mean();
    dx.middleRows(static_cast<Eigen::Index>(g) * gs, gs) =
        (cache.invstd[g] * (dxh.array() - m1 - xh.array() * m2)).matrix();
  }
  return dx;
}

// Grouped temporal conv with stride 1 and zero "same" padding (odd kernel).
template <typename S>
MatT<S> ctx_forward(const MatT<S>& x, const MatT<S>& kernel, const VecT<S>& bias, int k,
                    int groups) {
  const Eigen::Index ch = x.rows();
  const Eigen::Index tlen = x.cols();
  const Eigen::Index gs = ch / groups;
  const int pad = (k - 1) / 2;
  MatT<S> xpad = MatT<S>::Zero(ch, tlen + k - 1);
  xpad.middleCols(pad, tlen) = x;
  MatT<S> out(ch, tlen);
  MatT<S> col(gs * k, tlen);
  for (int g = 0; g < groups; ++g) {
    const Eigen::Index row0 = static_cast<Eigen::Index>(g) * gs;
    for (Eigen::Index t = 0; t < tlen; ++t) {
      for (int j = 0; j < k; ++j) {
        col.block(static_cast<Eigen::Index>(j) * gs, t, gs, 1) = xpad.block(row0, t + j, gs, 1);
      }
    }
    out.middleRows(row0, gs).noalias() = kernel.middleRows(row0, gs) * col;
  }
  out.colwise() += bias;
  return out;
}

template <typename S>
MatT<S> ctx_backward(const MatT<S>& x, const MatT<S>& kernel, const MatT<S>& dout, int k,
                     int groups, MatT<S>* dkernel, VecT<S>* dbias) {
  const Eigen::Index ch = x.rows();
  const Eigen::Index tlen = x.cols();
  const Eigen::Index gs = ch / groups;
  const int pad = (k - 1) / 2;
  MatT<S> xpad = MatT<S>::Zero(ch, tlen + k - 1);
  xpad.middleCols(pad, tlen) = x;
  MatT<S> dxpad = MatT<S>::Zero(ch, tlen + k - 1);
  MatT<S> col(gs * k, tlen);
  for (int g = 0; g < groups; ++g) {
    const Eigen::Index row0 = static_cast<Eigen::Index>(g) * gs;
    for (Eigen::Index t = 0; t < tlen; ++t) {
      for (int j = 0; j < k; ++j) {
        col.block(static_cast<Eigen::Index>(j) * gs, t, gs, 1) = xpad.block(row0, t + j, gs, 1);
      }
    }
    auto dg = dout.middleRows(row0, gs);
    dkernel->middleRows(row0, gs).noalias() += dg * col.transpose();
    MatT<S> dcol = kernel.middleRows(row0, gs).transpose() * dg;
    for (Eigen::Index t = 0; t < tlen; ++t) {
      for (int j = 0; j < k; ++j) {
        dxpad.block(row0, t + j, gs, 1) += dcol.block(static_cast<Eigen::Index>(j) * gs, t, gs, 1);
      }
    }
  }
  *dbias += dout.rowwise().sum();
  return dxpad.middleCols(pad, tlen);
}

inline std::pair<int, int> pool_span(int i, int len, int segments) {
  const int start = (i * len) / segments;
  const int end = static_cast<int>(
      (static_cast<long>(i + 1) * len + segments - 1) / segments);
  return {start, end};
}

template <typename S>
MatT<S> pool_forward(const MatT<S>& x, int segments) {
  MatT<S> out(x.rows(), segments);
  const int len = static_cast<int>(x.cols());
  for (int i = 0; i < segments; ++i) {
    auto [start, end] = pool_span(i, len, segments);
    out.col(i) = x.middleCols(start, end - start).rowwise().mean();
  }
  return out;
}

template <typename S>
MatT<S> pool_backward(const MatT<S>& dout, Eigen::Index rows, int len, int segments) {
  MatT<S> din = MatT<S>::Zero(rows, len);
  for (int i = 0; i < segments; ++i) {
    auto [start, end] = pool_span(i, len, segments);
    const S inv = S(1) / S(end - start);
    for (int t = start; t < end; ++t) din.col(t) += dout.col(i) * inv;
  }
  return din;
}

template <typename S>
struct BlockCache {
  MatT<S> in;
  GnCache<S> gn;
};

template <typename S>
MatT<S> encoder_forward(const LhbConfig& c, const LhbWeightsT<S>& w, const MatT<S>& window,
                        std::vector<BlockCache<S>>* caches) {
  MatT<S> x = window;
  const int gn_groups = c.encoder_dim / 2;
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    const int k = c.conv_widths[b];
    if (caches) (*caches)[b].in = x;
    MatT<S> z = conv_forward(x, w.blocks[b].kernel, w.blocks[b].bias, k);
    MatT<S> y = group_norm_forward(z, w.blocks[b].gn_scale, w.blocks[b].gn_shift, gn_groups,
                                   caches ? &(*caches)[b].gn : nullptr);
    x = y.unaryExpr([](S v) { return gelu(v); });
  }
  return x;
}

template <typename S>
MatT<S> encoder_backward(const LhbConfig& c, const LhbWeightsT<S>& w,
                         std::vector<BlockCache<S>>& caches, MatT<S> g,
                         LhbWeightsT<S>* grads) {
  const int gn_groups = c.encoder_dim / 2;
  for (std::size_t b = w.blocks.size(); b-- > 0;) {
    const int k = c.conv_widths[b];
    const BlockCache<S>& cache = caches[b];
    MatT<S> gn_out =
        ((cache.gn.xhat.array().colwise() * w.blocks[b].gn_scale.array()).colwise() +
         w.blocks[b].gn_shift.array())
            .matrix();
    MatT<S> dgn =
        (g.array() * gn_out.unaryExpr([](S v) { return gelu_grad(v); }).array()).matrix();
    MatT<S> dz = group_norm_backward(cache.gn, w.blocks[b].gn_scale, dgn, gn_groups,
                                     &grads->blocks[b].gn_scale, &grads->blocks[b].gn_shift);
    MatT<S> din;
    conv_backward(cache.in, w.blocks[b].kernel, dz, k, &din, &grads->blocks[b].kernel,
                  &grads->blocks[b].bias);
    g = std::move(din);
  }
  return g;
}

// Caches for one sample of a training-mode forward pass.
template <typename S>
struct TrainCache {
  std::vector<BlockCache<S>> blocks;
  std::vector<std::uint8_t> mask;  // per encoded time step
  VecT<S> drop_scale;              // per channel, 0 or 1/(1-p)
  MatT<S> aug_x;                   // contextualizer input (post mask and drop)
  MatT<S> ctx_pre;                 // contextualizer output before GELU
  int enc_len = 0;
  VecT<S> flat;                    // summarizer output, flattened
  VecT<S> d;                       // hidden pre-activation after dropout
  VecT<S> dropmask;                // per hidden unit, 0 or 1/(1-p)
};

template <typename S>
LhbWeightsT<S> make_zero_grads(const LhbWeightsT<S>& w) {
  LhbWeightsT<S> g;
  g.blocks.resize(w.blocks.size());
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    g.blocks[i].kernel = MatT<S>::Zero(w.blocks[i].kernel.rows(), w.blocks[i].kernel.cols());
    g.blocks[i].bias = VecT<S>::Zero(w.blocks[i].bias.size());
    g.blocks[i].gn_scale = VecT<S>::Zero(w.blocks[i].gn_scale.size());
    g.blocks[i].gn_shift = VecT<S>::Zero(w.blocks[i].gn_shift.size());
  }
  g.mask_token = VecT<S>::Zero(w.mask_token.size());
  g.ctx_kernel = MatT<S>::Zero(w.ctx_kernel.rows(), w.ctx_kernel.cols());
  g.ctx_bias = VecT<S>::Zero(w.ctx_bias.size());
  g.ext_weight = MatT<S>::Zero(w.ext_weight.rows(), w.ext_weight.cols());
  g.ext_bias = VecT<S>::Zero(w.ext_bias.size());
  g.bn_scale = VecT<S>::Zero(w.bn_scale.size());
  g.bn_shift = VecT<S>::Zero(w.bn_shift.size());
  g.bn_mean = VecT<S>::Zero(w.bn_mean.size());
  g.bn_var = VecT<S>::Zero(w.bn_var.size());
  g.cls_weight = MatT<S>::Zero(w.cls_weight.rows(), w.cls_weight.cols());
  g.cls_bias = VecT<S>::Zero(w.cls_bias.size());
  return g;
}

template <typename S>
void sgd_step(LhbWeightsT<S>* w, const LhbWeightsT<S>& g, S lr) {
  for (std::size_t i = 0; i < w->blocks.size(); ++i) {
    w->blocks[i].kernel -= lr * g.blocks[i].kernel;
    w->blocks[i].bias -= lr * g.blocks[i].bias;
    w->blocks[i].gn_scale -= lr * g.blocks[i].gn_scale;
    w->blocks[i].gn_shift -= lr * g.blocks[i].gn_shift;
  }
  w->mask_token -= lr * g.mask_token;
  w->ctx_kernel -= lr * g.ctx_kernel;
  w->ctx_bias -= lr * g.ctx_bias;
  w->ext_weight -= lr * g.ext_weight;
  w->ext_bias -= lr * g.ext_bias;
  w->bn_scale -= lr * g.bn_scale;
  w->bn_shift -= lr * g.bn_shift;
  w->cls_weight -= lr * g.cls_weight;
  w->cls_bias -= lr * g.cls_bias;
}

template <typename S>
VecT<S> random_uniform(std::mt19937_64& rng, Eigen::Index n, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  VecT<S> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<S>(dist(rng));
  return v;
}

}  // namespace

void LhbConfig::validate() const {
  if (in_channels < 1) throw Error::config("model: in_channels must be positive");
  if (encoder_dim < 2 || encoder_dim % 2 != 0) {
    throw Error::config("model: encoder_dim must be an even number >= 2");
  }
  if (conv_widths.empty()) throw Error::config("model: conv_widths must not be empty");
  for (int w : conv_widths) {
    if (w < 1) throw Error::config("model: conv widths must be positive");
  }
  if (mask_rate < 0.0 || mask_rate >= 1.0) {
    throw Error::config("model: mask_rate must lie in [0, 1)");
  }
  if (channel_drop_rate < 0.0 || channel_drop_rate >= 1.0) {
    throw Error::config("model: channel_drop_rate must lie in [0, 1)");
  }
  if (contextualizer_kernel < 1 || contextualizer_kernel % 2 == 0) {
    throw Error::config("model: contextualizer_kernel must be odd and positive");
  }
  if (contextualizer_groups < 1 || encoder_dim % contextualizer_groups != 0) {
    throw Error::config("model: contextualizer_groups must divide encoder_dim");
  }
  if (pool_segments < 1) throw Error::config("model: pool_segments must be positive");
  if (hidden_dim < 1) throw Error::config("model: hidden_dim must be positive");
  if (num_classes < 2) throw Error::config("model: num_classes must be at least 2");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw Error::config("model: dropout_rate must lie in [0, 1)");
  }
}

int LhbConfig::downsample_factor() const {
  int f = 1;
  for (int w : conv_widths) f *= w;
  return f;
}

int LhbConfig::encoded_length(int input_len) const {
  int len = input_len;
  for (int w : conv_widths) len /= w;
  return len;
}

const std::string& bottleneck_name(Bottleneck b) {
  static const std::array<std::string, 5> names = {
      "Encoder", "EncodingAugment", "Summarizer", "ExtendedClassifier", "Classifier"};
  return names[static_cast<std::size_t>(b)];
}

Bottleneck bottleneck_from_name(const std::string& name) {
  for (Bottleneck b : kAllBottlenecks) {
    if (bottleneck_name(b) == name) return b;
  }
  throw Error::config("unknown bottleneck '" + name +
                      "' (expected Encoder, EncodingAugment, Summarizer, "
                      "ExtendedClassifier or Classifier)");
}

template <typename Scalar>
typename LhbModelT<Scalar>::Vec LhbModelT<Scalar>::Activations::at(Bottleneck b) const {
  switch (b) {
    case Bottleneck::kEncoder:
      return flatten_rm<Scalar>(encoder);
    case Bottleneck::kEncodingAugment:
      return flatten_rm<Scalar>(augment);
    case Bottleneck::kSummarizer:
      return flatten_rm<Scalar>(summarizer);
    case Bottleneck::kExtendedClassifier:
      return extended;
    case Bottleneck::kClassifier:
      return logits;
  }
  throw Error::config("invalid bottleneck id");
}

template <typename Scalar>
LhbModelT<Scalar>::LhbModelT(LhbConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const int dim = config_.encoder_dim;
  const int nb = static_cast<int>(config_.conv_widths.size());
  std::uint64_t salt = 0;
  weights_.blocks.resize(static_cast<std::size_t>(nb));
  for (int b = 0; b < nb; ++b) {
    const int in = (b == 0) ? config_.in_channels : dim;
    const int k = config_.conv_widths[static_cast<std::size_t>(b)];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in) * k);
    std::mt19937_64 rng(mix_seed(seed, salt++));
    auto& blk = weights_.blocks[static_cast<std::size_t>(b)];
    VecT<Scalar> flat = random_uniform<Scalar>(rng, static_cast<Eigen::Index>(dim) * in * k, bound);
    blk.kernel = unflatten_rm<Scalar>(flat, dim, static_cast<Eigen::Index>(in) * k);
    blk.bias = random_uniform<Scalar>(rng, dim, bound);
    blk.gn_scale = VecT<Scalar>::Ones(dim);
    blk.gn_shift = VecT<Scalar>::Zero(dim);
  }
  {
    std::mt19937_64 rng(mix_seed(seed, salt++));
    weights_.mask_token = random_uniform<Scalar>(rng, dim, 1.0 / std::sqrt(double(dim)));
  }
  {
    const int gs = dim / config_.contextualizer_groups;
    const int k = config_.contextualizer_kernel;
    const double bound = 1.0 / std::sqrt(static_cast<double>(gs) * k);
    std::mt19937_64 rng(mix_seed(seed, salt++));
    VecT<Scalar> flat = random_uniform<Scalar>(rng, static_cast<Eigen::Index>(dim) * gs * k, bound);
    weights_.ctx_kernel = unflatten_rm<Scalar>(flat, dim, static_cast<Eigen::Index>(gs) * k);
    weights_.ctx_bias = random_uniform<Scalar>(rng, dim, bound);
  }
  {
    const Eigen::Index fan_in = static_cast<Eigen::Index>(dim) * config_.pool_segments;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::mt19937_64 rng(mix_seed(seed, salt++));
    VecT<Scalar> flat =
        random_uniform<Scalar>(rng, static_cast<Eigen::Index>(config_.hidden_dim) * fan_in, bound);
    weights_.ext_weight = unflatten_rm<Scalar>(flat, config_.hidden_dim, fan_in);
    weights_.ext_bias = random_uniform<Scalar>(rng, config_.hidden_dim, bound);
  }
  weights_.bn_scale = VecT<Scalar>::Ones(config_.hidden_dim);
  weights_.bn_shift = VecT<Scalar>::Zero(config_.hidden_dim);
  weights_.bn_mean = VecT<Scalar>::Zero(config_.hidden_dim);
  weights_.bn_var = VecT<Scalar>::Ones(config_.hidden_dim);
  {
    const double bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden_dim));
    std::mt19937_64 rng(mix_seed(seed, salt++));
    VecT<Scalar> flat = random_uniform<Scalar>(
        rng, static_cast<Eigen::Index>(config_.num_classes) * config_.hidden_dim, bound);
    weights_.cls_weight = unflatten_rm<Scalar>(flat, config_.num_classes, config_.hidden_dim);
    weights_.cls_bias = random_uniform<Scalar>(rng, config_.num_classes, bound);
  }
}

template <typename Scalar>
LhbModelT<Scalar>::LhbModelT(LhbConfig config, LhbWeightsT<Scalar> weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  config_.validate();
  if (weights_.blocks.size() != config_.conv_widths.size()) {
    throw Error::config("model: weight block count does not match conv_widths");
  }
}

template <typename Scalar>
void LhbModelT<Scalar>::check_window(const Mat& window) const {
  if (window.rows() != config_.in_channels) {
    throw Error::config("model: window has " + std::to_string(window.rows()) +
                        " channels, expected " + std::to_string(config_.in_channels));
  }
  if (window.cols() < config_.downsample_factor()) {
    throw Error::config("model: window of " + std::to_string(window.cols()) +
                        " samples is shorter than the downsample factor " +
                        std::to_string(config_.downsample_factor()));
  }
  if (!window.allFinite()) throw Error::numeric("model: window contains non-finite samples");
}

template <typename Scalar>
int LhbModelT<Scalar>::activation_dim(Bottleneck b, int input_len) const {
  switch (b) {
    case Bottleneck::kEncoder:
    case Bottleneck::kEncodingAugment:
      return config_.encoder_dim * config_.encoded_length(input_len);
    case Bottleneck::kSummarizer:
      return config_.encoder_dim * config_.pool_segments;
    case Bottleneck::kExtendedClassifier:
      return config_.hidden_dim;
    case Bottleneck::kClassifier:
      return config_.num_classes;
  }
  throw Error::config("invalid bottleneck id");
}

template <typename Scalar>
typename LhbModelT<Scalar>::Activations LhbModelT<Scalar>::forward(const Mat& window) const {
  check_window(window);
  Activations acts;
  acts.encoder = encoder_forward<Scalar>(config_, weights_, window, nullptr);
  Mat ctx_pre = ctx_forward<Scalar>(acts.encoder, weights_.ctx_kernel, weights_.ctx_bias,
                                    config_.contextualizer_kernel, config_.contextualizer_groups);
  acts.augment = acts.encoder + ctx_pre.unaryExpr([](Scalar v) { return gelu(v); });
  acts.summarizer = pool_forward<Scalar>(acts.augment, config_.pool_segments);
  Vec flat = flatten_rm<Scalar>(acts.summarizer);
  Vec u = weights_.ext_weight * flat + weights_.ext_bias;
  Vec r = u.cwiseMax(Scalar(0));
  Vec invstd = (weights_.bn_var.array() + Scalar(kNormEps)).rsqrt().matrix();
  acts.extended = ((r - weights_.bn_mean).array() * invstd.array() * weights_.bn_scale.array() +
                   weights_.bn_shift.array())
                      .matrix();
  acts.logits = weights_.cls_weight * acts.extended + weights_.cls_bias;
  if (!acts.logits.allFinite()) throw Error::numeric("model: forward pass produced non-finite logits");
  return acts;
}

template <typename Scalar>
typename LhbModelT<Scalar>::Vec LhbModelT<Scalar>::logits(const Mat& window) const {
  return forward(window).logits;
}

template <typename Scalar>
typename LhbModelT<Scalar>::Vec LhbModelT<Scalar>::grad_wrt_bottleneck(const Mat& window,
                                                                       Bottleneck b,
                                                                       int class_index) const {
  check_window(window);
  if (class_index < 0 || class_index >= config_.num_classes) {
    throw Error::config("model: class index out of range");
  }
  if (b == Bottleneck::kClassifier) {
    Vec g = Vec::Zero(config_.num_classes);
    g[class_index] = Scalar(1);
    return g;
  }
  Vec g_ext = weights_.cls_weight.row(class_index).transpose();
  if (b == Bottleneck::kExtendedClassifier) return g_ext;

  // Stages up to and including the bottleneck only provide the forward state
  // the later stages need.
  Mat enc = encoder_forward<Scalar>(config_, weights_, window, nullptr);
  Mat ctx_pre = ctx_forward<Scalar>(enc, weights_.ctx_kernel, weights_.ctx_bias,
                                    config_.contextualizer_kernel, config_.contextualizer_groups);
  Mat aug = enc + ctx_pre.unaryExpr([](Scalar v) { return gelu(v); });
  Mat summ = pool_forward<Scalar>(aug, config_.pool_segments);
  Vec flat = flatten_rm<Scalar>(summ);
  Vec u = weights_.ext_weight * flat + weights_.ext_bias;

  Vec invstd = (weights_.bn_var.array() + Scalar(kNormEps)).rsqrt().matrix();
  Vec dr = (g_ext.array() * weights_.bn_scale.array() * invstd.array()).matrix();
  Vec du = (u.array() > Scalar(0)).select(dr, Vec::Zero(dr.size()));
  Vec dflat = weights_.ext_weight.transpose() * du;
  if (b == Bottleneck::kSummarizer) return dflat;

  Mat dsumm = unflatten_rm<Scalar>(dflat, config_.encoder_dim, config_.pool_segments);
  Mat daug = pool_backward<Scalar>(dsumm, config_.encoder_dim, static_cast<int>(aug.cols()),
                                   config_.pool_segments);
  if (b == Bottleneck::kEncodingAugment) return flatten_rm<Scalar>(daug);

  Mat dpre =
      (daug.array() * ctx_pre.unaryExpr([](Scalar v) { return gelu_grad(v); }).array()).matrix();
  Mat dk_unused = Mat::Zero(weights_.ctx_kernel.rows(), weights_.ctx_kernel.cols());
  Vec db_unused = Vec::Zero(weights_.ctx_bias.size());
  Mat denc = ctx_backward<Scalar>(enc, weights_.ctx_kernel, dpre, config_.contextualizer_kernel,
                                  config_.contextualizer_groups, &dk_unused, &db_unused);
  denc += daug;  // residual path
  return flatten_rm<Scalar>(denc);
}

template <typename Scalar>
FineTuneReport LhbModelT<Scalar>::fine_tune(const std::vector<Mat>& windows,
                                            const std::vector<int>& labels,
                                            const FineTuneOptions& options) {
  if (windows.size() != labels.size()) {
    throw Error::config("fine_tune: windows and labels differ in length");
  }
  if (windows.size() < 2) throw Error::data("fine_tune: need at least 2 windows");
  if (options.epochs < 1) throw Error::config("fine_tune: epochs must be positive");
  if (options.learning_rate < 0.0) throw Error::config("fine_tune: learning rate must not be negative");
  if (options.batch_size < 2) throw Error::config("fine_tune: batch size must be at least 2");
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y < 0 || y >= config_.num_classes) throw Error::data("fine_tune: label out of range");
    seen[y == 0 ? 0 : 1] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw Error::data("fine_tune: training set contains a single class");
  }
  for (const Mat& w : windows) check_window(w);

  const int n = static_cast<int>(windows.size());
  const int dim = config_.encoder_dim;
  const int hidden = config_.hidden_dim;
  std::mt19937_64 rng(options.seed);
  std::vector<int> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::pair<int, int>> batches;
  FineTuneReport report;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    batches.clear();
    for (int s = 0; s < n; s += options.batch_size) {
      batches.emplace_back(s, std::min(n, s + options.batch_size));
    }
    // Batch statistics need at least two samples; fold a trailing singleton
    // into the previous batch.
    if (batches.size() >= 2 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }
    double epoch_ce = 0.0;

    for (const auto& [begin, end] : batches) {
      const int bsz = end - begin;
      std::vector<TrainCache<Scalar>> caches(static_cast<std::size_t>(bsz));
      // Stochastic draws happen up front in batch order so the training run
      // is reproducible regardless of evaluation order below.
      std::bernoulli_distribution mask_dist(config_.mask_rate);
      std::bernoulli_distribution drop_dist(config_.channel_drop_rate);
      std::bernoulli_distribution dropout_dist(config_.dropout_rate);
      for (int s = 0; s < bsz; ++s) {
        TrainCache<Scalar>& tc = caches[static_cast<std::size_t>(s)];
        const Mat& win = windows[static_cast<std::size_t>(order[static_cast<std::size_t>(begin + s)])];
        tc.enc_len = config_.encoded_length(static_cast<int>(win.cols()));
        tc.mask.resize(static_cast<std::size_t>(tc.enc_len));
        for (int t = 0; t < tc.enc_len; ++t) tc.mask[static_cast<std::size_t>(t)] = mask_dist(rng);
        tc.drop_scale = Vec(dim);
        const Scalar keep = Scalar(1) / Scalar(1.0 - config_.channel_drop_rate);
        for (int c = 0; c < dim; ++c) tc.drop_scale[c] = drop_dist(rng) ? Scalar(0) : keep;
        tc.dropmask = Vec(hidden);
        const Scalar dkeep = Scalar(1) / Scalar(1.0 - config_.dropout_rate);
        for (int h = 0; h < hidden; ++h) tc.dropmask[h] = dropout_dist(rng) ? Scalar(0) : dkeep;
      }

      Mat R(hidden, bsz);  // hidden pre-normalization activations
      for (int s = 0; s < bsz; ++s) {
        TrainCache<Scalar>& tc = caches[static_cast<std::size_t>(s)];
        const Mat& win = windows[static_cast<std::size_t>(order[static_cast<std::size_t>(begin + s)])];
        tc.blocks.resize(config_.conv_widths.size());
        Mat enc = encoder_forward<Scalar>(config_, weights_, win, &tc.blocks);
        Mat x = enc;
        for (int t = 0; t < tc.enc_len; ++t) {
          if (tc.mask[static_cast<std::size_t>(t)]) x.col(t) = weights_.mask_token;
        }
        x = (x.array().colwise() * tc.drop_scale.array()).matrix();
        tc.aug_x = std::move(x);
        tc.ctx_pre = ctx_forward<Scalar>(tc.aug_x, weights_.ctx_kernel, weights_.ctx_bias,
                                         config_.contextualizer_kernel,
                                         config_.contextualizer_groups);
        Mat aug = tc.aug_x + tc.ctx_pre.unaryExpr([](Scalar v) { return gelu(v); });
        Mat summ = pool_forward<Scalar>(aug, config_.pool_segments);
        tc.flat = flatten_rm<Scalar>(summ);
        Vec u = weights_.ext_weight * tc.flat + weights_.ext_bias;
        tc.d = (u.array() * tc.dropmask.array()).matrix();
        R.col(s) = tc.d.cwiseMax(Scalar(0));
      }

      // Batch normalization with batch statistics.
      Vec mu = R.rowwise().mean();
      Mat centered = R.colwise() - mu;
      Vec var = centered.array().square().rowwise().mean().matrix();
      Vec invstd = (var.array() + Scalar(kNormEps)).rsqrt().matrix();
      Mat xhat = (centered.array().colwise() * invstd.array()).matrix();
      Mat Y = ((xhat.array().colwise() * weights_.bn_scale.array()).colwise() +
               weights_.bn_shift.array())
                  .matrix();
      Mat logits = (weights_.cls_weight * Y).colwise() + weights_.cls_bias;

      Mat dlogits(config_.num_classes, bsz);
      double batch_ce = 0.0;
      for (int s = 0; s < bsz; ++s) {
        const int y = labels[static_cast<std::size_t>(order[static_cast<std::size_t>(begin + s)])];
        Vec l = logits.col(s);
        const Scalar m = l.maxCoeff();
        Vec e = (l.array() - m).exp().matrix();
        const Scalar z = e.sum();
        batch_ce += static_cast<double>(std::log(z) - (l[y] - m));
        Vec p = e / z;
        p[y] -= Scalar(1);
        dlogits.col(s) = p / Scalar(bsz);
      }
      if (!std::isfinite(batch_ce)) {
        throw Error::numeric("fine_tune: training loss diverged");
      }
      epoch_ce += batch_ce;

      LhbWeightsT<Scalar> grads = make_zero_grads(weights_);
      grads.cls_weight.noalias() += dlogits * Y.transpose();
      grads.cls_bias += dlogits.rowwise().sum();
      Mat dY = weights_.cls_weight.transpose() * dlogits;

      grads.bn_scale += (dY.array() * xhat.array()).rowwise().sum().matrix();
      grads.bn_shift += dY.rowwise().sum();
      Mat dxhat = (dY.array().colwise() * weights_.bn_scale.array()).matrix();
      Vec m1 = dxhat.rowwise().mean();
      Vec m2 = (dxhat.array() * xhat.array()).rowwise().mean().matrix();
      Mat dR = dxhat.colwise() - m1;
      dR -= (xhat.array().colwise() * m2.array()).matrix();
      dR = (dR.array().colwise() * invstd.array()).matrix();

      for (int s = 0; s < bsz; ++s) {
        TrainCache<Scalar>& tc = caches[static_cast<std::size_t>(s)];
        Vec dd = (tc.d.array() > Scalar(0)).select(dR.col(s), Vec::Zero(hidden));
        Vec du = (dd.array() * tc.dropmask.array()).matrix();
        grads.ext_weight.noalias() += du * tc.flat.transpose();
        grads.ext_bias += du;
        Vec dflat = weights_.ext_weight.transpose() * du;
        Mat dsumm = unflatten_rm<Scalar>(dflat, dim, config_.pool_segments);
        Mat daug = pool_backward<Scalar>(dsumm, dim, tc.enc_len, config_.pool_segments);
        Mat dpre =
            (daug.array() * tc.ctx_pre.unaryExpr([](Scalar v) { return gelu_grad(v); }).array())
                .matrix();
        Mat dx = ctx_backward<Scalar>(tc.aug_x, weights_.ctx_kernel, dpre,
                                      config_.contextualizer_kernel, config_.contextualizer_groups,
                                      &grads.ctx_kernel, &grads.ctx_bias);
        dx += daug;  // residual path
        dx = (dx.array().colwise() * tc.drop_scale.array()).matrix();
        Mat denc = dx;
        for (int t = 0; t < tc.enc_len; ++t) {
          if (tc.mask[static_cast<std::size_t>(t)]) {
            grads.mask_token += dx.col(t);
            denc.col(t).setZero();
          }
        }
        encoder_backward<Scalar>(config_, weights_, tc.blocks, std::move(denc), &grads);
      }

      const Scalar mom = Scalar(kBnMomentum);
      weights_.bn_mean = (Scalar(1) - mom) * weights_.bn_mean + mom * mu;
      Vec var_unbiased = var * (Scalar(bsz) / Scalar(bsz - 1));
      weights_.bn_var = (Scalar(1) - mom) * weights_.bn_var + mom * var_unbiased;

      sgd_step(&weights_, grads, Scalar(options.learning_rate));
    }
    report.epoch_loss.push_back(epoch_ce / n);
  }

  int correct = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    Vec l = logits(windows[i]);
    Eigen::Index arg;
    l.maxCoeff(&arg);
    if (static_cast<int>(arg) == labels[i]) ++correct;
  }
  report.train_accuracy = static_cast<double>(correct) / static_cast<double>(windows.size());
  return report;
}

template class LhbModelT<float>;
template class LhbModelT<double>;

namespace {

void put_u16(std::vector<std::uint8_t>* out, std::uint16_t v) {
  out->push_back(static_cast<std::uint8_t>(v & 0xff));
  out->push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

void put_u32(std::vector<std::uint8_t>* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>* out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Cursor {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const std::string& what) {
    if (pos + n > bytes.size()) {
      throw Error::data("model container truncated in " + what);
    }
  }
  std::uint16_t u16(const std::string& what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return bytes[pos++];
  }
  float f32(const std::string& what) {
    std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

struct RawTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

RawTensor read_tensor(Cursor* cur) {
  RawTensor t;
  std::uint16_t name_len = cur->u16("tensor name length");
  cur->need(name_len, "tensor name");
  t.name.assign(reinterpret_cast<const char*>(cur->bytes.data()) + cur->pos, name_len);
  cur->pos += name_len;
  std::uint8_t rank = cur->u8("tensor '" + t.name + "' rank");
  std::size_t count = 1;
  for (int i = 0; i < rank; ++i) {
    std::uint32_t d = cur->u32("tensor '" + t.name + "' dims");
    if (d == 0) throw Error::data("model container: tensor '" + t.name + "' has a zero dim");
    t.dims.push_back(d);
    count *= d;
    if (count > 100'000'000) {
      throw Error::data("model container: tensor '" + t.name + "' is implausibly large");
    }
  }
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.values[i] = cur->f32("tensor '" + t.name + "'");
  }
  return t;
}

void write_tensor(std::vector<std::uint8_t>* out, const std::string& name,
                  const std::vector<std::uint32_t>& dims, const std::vector<float>& values) {
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out->insert(out->end(), name.begin(), name.end());
  out->push_back(static_cast<std::uint8_t>(dims.size()));
  std::size_t count = 1;
  for (std::uint32_t d : dims) {
    put_u32(out, d);
    count *= d;
  }
  if (count != values.size()) throw Error::numeric("internal: tensor dim/payload mismatch");
  for (float v : values) put_f32(out, v);
}

std::vector<float> kernel_to_disk(const Eigen::MatrixXf& k, int in, int width) {
  std::vector<float> v;
  v.reserve(static_cast<std::size_t>(k.size()));
  for (Eigen::Index o = 0; o < k.rows(); ++o) {
    for (int i = 0; i < in; ++i) {
      for (int j = 0; j < width; ++j) {
        v.push_back(k(o, static_cast<Eigen::Index>(j) * in + i));
      }
    }
  }
  return v;
}

Eigen::MatrixXf kernel_from_disk(const std::vector<float>& v, int out, int in, int width) {
  Eigen::MatrixXf k(out, static_cast<Eigen::Index>(in) * width);
  std::size_t idx = 0;
  for (int o = 0; o < out; ++o) {
    for (int i = 0; i < in; ++i) {
      for (int j = 0; j < width; ++j) {
        k(o, static_cast<Eigen::Index>(j) * in + i) = v[idx++];
      }
    }
  }
  return k;
}

std::vector<float> mat_to_disk(const Eigen::MatrixXf& m) {
  std::vector<float> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  }
  return v;
}

Eigen::MatrixXf mat_from_disk(const std::vector<float>& v, int rows, int cols) {
  Eigen::MatrixXf m(rows, cols);
  std::size_t idx = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = v[idx++];
  }
  return m;
}

std::vector<float> vec_to_disk(const Eigen::VectorXf& v) {
  return std::vector<float>(v.data(), v.data() + v.size());
}

constexpr char kModelMagic[4] = {'L', 'H', 'B', 'W'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_model(const LhbModel& m) {
  const LhbConfig& c = m.config();
  const auto& w = m.weights();
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kModelMagic, kModelMagic + 4);
  put_u32(&out, kModelVersion);

  const int nb = static_cast<int>(c.conv_widths.size());
  put_u32(&out, static_cast<std::uint32_t>(12 + 4 * nb));

  std::vector<float> cfg = {static_cast<float>(c.in_channels),
                            static_cast<float>(c.encoder_dim),
                            static_cast<float>(nb)};
  for (int width : c.conv_widths) cfg.push_back(static_cast<float>(width));
  cfg.push_back(static_cast<float>(c.mask_rate));
  cfg.push_back(static_cast<float>(c.channel_drop_rate));
  cfg.push_back(static_cast<float>(c.contextualizer_kernel));
  cfg.push_back(static_cast<float>(c.contextualizer_groups));
  cfg.push_back(static_cast<float>(c.pool_segments));
  cfg.push_back(static_cast<float>(c.hidden_dim));
  cfg.push_back(static_cast<float>(c.num_classes));
  cfg.push_back(static_cast<float>(c.dropout_rate));
  write_tensor(&out, "config.values", {static_cast<std::uint32_t>(cfg.size())}, cfg);

  for (int b = 0; b < nb; ++b) {
    const auto& blk = w.blocks[static_cast<std::size_t>(b)];
    const int in = (b == 0) ? c.in_channels : c.encoder_dim;
    const int width = c.conv_widths[static_cast<std::size_t>(b)];
    const std::string prefix = "encoder.block" + std::to_string(b) + ".";
    write_tensor(&out, prefix + "kernel",
                 {static_cast<std::uint32_t>(c.encoder_dim), static_cast<std::uint32_t>(in),
                  static_cast<std::uint32_t>(width)},
                 kernel_to_disk(blk.kernel, in, width));
    write_tensor(&out, prefix + "bias", {static_cast<std::uint32_t>(c.encoder_dim)},
                 vec_to_disk(blk.bias));
    write_tensor(&out, prefix + "gn_scale", {static_cast<std::uint32_t>(c.encoder_dim)},
                 vec_to_disk(blk.gn_scale));
    write_tensor(&out, prefix + "gn_shift", {static_cast<std::uint32_t>(c.encoder_dim)},
                 vec_to_disk(blk.gn_shift));
  }

  const int gs = c.encoder_dim / c.contextualizer_groups;
  write_tensor(&out, "augment.mask_token", {static_cast<std::uint32_t>(c.encoder_dim)},
               vec_to_disk(w.mask_token));
  write_tensor(&out, "augment.ctx_kernel",
               {static_cast<std::uint32_t>(c.encoder_dim), static_cast<std::uint32_t>(gs),
                static_cast<std::uint32_t>(c.contextualizer_kernel)},
               kernel_to_disk(w.ctx_kernel, gs, c.contextualizer_kernel));
  write_tensor(&out, "augment.ctx_bias", {static_cast<std::uint32_t>(c.encoder_dim)},
               vec_to_disk(w.ctx_bias));
  write_tensor(&out, "extended.weight",
               {static_cast<std::uint32_t>(c.hidden_dim),
                static_cast<std::uint32_t>(c.encoder_dim * c.pool_segments)},
               mat_to_disk(w.ext_weight));
  write_tensor(&out, "extended.bias", {static_cast<std::uint32_t>(c.hidden_dim)},
               vec_to_disk(w.ext_bias));
  write_tensor(&out, "extended.bn_scale", {static_cast<std::uint32_t>(c.hidden_dim)},
               vec_to_disk(w.bn_scale));
  write_tensor(&out, "extended.bn_shift", {static_cast<std::uint32_t>(c.hidden_dim)},
               vec_to_disk(w.bn_shift));
  write_tensor(&out, "extended.bn_mean", {static_cast<std::uint32_t>(c.hidden_dim)},
               vec_to_disk(w.bn_mean));
  write_tensor(&out, "extended.bn_var", {static_cast<std::uint32_t>(c.hidden_dim)},
               vec_to_disk(w.bn_var));
  write_tensor(&out, "classifier.weight",
               {static_cast<std::uint32_t>(c.num_classes), static_cast<std::uint32_t>(c.hidden_dim)},
               mat_to_disk(w.cls_weight));
  write_tensor(&out, "classifier.bias", {static_cast<std::uint32_t>(c.num_classes)},
               vec_to_disk(w.cls_bias));
  return out;
}

LhbModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  Cursor cur{bytes};
  cur.need(4, "magic");
  if (std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw Error::data("not a model container (bad magic)");
  }
  cur.pos = 4;
  std::uint32_t version = cur.u32("version");
  if (version != kModelVersion) {
    throw Error::data("unsupported model container version " + std::to_string(version));
  }
  std::uint32_t count = cur.u32("tensor count");
  if (count < 1) throw Error::data("model container lists no tensors");

  RawTensor cfg_tensor = read_tensor(&cur);
  if (cfg_tensor.name != "config.values") {
    throw Error::data("model container must start with the config.values tensor");
  }
  const std::vector<float>& cv = cfg_tensor.values;
  if (cv.size() < 4) throw Error::data("model container: config.values too short");
  LhbConfig c;
  c.in_channels = static_cast<int>(cv[0]);
  c.encoder_dim = static_cast<int>(cv[1]);
  const int nb = static_cast<int>(cv[2]);
  if (nb < 1 || cv.size() != static_cast<std::size_t>(11 + nb)) {
    throw Error::data("model container: config.values has unexpected length");
  }
  c.conv_widths.assign(static_cast<std::size_t>(nb), 0);
  for (int i = 0; i < nb; ++i) c.conv_widths[static_cast<std::size_t>(i)] = static_cast<int>(cv[3 + i]);
  c.mask_rate = cv[3 + nb];
  c.channel_drop_rate = cv[4 + nb];
  c.contextualizer_kernel = static_cast<int>(cv[5 + nb]);
  c.contextualizer_groups = static_cast<int>(cv[6 + nb]);
  c.pool_segments = static_cast<int>(cv[7 + nb]);
  c.hidden_dim = static_cast<int>(cv[8 + nb]);
  c.num_classes = static_cast<int>(cv[9 + nb]);
  c.dropout_rate = cv[10 + nb];
  c.validate();
  if (count != static_cast<std::uint32_t>(12 + 4 * nb)) {
    throw Error::data("model container: tensor count does not match the configuration");
  }

  std::map<std::string, RawTensor> tensors;
  for (std::uint32_t i = 1; i < count; ++i) {
    RawTensor t = read_tensor(&cur);
    std::string name = t.name;
    if (!tensors.emplace(name, std::move(t)).second) {
      throw Error::data("model container: duplicate tensor '" + name + "'");
    }
  }

  auto take = [&](const std::string& name, const std::vector<std::uint32_t>& dims) -> RawTensor {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error::data("model container: missing tensor '" + name + "'");
    if (it->second.dims != dims) {
      throw Error::data("model container: tensor '" + name + "' has unexpected dims");
    }
    RawTensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };
  auto take_vec = [&](const std::string& name, int n) -> Eigen::VectorXf {
    RawTensor t = take(name, {static_cast<std::uint32_t>(n)});
    return Eigen::Map<const Eigen::VectorXf>(t.values.data(), n);
  };

  LhbWeightsT<float> w;
  w.blocks.resize(static_cast<std::size_t>(nb));
  for (int b = 0; b < nb; ++b) {
    const int in = (b == 0) ? c.in_channels : c.encoder_dim;
    const int width = c.conv_widths[static_cast<std::size_t>(b)];
    const std::string prefix = "encoder.block" + std::to_string(b) + ".";
    RawTensor kt = take(prefix + "kernel",
                        {static_cast<std::uint32_t>(c.encoder_dim), static_cast<std::uint32_t>(in),
                         static_cast<std::uint32_t>(width)});
    auto& blk = w.blocks[static_cast<std::size_t>(b)];
    blk.kernel = kernel_from_disk(kt.values, c.encoder_dim, in, width);
    blk.bias = take_vec(prefix + "bias", c.encoder_dim);
    blk.gn_scale = take_vec(prefix + "gn_scale", c.encoder_dim);
    blk.gn_shift = take_vec(prefix + "gn_shift", c.encoder_dim);
  }
  const int gs = c.encoder_dim / c.contextualizer_groups;
  w.mask_token = take_vec("augment.mask_token", c.encoder_dim);
  RawTensor ck = take("augment.ctx_kernel",
                      {static_cast<std::uint32_t>(c.encoder_dim), static_cast<std::uint32_t>(gs),
                       static_cast<std::uint32_t>(c.contextualizer_kernel)});
  w.ctx_kernel = kernel_from_disk(ck.values, c.encoder_dim, gs, c.contextualizer_kernel);
  w.ctx_bias = take_vec("augment.ctx_bias", c.encoder_dim);
  RawTensor ew = take("extended.weight",
                      {static_cast<std::uint32_t>(c.hidden_dim),
                       static_cast<std::uint32_t>(c.encoder_dim * c.pool_segments)});
  w.ext_weight = mat_from_disk(ew.values, c.hidden_dim, c.encoder_dim * c.pool_segments);
  w.ext_bias = take_vec("extended.bias", c.hidden_dim);
  w.bn_scale = take_vec("extended.bn_scale", c.hidden_dim);
  w.bn_shift = take_vec("extended.bn_shift", c.hidden_dim);
  w.bn_mean = take_vec("extended.bn_mean", c.hidden_dim);
  w.bn_var = take_vec("extended.bn_var", c.hidden_dim);
  RawTensor cw = take("classifier.weight", {static_cast<std::uint32_t>(c.num_classes),
                                            static_cast<std::uint32_t>(c.hidden_dim)});
  w.cls_weight = mat_from_disk(cw.values, c.num_classes, c.hidden_dim);
  w.cls_bias = take_vec("classifier.bias", c.num_classes);

  if (!tensors.empty()) {
    throw Error::data("model container: unexpected tensor '" + tensors.begin()->first + "'");
  }
  return LhbModel(std::move(c), std::move(w));
}

void save_model(const LhbModel& m, const std::string& path) {
  std::vector<std::uint8_t> bytes = serialize_model(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error::config("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error::config("failed to write model to '" + path + "'");
}

LhbModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("cannot open model file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace eegtcav::model
