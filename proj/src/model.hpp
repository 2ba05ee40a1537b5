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

#ifndef EEGTCAV_MODEL_HPP_
#define EEGTCAV_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eegtcav::model {

// Configuration of the five-stage sequence classifier. Defaults match the
// production network: a six-block strided convolutional encoder (downsample
// factor 96), a masking/contextualizer augmentation stage, adaptive average
// pooling to four segments, a dense hidden stage and a linear class head.
struct LhbConfig {
  int in_channels = 20;
  int encoder_dim = 512;
  std::vector<int> conv_widths = {3, 2, 2, 2, 2, 2};  // kernel == stride per block
  double mask_rate = 0.1;
  double channel_drop_rate = 0.1;
  int contextualizer_kernel = 25;
  int contextualizer_groups = 16;
  int pool_segments = 4;
  int hidden_dim = 512;
  int num_classes = 2;
  double dropout_rate = 0.5;

  void validate() const;
  int downsample_factor() const;
  // Encoder output length for a given input length (successive floors).
  int encoded_length(int input_len) const;
};

enum class Bottleneck {
  kEncoder = 0,
  kEncodingAugment = 1,
  kSummarizer = 2,
  kExtendedClassifier = 3,
  kClassifier = 4,
};

inline constexpr std::array<Bottleneck, 5> kAllBottlenecks = {
    Bottleneck::kEncoder, Bottleneck::kEncodingAugment, Bottleneck::kSummarizer,
    Bottleneck::kExtendedClassifier, Bottleneck::kClassifier};

const std::string& bottleneck_name(Bottleneck b);
Bottleneck bottleneck_from_name(const std::string& name);

template <typename Scalar>
struct LhbWeightsT {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct ConvBlock {
    Mat kernel;  // [out x k*in], column index j*in + i
    Vec bias;
    Vec gn_scale;
    Vec gn_shift;
  };

  std::vector<ConvBlock> blocks;
  Vec mask_token;
  Mat ctx_kernel;  // [dim x (dim/groups)*k], column index j*group_size + local
  Vec ctx_bias;
  Mat ext_weight;  // [hidden x dim*segments]
  Vec ext_bias;
  Vec bn_scale;
  Vec bn_shift;
  Vec bn_mean;
  Vec bn_var;
  Mat cls_weight;  // [classes x hidden]
  Vec cls_bias;
};

struct FineTuneOptions {
  int epochs = 5;
  double learning_rate = 1.0e-3;
  int batch_size = 8;
  std::uint64_t seed = 0;
};

struct FineTuneReport {
  std::vector<double> epoch_loss;    // mean cross-entropy per epoch
  double train_accuracy = 0.0;       // eval-mode accuracy after the last step
};

// The network itself. Instantiated for float (production) and double
// (verification). Forward passes are const and safe to call concurrently.
template <typename Scalar>
class LhbModelT {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // Stage outputs of an inference pass, in model order.
  struct Activations {
    Mat encoder;     // [dim x L]
    Mat augment;     // [dim x L]
    Mat summarizer;  // [dim x segments]
    Vec extended;    // [hidden]
    Vec logits;      // [classes]

    // Row-major flattened copy of one stage output.
    Vec at(Bottleneck b) const;
  };

  LhbModelT(LhbConfig config, std::uint64_t seed);
  LhbModelT(LhbConfig config, LhbWeightsT<Scalar> weights);

  const LhbConfig& config() const { return config_; }
  const LhbWeightsT<Scalar>& weights() const { return weights_; }
  LhbWeightsT<Scalar>& mutable_weights() { return weights_; }

  int activation_dim(Bottleneck b, int input_len) const;

  // Inference-mode forward pass over one window [in_channels x samples].
  Activations forward(const Mat& window) const;
  Vec logits(const Mat& window) const;

  // d logits[class_index] / d activation(bottleneck) in inference mode,
  // flattened to match Activations::at.
  Vec grad_wrt_bottleneck(const Mat& window, Bottleneck b, int class_index) const;

  // Plain SGD on softmax cross-entropy, training-mode forward (masking,
  // channel drop, dropout, batch statistics). Deterministic for a fixed seed.
  FineTuneReport fine_tune(const std::vector<Mat>& windows, const std::vector<int>& labels,
                           const FineTuneOptions& options);

  template <typename Other>
  LhbModelT<Other> cast() const {
    LhbWeightsT<Other> w;
    w.blocks.resize(weights_.blocks.size());
    for (std::size_t i = 0; i < weights_.blocks.size(); ++i) {
      w.blocks[i].kernel = weights_.blocks[i].kernel.template cast<Other>();
      w.blocks[i].bias = weights_.blocks[i].bias.template cast<Other>();
      w.blocks[i].gn_scale = weights_.blocks[i].gn_scale.template cast<Other>();
      w.blocks[i].gn_shift = weights_.blocks[i].gn_shift.template cast<Other>();
    }
    w.mask_token = weights_.mask_token.template cast<Other>();
    w.ctx_kernel = weights_.ctx_kernel.template cast<Other>();
    w.ctx_bias = weights_.ctx_bias.template cast<Other>();
    w.ext_weight = weights_.ext_weight.template cast<Other>();
    w.ext_bias = weights_.ext_bias.template cast<Other>();
    w.bn_scale = weights_.bn_scale.template cast<Other>();
    w.bn_shift = weights_.bn_shift.template cast<Other>();
    w.bn_mean = weights_.bn_mean.template cast<Other>();
    w.bn_var = weights_.bn_var.template cast<Other>();
    w.cls_weight = weights_.cls_weight.template cast<Other>();
    w.cls_bias = weights_.cls_bias.template cast<Other>();
    return LhbModelT<Other>(config_, std::move(w));
  }

 private:
  void check_window(const Mat& window) const;

  LhbConfig config_;
  LhbWeightsT<Scalar> weights_;
};

using LhbModel = LhbModelT<float>;
using LhbModelD = LhbModelT<double>;

// Binary model container (magic "LHBW"): named tensors with explicit dims and
// float32 payloads. Kernel tensors are stored [out][in][kernel] row-major.
std::vector<std::uint8_t> serialize_model(const LhbModel& m);
LhbModel deserialize_model(const std::vector<std::uint8_t>& bytes);
void save_model(const LhbModel& m, const std::string& path);
LhbModel load_model(const std::string& path);

}  // namespace eegtcav::model

#endif  // EEGTCAV_MODEL_HPP_
