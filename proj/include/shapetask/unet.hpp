#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "shapetask/autodiff.hpp"
#include "shapetask/grid.hpp"
#include "shapetask/tensor.hpp"

namespace shapetask {

struct NetConfig {
  int depth = 3;          // pooling stages
  int base_channels = 8;  // channels at the first stage
  int num_classes = 5;    // organs + 1

  void validate() const {
    if (depth < 1) throw InvalidArgumentError("net: depth must be >= 1");
    if (base_channels < 1) throw InvalidArgumentError("net: base_channels must be >= 1");
    if (num_classes < 2) throw InvalidArgumentError("net: num_classes must be >= 2");
  }

  bool operator==(const NetConfig&) const = default;
};

// The three head outputs, as tape handles.
struct Prediction {
  ad::Var seg_logits;      // L×H×W
  ad::Var dist;            // 1×H×W
  ad::Var contour_logits;  // 2×H×W
};

struct PredictionValues {
  Tensor seg_logits;
  Tensor dist;
  Tensor contour_logits;
};

// Encoder-decoder with skip connections and three 1×1-conv branches after a
// shared block at the end of the last up-convolution. Weights come from a
// fan-in-scaled normal drawn from the seed; biases start at zero.
class MultiHeadUNet {
 public:
  MultiHeadUNet(const NetConfig& config, std::uint64_t seed);

  const NetConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  // Training-path forward: parameters are bound to the tape, so a later
  // backward() accumulates into their grads. image must be a 1×H×W leaf with
  // H and W divisible by 2^depth.
  Prediction forward(ad::Tape& tape, ad::Var image);

  // Inference forward on a private tape; safe to call concurrently.
  PredictionValues forward_eval(const Tensor& image) const;

  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  void zero_grads();
  std::int64_t parameter_count() const;

 private:
  struct ConvRef {
    int weight = -1;
    int bias = -1;
  };
  struct DecoderStage {
    int up_weight = -1;
    ConvRef conv1, conv2;
  };

  template <typename Binder>
  Prediction run(ad::Tape& tape, ad::Var image, Binder bind) const;

  NetConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<ad::Parameter> params_;

  std::vector<std::array<ConvRef, 2>> encoder_;  // per stage: two convs
  std::array<ConvRef, 2> bottleneck_;
  std::vector<DecoderStage> decoder_;  // deepest first; last stage is the shared block
  ConvRef head_seg_, head_dist_, head_contour_;
};

// Per-pixel argmax over the class axis; ties go to the smaller class id.
LabelMap predict_labels(const Tensor& seg_logits);

// Checkpoint: UTF-8 header (net config, seed, parameter shapes, payload
// checksum) followed by the little-endian f64 parameter payload in
// declaration order.
void save_checkpoint(const MultiHeadUNet& model, const std::filesystem::path& path);
MultiHeadUNet load_checkpoint(const std::filesystem::path& path);

}  // namespace shapetask
