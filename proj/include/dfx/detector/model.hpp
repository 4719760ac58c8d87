#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfx/core/image.hpp"
#include "dfx/detector/tensor.hpp"

namespace dfx::detector {

enum class LayerKind { conv, relu, max_pool, global_avg_pool, dense, sigmoid };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

/// One entry of the architecture descriptor. Only the fields relevant to
/// `kind` are meaningful; convolutions use odd square kernels with "same"
/// zero padding and stride 1, pooling is non-overlapping.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::relu;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int pool = 2;
  int in_features = 0;
  int out_features = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Named parameter tensor. Stored as float32 so checkpoints round-trip
/// bit-exactly; all arithmetic promotes to double.
struct ParamTensor {
  std::vector<int> shape;
  std::vector<float> values;

  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_auc = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Gradients keyed by parameter name, same layout as ParamTensor::values.
using ParamGradients = std::map<std::string, std::vector<double>>;

/// Sequential convolutional classifier ending in dense -> sigmoid.
///
/// `feature_layer_id` names the layer whose *output* is exposed as the
/// attribution feature maps F^k; everything after it is the "head" that
/// Grad-CAM differentiates. `final_conv_layer_id` must name a convolution at
/// or before the feature layer with no other convolution in between.
class DetectorModel {
 public:
  DetectorModel(InputSpec input, std::vector<LayerSpec> layers, std::string final_conv_layer_id,
                std::string feature_layer_id);

  /// Three conv blocks (3x3 conv -> ReLU -> 2x2 max-pool), global average
  /// pool, dense, sigmoid. The attribution layer is the last block's output,
  /// an 8x8 grid for 64x64 inputs.
  static DetectorModel reference(InputSpec input = {64, 64, 3}, std::uint64_t seed = 7,
                                 std::vector<int> conv_channels = {8, 16, 16});

  /// Glorot-uniform weights in +/- sqrt(6 / (fan_in + fan_out)), zero
  /// biases. With `zero_head` the final dense layer starts at zero so the
  /// untrained model scores every input 0.5.
  void initialize(std::uint64_t seed, bool zero_head = true);

  const InputSpec& input_spec() const noexcept { return input_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const std::string& final_conv_layer_id() const noexcept { return final_conv_layer_id_; }
  const std::string& feature_layer_id() const noexcept { return feature_layer_id_; }
  std::size_t feature_layer_index() const noexcept { return feature_index_; }
  std::size_t layer_index(std::string_view id) const;

  const std::map<std::string, ParamTensor>& parameters() const noexcept { return params_; }
  std::map<std::string, ParamTensor>& parameters() noexcept { return params_; }
  /// Replaces all parameters; names and shapes must match the architecture.
  void set_parameters(std::map<std::string, ParamTensor> params);

  const std::vector<EpochRecord>& history() const noexcept { return history_; }
  void set_history(std::vector<EpochRecord> history) { history_ = std::move(history); }

  /// Converts an H x W x C image into the C x H x W input tensor after
  /// checking it against input_spec (ErrorKind::input on mismatch).
  Tensor to_input(const ImageBuffer& image) const;

  /// Runs layers [begin, end) on `input`. Returns every intermediate
  /// activation: result[0] == input, result[n] == output of layer begin+n-1.
  /// Throws ErrorKind::numeric naming the layer if a non-finite value appears.
  std::vector<Tensor> run(const Tensor& input, std::size_t begin, std::size_t end) const;

  /// Backpropagates `grad_output` through layers [begin, end) using the
  /// activations returned by run() over the same range. Parameter gradients
  /// are accumulated into `param_grads` when non-null. Returns the gradient
  /// with respect to trace[0].
  Tensor backward(const std::vector<Tensor>& trace, Tensor grad_output, std::size_t begin,
                  std::size_t end, ParamGradients* param_grads) const;

  /// Index of the final sigmoid; layers before it produce the logit.
  std::size_t logit_end() const noexcept { return layers_.size() - 1; }

  nlohmann::json architecture_json() const;
  static DetectorModel from_architecture_json(const nlohmann::json& j);

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;

 private:
  void validate_architecture();

  InputSpec input_;
  std::vector<LayerSpec> layers_;
  std::string final_conv_layer_id_;
  std::string feature_layer_id_;
  std::size_t feature_index_ = 0;
  std::map<std::string, ParamTensor> params_;
  std::vector<EpochRecord> history_;
};

}  // namespace dfx::detector
