#include "dfx/detector/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dfx/core/error.hpp"

namespace dfx::detector {
namespace {

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;
};

double param(const std::vector<float>& values, std::size_t i) { return static_cast<double>(values[i]); }

void conv_forward(const Tensor& in, const ParamTensor& weight, const ParamTensor& bias,
                  const LayerSpec& spec, Tensor& out) {
  const int k = spec.kernel;
  const int pad = k / 2;
  const int h = in.height;
  const int w = in.width;
  out = Tensor(spec.out_channels, h, w);
  for (int o = 0; o < spec.out_channels; ++o) {
    double* dst = &out.values[o * out.plane()];
    std::fill(dst, dst + out.plane(), param(bias.values, o));
    for (int i = 0; i < spec.in_channels; ++i) {
      const double* src = &in.values[i * in.plane()];
      for (int ky = 0; ky < k; ++ky) {
        const int dy = ky - pad;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < k; ++kx) {
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          const double wt = param(weight.values, ((static_cast<std::size_t>(o) * spec.in_channels + i) * k + ky) * k + kx);
          for (int y = y0; y < y1; ++y) {
            double* row = dst + static_cast<std::size_t>(y) * w;
            const double* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x0; x < x1; ++x) row[x] += wt * srow[x];
          }
        }
      }
    }
  }
}

Tensor conv_backward(const Tensor& in, const Tensor& grad_out, const ParamTensor& weight,
                     const LayerSpec& spec, std::vector<double>* grad_w, std::vector<double>* grad_b) {
  const int k = spec.kernel;
  const int pad = k / 2;
  const int h = in.height;
  const int w = in.width;
  Tensor grad_in(in.channels, h, w);
  for (int o = 0; o < spec.out_channels; ++o) {
    const double* g = &grad_out.values[o * grad_out.plane()];
    if (grad_b) {
      double sum = 0.0;
      for (std::size_t p = 0; p < grad_out.plane(); ++p) sum += g[p];
      (*grad_b)[o] += sum;
    }
    for (int i = 0; i < spec.in_channels; ++i) {
      const double* src = &in.values[i * in.plane()];
      double* gin = &grad_in.values[i * grad_in.plane()];
      for (int ky = 0; ky < k; ++ky) {
        const int dy = ky - pad;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < k; ++kx) {
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          const std::size_t widx = ((static_cast<std::size_t>(o) * spec.in_channels + i) * k + ky) * k + kx;
          const double wt = param(weight.values, widx);
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* grow = g + static_cast<std::size_t>(y) * w;
            const double* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
            double* girow = gin + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x0; x < x1; ++x) {
              acc += grow[x] * srow[x];
              girow[x] += wt * grow[x];
            }
          }
          if (grad_w) (*grad_w)[widx] += acc;
        }
      }
    }
  }
  return grad_in;
}

void pool_forward(const Tensor& in, int pool, Tensor& out) {
  out = Tensor(in.channels, in.height / pool, in.width / pool);
  for (int c = 0; c < out.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        double best = in.at(c, y * pool, x * pool);
        for (int py = 0; py < pool; ++py) {
          for (int px = 0; px < pool; ++px) best = std::max(best, in.at(c, y * pool + py, x * pool + px));
        }
        out.at(c, y, x) = best;
      }
    }
  }
}

// Gradient goes to the first maximal element of each window (row-major).
Tensor pool_backward(const Tensor& in, const Tensor& grad_out, int pool) {
  Tensor grad_in(in.channels, in.height, in.width);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int y = 0; y < grad_out.height; ++y) {
      for (int x = 0; x < grad_out.width; ++x) {
        int by = y * pool;
        int bx = x * pool;
        for (int py = 0; py < pool; ++py) {
          for (int px = 0; px < pool; ++px) {
            if (in.at(c, y * pool + py, x * pool + px) > in.at(c, by, bx)) {
              by = y * pool + py;
              bx = x * pool + px;
            }
          }
        }
        grad_in.at(c, by, bx) += grad_out.at(c, y, x);
      }
    }
  }
  return grad_in;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::dense: return "dense";
    case LayerKind::sigmoid: return "sigmoid";
  }
  return "relu";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (LayerKind kind : {LayerKind::conv, LayerKind::relu, LayerKind::max_pool,
                         LayerKind::global_avg_pool, LayerKind::dense, LayerKind::sigmoid}) {
    if (to_string(kind) == text) return kind;
  }
  fail(ErrorKind::parse, "unknown layer kind '" + std::string(text) + "'");
}

DetectorModel::DetectorModel(InputSpec input, std::vector<LayerSpec> layers,
                             std::string final_conv_layer_id, std::string feature_layer_id)
    : input_(input),
      layers_(std::move(layers)),
      final_conv_layer_id_(std::move(final_conv_layer_id)),
      feature_layer_id_(std::move(feature_layer_id)) {
  validate_architecture();
}

DetectorModel DetectorModel::reference(InputSpec input, std::uint64_t seed, std::vector<int> conv_channels) {
  std::vector<LayerSpec> layers;
  int in_channels = input.channels;
  for (std::size_t b = 0; b < conv_channels.size(); ++b) {
    const std::string n = std::to_string(b + 1);
    LayerSpec conv{.id = "conv" + n, .kind = LayerKind::conv};
    conv.in_channels = in_channels;
    conv.out_channels = conv_channels[b];
    conv.kernel = 3;
    layers.push_back(conv);
    layers.push_back({.id = "relu" + n, .kind = LayerKind::relu});
    layers.push_back({.id = "pool" + n, .kind = LayerKind::max_pool, .pool = 2});
    in_channels = conv_channels[b];
  }
  const std::string last = std::to_string(conv_channels.size());
  layers.push_back({.id = "gap", .kind = LayerKind::global_avg_pool});
  LayerSpec dense{.id = "dense", .kind = LayerKind::dense};
  dense.in_features = in_channels;
  dense.out_features = 1;
  layers.push_back(dense);
  layers.push_back({.id = "sigmoid", .kind = LayerKind::sigmoid});
  DetectorModel model(input, std::move(layers), "conv" + last, "pool" + last);
  model.initialize(seed);
  return model;
}

std::size_t DetectorModel::layer_index(std::string_view id) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].id == id) return i;
  }
  fail(ErrorKind::configuration, "no layer named '" + std::string(id) + "'");
}

void DetectorModel::validate_architecture() {
  if (input_.height <= 0 || input_.width <= 0 || input_.channels <= 0) {
    fail(ErrorKind::configuration, "input spec must be positive");
  }
  if (layers_.size() < 2 || layers_.back().kind != LayerKind::sigmoid) {
    fail(ErrorKind::configuration, "architecture must end with a sigmoid layer");
  }
  Shape shape{input_.channels, input_.height, input_.width};
  std::vector<std::string> seen;
  for (const LayerSpec& layer : layers_) {
    if (std::find(seen.begin(), seen.end(), layer.id) != seen.end()) {
      fail(ErrorKind::configuration, "duplicate layer id '" + layer.id + "'");
    }
    seen.push_back(layer.id);
    switch (layer.kind) {
      case LayerKind::conv:
        if (layer.in_channels != shape.c || layer.out_channels <= 0 || layer.kernel <= 0 ||
            layer.kernel % 2 == 0) {
          fail(ErrorKind::configuration, "conv layer '" + layer.id + "' has inconsistent channels or kernel");
        }
        shape.c = layer.out_channels;
        break;
      case LayerKind::relu:
      case LayerKind::sigmoid:
        break;
      case LayerKind::max_pool:
        if (layer.pool <= 0 || shape.h % layer.pool != 0 || shape.w % layer.pool != 0) {
          fail(ErrorKind::configuration, "pool layer '" + layer.id + "' does not tile its input");
        }
        shape.h /= layer.pool;
        shape.w /= layer.pool;
        break;
      case LayerKind::global_avg_pool:
        shape.h = 1;
        shape.w = 1;
        break;
      case LayerKind::dense:
        if (layer.in_features != shape.c * shape.h * shape.w || layer.out_features <= 0) {
          fail(ErrorKind::configuration, "dense layer '" + layer.id + "' expects " +
                                             std::to_string(layer.in_features) + " inputs, got " +
                                             std::to_string(shape.c * shape.h * shape.w));
        }
        shape = {layer.out_features, 1, 1};
        break;
    }
  }
  if (shape.c != 1 || shape.h != 1 || shape.w != 1) {
    fail(ErrorKind::configuration, "architecture must produce a single scalar");
  }

  const std::size_t conv_index = layer_index(final_conv_layer_id_);
  feature_index_ = layer_index(feature_layer_id_);
  if (layers_[conv_index].kind != LayerKind::conv) {
    fail(ErrorKind::configuration, "final conv layer '" + final_conv_layer_id_ + "' is not a convolution");
  }
  if (feature_index_ < conv_index || feature_index_ >= logit_end()) {
    fail(ErrorKind::configuration, "feature layer must follow the final conv layer and precede the head");
  }
  for (std::size_t i = conv_index + 1; i <= feature_index_; ++i) {
    const LayerKind kind = layers_[i].kind;
    if (kind != LayerKind::relu && kind != LayerKind::max_pool) {
      fail(ErrorKind::configuration, "feature layer must stay within the final conv block");
    }
  }
  for (std::size_t i = conv_index + 1; i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::conv) {
      fail(ErrorKind::configuration, "layer '" + layers_[i].id + "' is a convolution after the final conv layer");
    }
  }

  params_.clear();
  for (const LayerSpec& layer : layers_) {
    if (layer.kind == LayerKind::conv) {
      params_[layer.id + ".weight"] = {{layer.out_channels, layer.in_channels, layer.kernel, layer.kernel},
                                       std::vector<float>(static_cast<std::size_t>(layer.out_channels) *
                                                          layer.in_channels * layer.kernel * layer.kernel)};
      params_[layer.id + ".bias"] = {{layer.out_channels}, std::vector<float>(layer.out_channels)};
    } else if (layer.kind == LayerKind::dense) {
      params_[layer.id + ".weight"] = {{layer.out_features, layer.in_features},
                                       std::vector<float>(static_cast<std::size_t>(layer.out_features) *
                                                          layer.in_features)};
      params_[layer.id + ".bias"] = {{layer.out_features}, std::vector<float>(layer.out_features)};
    }
  }
}

void DetectorModel::initialize(std::uint64_t seed, bool zero_head) {
  std::mt19937_64 rng(seed);
  std::size_t last_dense = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::dense) last_dense = i;
  }
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const LayerSpec& layer = layers_[li];
    int fan_in = 0;
    int fan_out = 0;
    if (layer.kind == LayerKind::conv) {
      fan_in = layer.in_channels * layer.kernel * layer.kernel;
      fan_out = layer.out_channels * layer.kernel * layer.kernel;
    } else if (layer.kind == LayerKind::dense) {
      fan_in = layer.in_features;
      fan_out = layer.out_features;
    } else {
      continue;
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const bool zero = zero_head && li == last_dense;
    for (float& v : params_.at(layer.id + ".weight").values) v = zero ? 0.0f : static_cast<float>(dist(rng));
    for (float& v : params_.at(layer.id + ".bias").values) v = 0.0f;
  }
  history_.clear();
}

void DetectorModel::set_parameters(std::map<std::string, ParamTensor> params) {
  if (params.size() != params_.size()) {
    fail(ErrorKind::configuration, "parameter set has " + std::to_string(params.size()) +
                                       " tensors, architecture needs " + std::to_string(params_.size()));
  }
  for (const auto& [name, tensor] : params_) {
    auto it = params.find(name);
    if (it == params.end()) fail(ErrorKind::configuration, "missing parameter '" + name + "'");
    if (it->second.shape != tensor.shape || it->second.values.size() != tensor.values.size()) {
      fail(ErrorKind::configuration, "parameter '" + name + "' has the wrong shape");
    }
  }
  params_ = std::move(params);
}

Tensor DetectorModel::to_input(const ImageBuffer& image) const {
  if (image.shape() != input_) {
    fail(ErrorKind::input, "image shape " + std::to_string(image.height()) + "x" +
                               std::to_string(image.width()) + "x" + std::to_string(image.channels()) +
                               " does not match detector input " + std::to_string(input_.height) + "x" +
                               std::to_string(input_.width) + "x" + std::to_string(input_.channels));
  }
  Tensor t(input_.channels, input_.height, input_.width);
  for (int y = 0; y < input_.height; ++y) {
    for (int x = 0; x < input_.width; ++x) {
      for (int c = 0; c < input_.channels; ++c) t.at(c, y, x) = image.at(y, x, c);
    }
  }
  return t;
}

std::vector<Tensor> DetectorModel::run(const Tensor& input, std::size_t begin, std::size_t end) const {
  std::vector<Tensor> trace;
  trace.reserve(end - begin + 1);
  trace.push_back(input);
  for (std::size_t li = begin; li < end; ++li) {
    const LayerSpec& layer = layers_[li];
    const Tensor& in = trace.back();
    Tensor out;
    switch (layer.kind) {
      case LayerKind::conv:
        conv_forward(in, params_.at(layer.id + ".weight"), params_.at(layer.id + ".bias"), layer, out);
        break;
      case LayerKind::relu:
        out = in;
        for (double& v : out.values) v = std::max(0.0, v);
        break;
      case LayerKind::max_pool:
        pool_forward(in, layer.pool, out);
        break;
      case LayerKind::global_avg_pool: {
        out = Tensor(in.channels, 1, 1);
        for (int c = 0; c < in.channels; ++c) {
          double sum = 0.0;
          for (std::size_t p = 0; p < in.plane(); ++p) sum += in.values[c * in.plane() + p];
          out.values[c] = sum / static_cast<double>(in.plane());
        }
        break;
      }
      case LayerKind::dense: {
        const ParamTensor& weight = params_.at(layer.id + ".weight");
        const ParamTensor& bias = params_.at(layer.id + ".bias");
        out = Tensor(layer.out_features, 1, 1);
        for (int o = 0; o < layer.out_features; ++o) {
          double sum = param(bias.values, o);
          const std::size_t row = static_cast<std::size_t>(o) * layer.in_features;
          for (int j = 0; j < layer.in_features; ++j) sum += param(weight.values, row + j) * in.values[j];
          out.values[o] = sum;
        }
        break;
      }
      case LayerKind::sigmoid:
        out = in;
        for (double& v : out.values) v = 1.0 / (1.0 + std::exp(-v));
        break;
    }
    for (double v : out.values) {
      if (!std::isfinite(v)) fail(ErrorKind::numeric, "non-finite activation in layer '" + layer.id + "'");
    }
    trace.push_back(std::move(out));
  }
  return trace;
}

Tensor DetectorModel::backward(const std::vector<Tensor>& trace, Tensor grad, std::size_t begin,
                               std::size_t end, ParamGradients* param_grads) const {
  for (std::size_t li = end; li-- > begin;) {
    const LayerSpec& layer = layers_[li];
    const Tensor& in = trace[li - begin];
    const Tensor& out = trace[li - begin + 1];
    switch (layer.kind) {
      case LayerKind::conv: {
        std::vector<double>* gw = nullptr;
        std::vector<double>* gb = nullptr;
        if (param_grads) {
          auto& w = (*param_grads)[layer.id + ".weight"];
          auto& b = (*param_grads)[layer.id + ".bias"];
          w.resize(params_.at(layer.id + ".weight").values.size());
          b.resize(params_.at(layer.id + ".bias").values.size());
          gw = &w;
          gb = &b;
        }
        grad = conv_backward(in, grad, params_.at(layer.id + ".weight"), layer, gw, gb);
        break;
      }
      case LayerKind::relu:
        for (std::size_t i = 0; i < grad.size(); ++i) {
          if (in.values[i] <= 0.0) grad.values[i] = 0.0;
        }
        break;
      case LayerKind::max_pool:
        grad = pool_backward(in, grad, layer.pool);
        break;
      case LayerKind::global_avg_pool: {
        Tensor g(in.channels, in.height, in.width);
        const double scale = 1.0 / static_cast<double>(in.plane());
        for (int c = 0; c < in.channels; ++c) {
          for (std::size_t p = 0; p < in.plane(); ++p) g.values[c * in.plane() + p] = grad.values[c] * scale;
        }
        grad = std::move(g);
        break;
      }
      case LayerKind::dense: {
        const ParamTensor& weight = params_.at(layer.id + ".weight");
        Tensor g(in.channels, in.height, in.width);
        std::vector<double>* gw = nullptr;
        std::vector<double>* gb = nullptr;
        if (param_grads) {
          auto& w = (*param_grads)[layer.id + ".weight"];
          auto& b = (*param_grads)[layer.id + ".bias"];
          w.resize(weight.values.size());
          b.resize(layer.out_features);
          gw = &w;
          gb = &b;
        }
        for (int o = 0; o < layer.out_features; ++o) {
          const double go = grad.values[o];
          const std::size_t row = static_cast<std::size_t>(o) * layer.in_features;
          for (int j = 0; j < layer.in_features; ++j) {
            g.values[j] += param(weight.values, row + j) * go;
            if (gw) (*gw)[row + j] += go * in.values[j];
          }
          if (gb) (*gb)[o] += go;
        }
        grad = std::move(g);
        break;
      }
      case LayerKind::sigmoid:
        for (std::size_t i = 0; i < grad.size(); ++i) {
          const double s = out.values[i];
          grad.values[i] *= s * (1.0 - s);
        }
        break;
    }
  }
  return grad;
}

nlohmann::json DetectorModel::architecture_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& layer : layers_) {
    nlohmann::json entry{{"id", layer.id}, {"kind", to_string(layer.kind)}};
    switch (layer.kind) {
      case LayerKind::conv:
        entry["in_channels"] = layer.in_channels;
        entry["out_channels"] = layer.out_channels;
        entry["kernel"] = layer.kernel;
        break;
      case LayerKind::max_pool:
        entry["pool"] = layer.pool;
        break;
      case LayerKind::dense:
        entry["in_features"] = layer.in_features;
        entry["out_features"] = layer.out_features;
        break;
      default:
        break;
    }
    layers.push_back(std::move(entry));
  }
  return {{"input", {{"height", input_.height}, {"width", input_.width}, {"channels", input_.channels}}},
          {"layers", std::move(layers)},
          {"final_conv_layer_id", final_conv_layer_id_},
          {"feature_layer_id", feature_layer_id_}};
}

DetectorModel DetectorModel::from_architecture_json(const nlohmann::json& j) {
  try {
    InputSpec input{j.at("input").at("height").get<int>(), j.at("input").at("width").get<int>(),
                    j.at("input").at("channels").get<int>()};
    std::vector<LayerSpec> layers;
    for (const auto& entry : j.at("layers")) {
      LayerSpec layer;
      layer.id = entry.at("id").get<std::string>();
      layer.kind = parse_layer_kind(entry.at("kind").get<std::string>());
      layer.in_channels = entry.value("in_channels", 0);
      layer.out_channels = entry.value("out_channels", 0);
      layer.kernel = entry.value("kernel", 3);
      layer.pool = entry.value("pool", 2);
      layer.in_features = entry.value("in_features", 0);
      layer.out_features = entry.value("out_features", 0);
      layers.push_back(std::move(layer));
    }
    return DetectorModel(input, std::move(layers), j.at("final_conv_layer_id").get<std::string>(),
                         j.at("feature_layer_id").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed architecture descriptor: ") + e.what());
  }
}

}  // namespace dfx::detector
