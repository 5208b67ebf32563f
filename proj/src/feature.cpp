#include "tramsurv/feature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tramsurv/error.hpp"
#include "tramsurv/kernels.hpp"
#include "tramsurv/random.hpp"

namespace tramsurv {

void validate_extractor_spec(const ExtractorSpec& spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1) {
    throw Error(ErrorCode::InvalidArgument, "extractor dimensions must be >= 1");
  }
  for (std::size_t h : spec.hidden_dims) {
    if (h < 1) throw Error(ErrorCode::InvalidArgument, "hidden layer width must be >= 1");
  }
  if (!(spec.init_scale > 0.0) || !std::isfinite(spec.init_scale)) {
    throw Error(ErrorCode::InvalidArgument, "init_scale must be positive");
  }
}

ExtractorLayout::ExtractorLayout(const ExtractorSpec& spec) {
  validate_extractor_spec(spec);
  std::size_t in = spec.input_dim;
  std::size_t offset = 0;
  auto push = [&](std::size_t out, bool activated) {
    LayerLayout l;
    l.in = in;
    l.out = out;
    l.weight_offset = offset;
    offset += in * out;
    l.bias_offset = offset;
    offset += out;
    l.activated = activated;
    layers_.push_back(l);
    in = out;
  };
  for (std::size_t h : spec.hidden_dims) push(h, true);
  push(spec.output_dim, false);
  count_ = offset;
}

std::vector<LayerParams> unflatten_params(const ExtractorSpec& spec,
                                          std::span<const double> flat) {
  const ExtractorLayout layout(spec);
  if (flat.size() != layout.parameter_count()) {
    throw Error(ErrorCode::DimensionMismatch, "unflatten_params: parameter count");
  }
  std::vector<LayerParams> out;
  for (const auto& l : layout.layers()) {
    LayerParams p;
    auto w = flat.subspan(l.weight_offset, l.in * l.out);
    auto b = flat.subspan(l.bias_offset, l.out);
    p.weights.assign(w.begin(), w.end());
    p.bias.assign(b.begin(), b.end());
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> flatten_params(const ExtractorSpec& spec,
                                   const std::vector<LayerParams>& layers) {
  const ExtractorLayout layout(spec);
  if (layers.size() != layout.layers().size()) {
    throw Error(ErrorCode::DimensionMismatch, "flatten_params: layer count");
  }
  std::vector<double> flat(layout.parameter_count());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layout.layers()[i];
    if (layers[i].weights.size() != l.in * l.out || layers[i].bias.size() != l.out) {
      throw Error(ErrorCode::DimensionMismatch, "flatten_params: layer shape");
    }
    std::copy(layers[i].weights.begin(), layers[i].weights.end(),
              flat.begin() + static_cast<std::ptrdiff_t>(l.weight_offset));
    std::copy(layers[i].bias.begin(), layers[i].bias.end(),
              flat.begin() + static_cast<std::ptrdiff_t>(l.bias_offset));
  }
  return flat;
}

std::vector<double> init_params(const ExtractorSpec& spec, std::uint64_t seed) {
  const ExtractorLayout layout(spec);
  std::vector<double> flat(layout.parameter_count(), 0.0);
  rng::Stream stream(rng::key(seed, 0x6578747261ULL));
  for (const auto& l : layout.layers()) {
    const double bound = spec.init_scale / std::sqrt(static_cast<double>(l.in));
    for (std::size_t i = 0; i < l.in * l.out; ++i) {
      flat[l.weight_offset + i] = stream.uniform(-bound, bound);
    }
  }
  return flat;
}

namespace {

inline double activate(Activation a, double z) noexcept {
  return a == Activation::Tanh ? std::tanh(z) : std::max(z, 0.0);
}

// Derivative expressed through the activation output y.
inline double activate_grad(Activation a, double y) noexcept {
  return a == Activation::Tanh ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

void check_forward_args(const ExtractorLayout& layout, std::span<const double> params,
                        std::span<const double> x) {
  if (params.size() != layout.parameter_count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "extractor: expected " + std::to_string(layout.parameter_count()) +
                    " parameters, got " + std::to_string(params.size()));
  }
  if (x.size() != layout.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "extractor: expected input of length " + std::to_string(layout.input_dim()) +
                    ", got " + std::to_string(x.size()));
  }
}

}  // namespace

ExtractorOutput extractor_forward(const ExtractorSpec& spec, std::span<const double> params,
                                  std::span<const double> x) {
  const ExtractorLayout layout(spec);
  check_forward_args(layout, params, x);
  ExtractorOutput out;
  out.tape.parameter_count = layout.parameter_count();
  out.tape.activations.reserve(layout.layers().size() + 1);
  out.tape.activations.emplace_back(x.begin(), x.end());
  for (const auto& l : layout.layers()) {
    std::vector<double> y(l.out);
    kernels::gemv(params.subspan(l.weight_offset, l.in * l.out), out.tape.activations.back(),
                  params.subspan(l.bias_offset, l.out), y);
    if (l.activated) {
      for (double& v : y) v = activate(spec.activation, v);
    }
    out.tape.activations.push_back(std::move(y));
  }
  out.features = out.tape.activations.back();
  return out;
}

std::vector<double> extractor_features(const ExtractorSpec& spec,
                                       std::span<const double> params,
                                       std::span<const double> x) {
  return extractor_forward(spec, params, x).features;
}

void extractor_backward_acc(const ExtractorSpec& spec, std::span<const double> params,
                            const ExtractorTape& tape, std::span<const double> upstream,
                            std::span<double> param_grad) {
  const ExtractorLayout layout(spec);
  const auto layers = layout.layers();
  if (tape.parameter_count != layout.parameter_count() ||
      tape.activations.size() != layers.size() + 1 || params.size() != layout.parameter_count()) {
    throw Error(ErrorCode::TapeMismatch, "extractor_backward: tape does not match spec");
  }
  if (upstream.size() != layout.output_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "extractor_backward: upstream size");
  }
  if (param_grad.size() != layout.parameter_count()) {
    throw Error(ErrorCode::DimensionMismatch, "extractor_backward: gradient size");
  }
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    const auto& input = tape.activations[li];
    auto w = params.subspan(l.weight_offset, l.in * l.out);
    kernels::axpy(1.0, delta, param_grad.subspan(l.bias_offset, l.out));
    kernels::outer_acc(delta, input, param_grad.subspan(l.weight_offset, l.in * l.out));
    if (li == 0) break;
    std::vector<double> next(l.in, 0.0);
    kernels::gemv_transpose_acc(w, delta, next);
    // The input of layer li is the activated output of layer li-1.
    for (std::size_t i = 0; i < l.in; ++i) next[i] *= activate_grad(spec.activation, input[i]);
    delta = std::move(next);
  }
}

ExtractorGradient extractor_backward(const ExtractorSpec& spec,
                                     std::span<const double> params,
                                     const ExtractorTape& tape,
                                     std::span<const double> upstream) {
  const ExtractorLayout layout(spec);
  const auto layers = layout.layers();
  if (tape.parameter_count != layout.parameter_count() ||
      tape.activations.size() != layers.size() + 1) {
    throw Error(ErrorCode::TapeMismatch, "extractor_backward: tape does not match spec");
  }
  ExtractorGradient g;
  g.params.assign(layout.parameter_count(), 0.0);
  extractor_backward_acc(spec, params, tape, upstream, g.params);

  // Input gradient: replay the delta chain down to the input.
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    std::vector<double> next(l.in, 0.0);
    kernels::gemv_transpose_acc(params.subspan(l.weight_offset, l.in * l.out), delta, next);
    if (li > 0) {
      const auto& input = tape.activations[li];
      for (std::size_t i = 0; i < l.in; ++i) next[i] *= activate_grad(spec.activation, input[i]);
    }
    delta = std::move(next);
  }
  g.input = std::move(delta);
  return g;
}

}  // namespace tramsurv
