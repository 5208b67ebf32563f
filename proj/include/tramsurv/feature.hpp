#pragma once
// Fully connected feature extractor phi: R^p -> R^d with reverse-mode
// gradients. Hidden layers apply the configured activation; the output
// layer is linear.
//
// Parameters live in one flat vector. Layer l occupies
//   [weight_offset, weight_offset + out*in)  row-major weights (out x in)
//   [bias_offset,   bias_offset + out)       biases
// with layers stored consecutively from input to output.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tramsurv/core.hpp"

namespace tramsurv {

struct LayerLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  bool activated = false;

  bool operator==(const LayerLayout&) const = default;
};

class ExtractorLayout {
 public:
  explicit ExtractorLayout(const ExtractorSpec& spec);

  std::span<const LayerLayout> layers() const noexcept { return layers_; }
  std::size_t parameter_count() const noexcept { return count_; }
  std::size_t input_dim() const noexcept { return layers_.front().in; }
  std::size_t output_dim() const noexcept { return layers_.back().out; }

  bool operator==(const ExtractorLayout&) const = default;

 private:
  std::vector<LayerLayout> layers_;
  std::size_t count_ = 0;
};

/// Structured view of one layer's parameters.
struct LayerParams {
  std::vector<double> weights;  // row-major out x in
  std::vector<double> bias;

  bool operator==(const LayerParams&) const = default;
};

std::vector<LayerParams> unflatten_params(const ExtractorSpec& spec,
                                          std::span<const double> flat);
std::vector<double> flatten_params(const ExtractorSpec& spec,
                                   const std::vector<LayerParams>& layers);

/// Activation record of one forward pass. activations[0] is the input;
/// activations[l+1] is the output of layer l.
struct ExtractorTape {
  std::size_t parameter_count = 0;
  std::vector<std::vector<double>> activations;
};

struct ExtractorOutput {
  std::vector<double> features;
  ExtractorTape tape;
};

struct ExtractorGradient {
  std::vector<double> params;
  std::vector<double> input;
};

void validate_extractor_spec(const ExtractorSpec& spec);

/// Weights uniform in +-init_scale/sqrt(fan_in), biases zero.
std::vector<double> init_params(const ExtractorSpec& spec, std::uint64_t seed);

ExtractorOutput extractor_forward(const ExtractorSpec& spec, std::span<const double> params,
                                  std::span<const double> x);

/// Features only; skips recording the tape.
std::vector<double> extractor_features(const ExtractorSpec& spec,
                                       std::span<const double> params,
                                       std::span<const double> x);

ExtractorGradient extractor_backward(const ExtractorSpec& spec,
                                     std::span<const double> params,
                                     const ExtractorTape& tape,
                                     std::span<const double> upstream);

/// Same as extractor_backward but accumulates the parameter gradient into
/// `param_grad` and skips the input gradient.
void extractor_backward_acc(const ExtractorSpec& spec, std::span<const double> params,
                            const ExtractorTape& tape, std::span<const double> upstream,
                            std::span<double> param_grad);

}  // namespace tramsurv
