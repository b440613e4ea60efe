#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bridgeplan/rng.hpp"

namespace bridgeplan {

// Three affine layers, tanh between them, linear output. All weights live in
// one flat buffer so optimizers and checkpoints can treat a block as a
// single parameter vector. Weights are row-major (out x in), each layer's
// weights followed by its bias.
class MlpBlock {
 public:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
    friend bool operator==(const Layer&, const Layer&) = default;
  };

  // Activations recorded by forward() for use by backward().
  struct Trace {
    std::vector<std::vector<double>> inputs;  // input to each layer
    std::vector<double> output;
  };

  MlpBlock() = default;
  // Zero-initialized block: in -> hidden -> hidden -> out.
  MlpBlock(std::size_t in, std::size_t hidden, std::size_t out);

  // Uniform in +-sqrt(6 / (fan_in + fan_out)) for weights, zero biases.
  void init_glorot(Rng& rng);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t hidden_dim() const { return layers_.empty() ? 0 : layers_.front().out; }
  std::size_t num_params() const { return params_.size(); }

  const std::vector<Layer>& layers() const { return layers_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, Trace& trace) const;

  // Adds dLoss/dparams for upstream gradient `dy` into `grad` (length
  // num_params()) and returns dLoss/dx.
  std::vector<double> backward(const Trace& trace, std::span<const double> dy,
                               std::span<double> grad) const;

  friend bool operator==(const MlpBlock&, const MlpBlock&) = default;

 private:
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

// Adam with bias correction. step() applies one update in place.
class Adam {
 public:
  Adam(std::size_t num_params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad,
            double lr_scale = 1.0);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace bridgeplan
