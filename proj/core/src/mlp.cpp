#include "bridgeplan/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace bridgeplan {

MlpBlock::MlpBlock(std::size_t in, std::size_t hidden, std::size_t out) {
  if (in == 0 || hidden == 0 || out == 0) {
    throw std::invalid_argument("MLP dimensions must be positive");
  }
  const std::size_t dims[4] = {in, hidden, hidden, out};
  std::size_t offset = 0;
  for (int l = 0; l < 3; ++l) {
    Layer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.weight_offset = offset;
    offset += layer.in * layer.out;
    layer.bias_offset = offset;
    offset += layer.out;
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0);
}

void MlpBlock::init_glorot(Rng& rng) {
  for (const Layer& layer : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      params_[layer.weight_offset + i] = (2.0 * rng.uniform() - 1.0) * limit;
    }
    for (std::size_t i = 0; i < layer.out; ++i) params_[layer.bias_offset + i] = 0.0;
  }
}

std::vector<double> MlpBlock::forward(std::span<const double> x) const {
  Trace trace;
  return forward(x, trace);
}

std::vector<double> MlpBlock::forward(std::span<const double> x,
                                      Trace& trace) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("MLP input has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim()));
  }
  trace.inputs.resize(layers_.size());
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    std::vector<double> a(layer.out);
    const double* w = params_.data() + layer.weight_offset;
    const double* b = params_.data() + layer.bias_offset;
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = w + o * layer.in;
      double acc = b[o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * h[i];
      a[o] = acc;
    }
    if (l + 1 < layers_.size()) {
      for (double& v : a) v = std::tanh(v);
    }
    trace.inputs[l] = std::move(h);
    h = std::move(a);
  }
  trace.output = h;
  return h;
}

std::vector<double> MlpBlock::backward(const Trace& trace,
                                       std::span<const double> dy,
                                       std::span<double> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
  std::vector<double> delta(dy.begin(), dy.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const std::vector<double>& in = trace.inputs[l];
    const double* w = params_.data() + layer.weight_offset;
    double* gw = grad.data() + layer.weight_offset;
    double* gb = grad.data() + layer.bias_offset;
    std::vector<double> d_in(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double g = delta[o];
      gb[o] += g;
      if (g == 0.0) continue;
      const double* row = w + o * layer.in;
      double* grow = gw + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) {
        grow[i] += g * in[i];
        d_in[i] += g * row[i];
      }
    }
    if (l > 0) {
      // `in` is tanh of the previous layer's pre-activation.
      for (std::size_t i = 0; i < layer.in; ++i) d_in[i] *= 1.0 - in[i] * in[i];
    }
    delta = std::move(d_in);
  }
  return delta;
}

Adam::Adam(std::size_t num_params, double lr, double beta1, double beta2,
           double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad,
                double lr_scale) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam parameter size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double lr = lr_ * lr_scale;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

}  // namespace bridgeplan
