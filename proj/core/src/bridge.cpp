#include "bridgeplan/bridge.hpp"

#include <cmath>
#include <stdexcept>

namespace bridgeplan {
namespace {

void check_times(int t, int T) {
  if (T <= 0) throw std::invalid_argument("bridge end time T must be >= 1");
  if (t < 0 || t > T) {
    throw std::invalid_argument("bridge time t=" + std::to_string(t) +
                                " outside [0, " + std::to_string(T) + "]");
  }
}

void check_dims(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("latent dimension mismatch: " + std::to_string(a) +
                                " vs " + std::to_string(b));
  }
}

double bridge_variance(int t, int T) {
  return static_cast<double>(t) * static_cast<double>(T - t) / static_cast<double>(T);
}

}  // namespace

DecayKind parse_decay_kind(const std::string& name) {
  if (name == "linear") return DecayKind::kLinear;
  if (name == "exponential") return DecayKind::kExponential;
  throw std::invalid_argument("unknown decay kind '" + name + "'");
}

std::string to_string(DecayKind kind) {
  return kind == DecayKind::kLinear ? "linear" : "exponential";
}

void BridgeConfig::validate() const {
  if (d < 1) throw std::invalid_argument("latent dimension d must be >= 1");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("lambda must lie in (0, 1)");
  }
}

GaussParams standard_bridge(std::span<const double> z0,
                            std::span<const double> zT, int t, int T) {
  check_times(t, T);
  check_dims(z0.size(), zT.size());
  const double b = static_cast<double>(t) / static_cast<double>(T);
  const double a = 1.0 - b;
  GaussParams p;
  p.mu.resize(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) p.mu[i] = a * z0[i] + b * zT[i];
  p.var = bridge_variance(t, T);
  return p;
}

double decay_slope(int t, int T, const BridgeConfig& cfg) {
  check_times(t, T);
  const double frac = static_cast<double>(t) / static_cast<double>(T);
  if (cfg.decay == DecayKind::kLinear) return 1.0 - frac;
  return std::exp(-frac / cfg.lambda);
}

double decay(double delta_u, int t, int T, const BridgeConfig& cfg) {
  return delta_u * decay_slope(t, T, cfg);
}

GaussParams perturbed_bridge(std::span<const double> z0,
                             std::span<const double> zT,
                             std::span<const double> zu, double delta_u,
                             int t, int T, const BridgeConfig& cfg) {
  check_times(t, T);
  check_dims(z0.size(), zT.size());
  check_dims(z0.size(), zu.size());
  const double b = static_cast<double>(t) / static_cast<double>(T);
  const double a = 1.0 - b;
  GaussParams p;
  p.mu.resize(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) p.mu[i] = a * (z0[i] + zu[i]) + b * zT[i];
  p.var = bridge_variance(t, T) + decay(delta_u, t, T, cfg);
  return p;
}

LatentVec sample_point(const GaussParams& p, Rng& rng) {
  if (p.var < 0.0) throw std::invalid_argument("negative variance");
  LatentVec out = p.mu;
  if (p.var == 0.0) return out;
  const double sd = std::sqrt(p.var);
  for (double& v : out) v += sd * rng.normal();
  return out;
}

std::vector<LatentVec> sample_trajectory(std::span<const double> z0,
                                         std::span<const double> zT,
                                         std::span<const double> zu,
                                         double delta_u, int T,
                                         const BridgeConfig& cfg, Rng& rng) {
  if (T <= 0) throw std::invalid_argument("trajectory length T must be >= 1");
  std::vector<LatentVec> out;
  out.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    if (t == T && cfg.pin_final) {
      check_dims(z0.size(), zT.size());
      out.emplace_back(zT.begin(), zT.end());
      break;
    }
    out.push_back(sample_point(perturbed_bridge(z0, zT, zu, delta_u, t, T, cfg), rng));
  }
  return out;
}

double alignment_score(std::span<const double> z, const GaussParams& p) {
  if (!(p.var > 0.0)) throw std::invalid_argument("alignment score needs var > 0");
  check_dims(z.size(), p.mu.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double diff = z[i] - p.mu[i];
    sq += diff * diff;
  }
  return -sq / (2.0 * p.var);
}

}  // namespace bridgeplan
