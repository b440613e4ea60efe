#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bridgeplan/rng.hpp"

namespace bridgeplan {

using LatentVec = std::vector<double>;

enum class DecayKind { kLinear, kExponential };

DecayKind parse_decay_kind(const std::string& name);
std::string to_string(DecayKind kind);

struct BridgeConfig {
  std::size_t d = 16;
  DecayKind decay = DecayKind::kLinear;
  double lambda = 0.5;  // exponential decay only
  bool pin_final = true;

  // Throws std::invalid_argument unless d >= 1 and 0 < lambda < 1.
  void validate() const;
};

// Isotropic Gaussian: one variance shared by every latent dimension.
struct GaussParams {
  LatentVec mu;
  double var = 0.0;
};

// Transition distribution of a bridge pinned at z0 (time 0) and zT (time T):
// mean (1 - t/T) z0 + (t/T) zT, variance t (T - t) / T.
GaussParams standard_bridge(std::span<const double> z0,
                            std::span<const double> zT, int t, int T);

// Feedback decay phi(delta_u) at time t.
//   linear:       delta_u (1 - t/T)
//   exponential:  delta_u exp(-t / (lambda T))
double decay(double delta_u, int t, int T, const BridgeConfig& cfg);

// d phi / d delta_u; phi is linear in delta_u for both kinds.
double decay_slope(int t, int T, const BridgeConfig& cfg);

// Bridge whose start is shifted by the feedback embedding zu and whose
// variance is inflated by decay(delta_u). Defined for 0 <= t <= T; the
// endpoints follow the same formula.
GaussParams perturbed_bridge(std::span<const double> z0,
                             std::span<const double> zT,
                             std::span<const double> zu, double delta_u,
                             int t, int T, const BridgeConfig& cfg);

// mu + sqrt(var) * eps, eps ~ N(0, I), one normal drawn per dimension in
// index order. var == 0 returns mu without touching the generator.
LatentVec sample_point(const GaussParams& p, Rng& rng);

// Points at t = 1..T, each drawn independently from perturbed_bridge. With
// cfg.pin_final the last point is replaced by zT.
std::vector<LatentVec> sample_trajectory(std::span<const double> z0,
                                         std::span<const double> zT,
                                         std::span<const double> zu,
                                         double delta_u, int T,
                                         const BridgeConfig& cfg, Rng& rng);

// -||z - mu||^2 / (2 var). Throws std::invalid_argument if var <= 0.
double alignment_score(std::span<const double> z, const GaussParams& p);

}  // namespace bridgeplan
