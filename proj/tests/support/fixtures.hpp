#pragma once

// Hand-built encoder parameters shared by the unit and acceptance suites.

#include <cmath>
#include <string>
#include <vector>

#include "bridgeplan/corpus.hpp"
#include "bridgeplan/embedder.hpp"
#include "bridgeplan/encoder.hpp"

namespace bridgeplan::testing {

inline void set_weight(MlpBlock& block, std::size_t layer, std::size_t row,
                       std::size_t col, double value) {
  const MlpBlock::Layer& l = block.layers()[layer];
  block.params()[l.weight_offset + row * l.in + col] = value;
}

// m = 2, d = 1. f_P maps x to c * tanh(tanh(x[0])) with c chosen so that
// x = (1, 0) lands at sqrt(3); f_C and f_E are zero, so zu = 0 and
// delta_u = 1/2. At t = 1, T = 2 under linear decay the bridge variance is
// 1/2 + 1/4 = 3/4, and a point at distance sqrt(3) from the mean scores
// -3 / (2 * 3/4) = -2.
inline EncoderParams scalar_fixture_params() {
  EncoderParams p = EncoderParams::zeros(2, 1, 4);
  set_weight(p.point, 0, 0, 0, 1.0);
  set_weight(p.point, 1, 0, 0, 1.0);
  set_weight(p.point, 2, 0, 0, std::sqrt(3.0) / std::tanh(std::tanh(1.0)));
  return p;
}

// Texts "zero" and "one" map to features (0, 0) and (1, 0).
inline Featurizer scalar_fixture_featurizer() {
  Featurizer f(2);
  f.add_override("zero", {0.0, 0.0});
  f.add_override("one", {1.0, 0.0});
  return f;
}

inline TupleSample fixture_tuple(std::string id, std::string endpoints,
                                 std::string point, int t, int T) {
  TupleSample s;
  s.dialogue_id = std::move(id);
  s.s0_text = endpoints;
  s.sT_text = std::move(endpoints);
  s.st_text = std::move(point);
  s.t = t;
  s.T = T;
  return s;
}

}  // namespace bridgeplan::testing
