#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bridgeplan/bridge.hpp"
#include "bridgeplan/corpus.hpp"
#include "bridgeplan/embedder.hpp"
#include "bridgeplan/mlp.hpp"

namespace bridgeplan {

// Trainable latent mapping over base features.
//   point:      features -> latent (shared by start, path point, target and
//               the feedback latent)
//   feedback:   features -> features (user-utterance context)
//   engagement: features -> scalar pre-activation of delta_u
struct EncoderParams {
  std::size_t m = 1024;
  std::size_t d = 16;
  std::size_t hidden = 64;
  std::uint64_t seed = 0;
  MlpBlock point;
  MlpBlock feedback;
  MlpBlock engagement;

  static EncoderParams zeros(std::size_t m, std::size_t d, std::size_t hidden = 64);
  static EncoderParams init(std::size_t m, std::size_t d, std::uint64_t seed,
                            std::size_t hidden = 64);

  std::size_t num_params() const;
  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

struct EncoderGradients {
  std::vector<double> point;
  std::vector<double> feedback;
  std::vector<double> engagement;

  explicit EncoderGradients(const EncoderParams& p);
  EncoderGradients() = default;
};

LatentVec encode_point(std::string_view text, const EncoderParams& params,
                       const Featurizer& featurizer);
LatentVec encode_point(std::string_view text, const EncoderParams& params);

struct Feedback {
  LatentVec zu;
  double delta_u = 0.5;
};

Feedback encode_feedback(std::string_view u_text, const EncoderParams& params,
                         const Featurizer& featurizer);
Feedback encode_feedback(std::string_view u_text, const EncoderParams& params);

double logistic(double x);

// The perturbed bridge a tuple's start, target and user feedback define at
// the tuple's (t, T).
GaussParams tuple_bridge(const TupleSample& tuple, const EncoderParams& params,
                         const BridgeConfig& cfg, const Featurizer& featurizer);

// -log(exp(positive) / (exp(positive) + sum exp(negatives))), max-shifted.
double info_nce(double positive, std::span<const double> negatives);

// Mean InfoNCE over the batch; every item is scored against its own bridge,
// negatives included. Throws std::invalid_argument if an item has no
// negatives or its variance is not positive.
double contrastive_loss(const Batch& batch, const EncoderParams& params,
                        const BridgeConfig& cfg, const Featurizer& featurizer);

struct LossAndGradients {
  double loss = 0.0;
  EncoderGradients grads;
};

// Same loss as contrastive_loss plus its exact gradient with respect to
// every weight.
LossAndGradients loss_gradients(const Batch& batch, const EncoderParams& params,
                                const BridgeConfig& cfg,
                                const Featurizer& featurizer);

struct EncoderTrainConfig {
  int epochs = 10;
  std::size_t batch_size = 64;
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
};

struct EncoderTrainResult {
  EncoderParams params;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::size_t num_tuples = 0;
};

// Adam over per-epoch shuffled batches of build_all_tuples(corpus). Items
// whose batch holds no other dialogue are skipped. Throws
// std::runtime_error naming the epoch and batch on a non-finite loss.
EncoderTrainResult train_encoder(const Corpus& corpus,
                                 const EncoderTrainConfig& train_cfg,
                                 const BridgeConfig& bridge_cfg,
                                 const Featurizer& featurizer);

// Same, starting from the given parameters.
EncoderTrainResult train_encoder(const std::vector<TupleSample>& tuples,
                                 EncoderParams init,
                                 const EncoderTrainConfig& train_cfg,
                                 const BridgeConfig& bridge_cfg,
                                 const Featurizer& featurizer);

}  // namespace bridgeplan
