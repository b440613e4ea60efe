#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bridgeplan/bridge.hpp"
#include "bridgeplan/corpus.hpp"
#include "bridgeplan/embedder.hpp"
#include "bridgeplan/encoder.hpp"
#include "bridgeplan/mlp.hpp"

namespace bridgeplan {

// Transition-count predictor: base features of the planner input ->
// logits over T in {0, ..., t_max}.
struct PlannerParams {
  std::size_t m = 1024;
  std::size_t hidden = 64;
  int t_max = 8;
  std::uint64_t seed = 0;
  MlpBlock horizon;

  static PlannerParams init(std::size_t m, int t_max, std::uint64_t seed,
                            std::size_t hidden = 64);
  friend bool operator==(const PlannerParams&, const PlannerParams&) = default;
};

struct PlanInput {
  std::string context_text;
  std::string knowledge_text;
  PathPoint target;
  std::string user_text;
  std::vector<PathPoint> candidates;  // must contain target
};

enum class PathStyle { kActionTopic, kTopicOnly };

PathStyle parse_path_style(const std::string& name);
std::string to_string(PathStyle style);

// knowledge ++ context ++ target, the text the predictor featurizes.
std::string planner_input_text(const PlanInput& input);

// Candidate set for a snapshot: vocab points whose topic occurs in the
// knowledge triples, or the whole vocab when none do; the target is always
// included. Sorted by PathPoint ordering.
std::vector<PathPoint> candidates_for(const std::vector<PathPoint>& vocab,
                                      const std::vector<std::string>& knowledge_entities,
                                      const PathPoint& target);

PlanInput plan_input_from(const PlanningSnapshot& snapshot,
                          const std::vector<PathPoint>& vocab);

std::vector<double> predict_T_logits(const PlanInput& input,
                                     const PlannerParams& params,
                                     const Featurizer& featurizer);
std::vector<double> predict_T(const PlanInput& input, const PlannerParams& params,
                              const Featurizer& featurizer);

std::vector<double> softmax(std::span<const double> logits);
// First index of the maximum.
int argmax(std::span<const double> values);

struct PlannerTrainConfig {
  int epochs = 10;
  std::size_t batch_size = 16;
  double lr = 2e-5;
  double warmup_fraction = 0.1;  // linear warmup over this share of steps
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  int t_max = 8;
  std::size_t hidden = 64;
};

struct PlannerTrainResult {
  PlannerParams params;
  std::vector<double> epoch_loss;
  std::size_t num_examples = 0;
  std::size_t num_clamped = 0;  // labels above t_max, clamped to t_max
};

struct HorizonExample {
  std::string text;
  int label = 0;
};

std::vector<HorizonExample> horizon_examples(const Corpus& corpus);

// Cross-entropy training of the predictor with Adam. Throws
// std::invalid_argument when there are no examples.
PlannerTrainResult train_planner(const std::vector<HorizonExample>& examples,
                                 const PlannerTrainConfig& cfg,
                                 const Featurizer& featurizer);
PlannerTrainResult train_planner(const Corpus& corpus, const EncoderParams& encoder,
                                 const PlannerTrainConfig& cfg,
                                 const Featurizer& featurizer);

// Retrieval decoding. Position t < T takes the candidate nearest (Euclidean,
// in encoder latent space) to trajectory[t-1], ties broken by serialized
// form, skipping the previous point and, at T-1, the target. Position T is
// the target. A position with no admissible candidate is dropped.
DialoguePath decode_path(const std::vector<LatentVec>& trajectory,
                         const PlanInput& input, const EncoderParams& encoder,
                         const Featurizer& featurizer);

struct PlanOptions {
  // Trajectories drawn per plan; the most frequent decoded path wins, the
  // earliest drawn breaking ties.
  int num_samples = 1;
};

struct PlanResult {
  DialoguePath path;
  int horizon = 0;  // predicted T
};

PlanResult plan_detailed(const PlanInput& input, const EncoderParams& encoder,
                         const PlannerParams& planner, const BridgeConfig& cfg,
                         const Featurizer& featurizer, Rng& rng,
                         const PlanOptions& options = {});

DialoguePath plan(const PlanInput& input, const EncoderParams& encoder,
                  const PlannerParams& planner, const BridgeConfig& cfg,
                  const Featurizer& featurizer, Rng& rng,
                  const PlanOptions& options = {});

// "[A]a1[T]t1...[A]aT[T]tT" or "[T]t1...[T]tT". Throws
// std::invalid_argument for an action-topic path point without an action.
std::string serialize_path(const DialoguePath& path, PathStyle style);

// knowledge "\n" context "\n" serialized path.
std::string format_prompt(std::string_view knowledge_text,
                          std::string_view context_text,
                          const DialoguePath& path, PathStyle style);

}  // namespace bridgeplan
