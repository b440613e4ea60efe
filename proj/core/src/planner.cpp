#include "bridgeplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace bridgeplan {
namespace {

void append_word(std::string& out, std::string_view piece) {
  if (piece.empty()) return;
  if (!out.empty()) out += ' ';
  out += piece;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

PlannerParams PlannerParams::init(std::size_t m, int t_max, std::uint64_t seed,
                                  std::size_t hidden) {
  if (t_max < 0) throw std::invalid_argument("t_max must be >= 0");
  PlannerParams p;
  p.m = m;
  p.hidden = hidden;
  p.t_max = t_max;
  p.seed = seed;
  p.horizon = MlpBlock(m, hidden, static_cast<std::size_t>(t_max) + 1);
  Rng rng(seed);
  p.horizon.init_glorot(rng);
  return p;
}

PathStyle parse_path_style(const std::string& name) {
  if (name == "action_topic") return PathStyle::kActionTopic;
  if (name == "topic_only") return PathStyle::kTopicOnly;
  throw std::invalid_argument("unknown path style '" + name + "'");
}

std::string to_string(PathStyle style) {
  return style == PathStyle::kActionTopic ? "action_topic" : "topic_only";
}

std::string planner_input_text(const PlanInput& input) {
  std::string out;
  append_word(out, input.knowledge_text);
  append_word(out, input.context_text);
  append_word(out, input.target.serialize());
  return out;
}

std::vector<PathPoint> candidates_for(const std::vector<PathPoint>& vocab,
                                      const std::vector<std::string>& knowledge_entities,
                                      const PathPoint& target) {
  const std::set<std::string> grounded(knowledge_entities.begin(), knowledge_entities.end());
  std::set<PathPoint> out;
  for (const PathPoint& p : vocab) {
    if (grounded.count(p.topic)) out.insert(p);
  }
  if (out.empty()) out.insert(vocab.begin(), vocab.end());
  out.insert(target);
  return {out.begin(), out.end()};
}

PlanInput plan_input_from(const PlanningSnapshot& snapshot,
                          const std::vector<PathPoint>& vocab) {
  PlanInput in;
  in.context_text = snapshot.context_text;
  in.knowledge_text = snapshot.knowledge_text;
  in.target = snapshot.target;
  in.user_text = snapshot.user_text;
  in.candidates = candidates_for(vocab, snapshot.knowledge_entities, snapshot.target);
  return in;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double hi = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<double> predict_T_logits(const PlanInput& input,
                                     const PlannerParams& params,
                                     const Featurizer& featurizer) {
  return params.horizon.forward(featurizer(planner_input_text(input)));
}

std::vector<double> predict_T(const PlanInput& input, const PlannerParams& params,
                              const Featurizer& featurizer) {
  return softmax(predict_T_logits(input, params, featurizer));
}

std::vector<HorizonExample> horizon_examples(const Corpus& corpus) {
  std::vector<HorizonExample> out;
  for (const PlanningSnapshot& s : build_all_snapshots(corpus)) {
    PlanInput in;
    in.context_text = s.context_text;
    in.knowledge_text = s.knowledge_text;
    in.target = s.target;
    out.push_back({planner_input_text(in), s.true_T});
  }
  return out;
}

PlannerTrainResult train_planner(const std::vector<HorizonExample>& examples,
                                 const PlannerTrainConfig& cfg,
                                 const Featurizer& featurizer) {
  if (examples.empty()) throw std::invalid_argument("no planner training examples");
  if (cfg.batch_size < 1) throw std::invalid_argument("planner batch_size must be >= 1");
  PlannerTrainResult result;
  result.params = PlannerParams::init(featurizer.dim(), cfg.t_max, cfg.seed, cfg.hidden);
  result.num_examples = examples.size();

  std::vector<FeatVec> features;
  std::vector<int> labels;
  features.reserve(examples.size());
  for (const HorizonExample& ex : examples) {
    features.push_back(featurizer(ex.text));
    int label = ex.label;
    if (label > cfg.t_max) {
      label = cfg.t_max;
      ++result.num_clamped;
    }
    if (label < 0) throw std::invalid_argument("negative transition count label");
    labels.push_back(label);
  }
  if (cfg.epochs <= 0) return result;

  MlpBlock& net = result.params.horizon;
  Adam opt(net.num_params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  const std::size_t per_epoch = (examples.size() + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = static_cast<long>(per_epoch) * cfg.epochs;
  const long warmup = static_cast<long>(std::floor(cfg.warmup_fraction * static_cast<double>(total_steps)));

  Rng rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(net.num_params());
  MlpBlock::Trace trace;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const std::vector<double> logits = net.forward(features[i], trace);
        std::vector<double> probs = softmax(logits);
        const auto y = static_cast<std::size_t>(labels[i]);
        epoch_total += -std::log(std::max(probs[y], 1e-300));
        probs[y] -= 1.0;
        for (double& g : probs) g *= inv;
        net.backward(trace, probs, grad);
      }
      ++step;
      const double scale = warmup > 0 ? std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup)) : 1.0;
      opt.step(net.params(), grad, scale);
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(examples.size()));
  }
  return result;
}

PlannerTrainResult train_planner(const Corpus& corpus, const EncoderParams& encoder,
                                 const PlannerTrainConfig& cfg,
                                 const Featurizer& featurizer) {
  if (encoder.m != featurizer.dim()) {
    throw std::invalid_argument("encoder feature dimension does not match featurizer");
  }
  return train_planner(horizon_examples(corpus), cfg, featurizer);
}

DialoguePath decode_path(const std::vector<LatentVec>& trajectory,
                         const PlanInput& input, const EncoderParams& encoder,
                         const Featurizer& featurizer) {
  if (trajectory.empty()) throw std::invalid_argument("empty latent trajectory");
  if (input.candidates.empty()) throw std::invalid_argument("empty candidate list");
  const std::size_t T = trajectory.size();

  struct Candidate {
    const PathPoint* point;
    std::string key;
    LatentVec z;
  };
  std::vector<Candidate> cands;
  if (T > 1) {
    cands.reserve(input.candidates.size());
    for (const PathPoint& p : input.candidates) {
      cands.push_back({&p, p.serialize(), encode_point(p.serialize(), encoder, featurizer)});
    }
  }

  DialoguePath path;
  std::vector<std::pair<double, std::size_t>> ranked(cands.size());
  for (std::size_t t = 1; t < T; ++t) {
    const LatentVec& z = trajectory[t - 1];
    for (std::size_t c = 0; c < cands.size(); ++c) ranked[c] = {squared_distance(z, cands[c].z), c};
    std::sort(ranked.begin(), ranked.end(), [&](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first < y.first;
      return cands[x.second].key < cands[y.second].key;
    });
    for (const auto& [dist, c] : ranked) {
      const PathPoint& p = *cands[c].point;
      if (!path.empty() && p == path.back()) continue;
      if (t + 1 == T && p == input.target) continue;
      path.push_back(p);
      break;
    }
  }
  if (path.empty() || !(path.back() == input.target)) path.push_back(input.target);
  return path;
}

PlanResult plan_detailed(const PlanInput& input, const EncoderParams& encoder,
                         const PlannerParams& planner, const BridgeConfig& cfg,
                         const Featurizer& featurizer, Rng& rng,
                         const PlanOptions& options) {
  if (options.num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  PlanResult result;
  result.horizon = argmax(predict_T_logits(input, planner, featurizer));
  if (result.horizon == 0) {
    result.path = {input.target};
    return result;
  }

  std::string start = input.knowledge_text;
  append_word(start, input.context_text);
  const LatentVec z0 = encode_point(start, encoder, featurizer);
  const LatentVec zT = encode_point(input.target.serialize(), encoder, featurizer);
  const Feedback fb = encode_feedback(input.user_text, encoder, featurizer);

  std::vector<DialoguePath> drawn;
  std::map<DialoguePath, int> votes;
  for (int s = 0; s < options.num_samples; ++s) {
    const auto traj = sample_trajectory(z0, zT, fb.zu, fb.delta_u, result.horizon, cfg, rng);
    drawn.push_back(decode_path(traj, input, encoder, featurizer));
    ++votes[drawn.back()];
  }
  const DialoguePath* best = &drawn.front();
  for (const DialoguePath& p : drawn) {
    if (votes[p] > votes[*best]) best = &p;
  }
  result.path = *best;
  return result;
}

DialoguePath plan(const PlanInput& input, const EncoderParams& encoder,
                  const PlannerParams& planner, const BridgeConfig& cfg,
                  const Featurizer& featurizer, Rng& rng,
                  const PlanOptions& options) {
  return plan_detailed(input, encoder, planner, cfg, featurizer, rng, options).path;
}

std::string serialize_path(const DialoguePath& path, PathStyle style) {
  std::string out;
  for (const PathPoint& p : path) {
    if (style == PathStyle::kActionTopic) {
      if (!p.action || p.action->empty()) {
        throw std::invalid_argument("path point '" + p.topic + "' has no action");
      }
      out += "[A]";
      out += *p.action;
    }
    out += "[T]";
    out += p.topic;
  }
  return out;
}

std::string format_prompt(std::string_view knowledge_text,
                          std::string_view context_text,
                          const DialoguePath& path, PathStyle style) {
  if (path.empty()) throw std::invalid_argument("cannot format an empty path");
  std::string out(knowledge_text);
  out += '\n';
  out += context_text;
  out += '\n';
  out += serialize_path(path, style);
  return out;
}

}  // namespace bridgeplan
