#include "run_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace bridgeplan::cli {
namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    field = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, std::filesystem::path base_dir) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  RunConfig c;
  c.base_dir = std::move(base_dir);
  const std::set<std::string> known = {
      "seed", "d", "m", "hidden", "decay", "lambda", "pin_final", "t_max",
      "batch_size", "lr_encoder", "epochs", "planner_batch_size", "lr_planner",
      "planner_epochs", "warmup_fraction", "corpus", "test_fraction",
      "test_corpus_id", "test_corpus_ood", "out_dir", "encoder_checkpoint",
      "planner_checkpoint", "embeddings", "style", "num_samples", "window_radius",
      "goal_radius", "policy", "episodes", "follow_prob", "max_turns", "jobs"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config field '" + key + "'");
  }
  read(j, "seed", c.seed);
  read(j, "d", c.d);
  read(j, "m", c.m);
  read(j, "hidden", c.hidden);
  read(j, "decay", c.decay);
  read(j, "lambda", c.lambda);
  read(j, "pin_final", c.pin_final);
  read(j, "t_max", c.t_max);
  read(j, "batch_size", c.batch_size);
  read(j, "lr_encoder", c.lr_encoder);
  read(j, "epochs", c.epochs);
  read(j, "planner_batch_size", c.planner_batch_size);
  read(j, "lr_planner", c.lr_planner);
  read(j, "planner_epochs", c.planner_epochs);
  read(j, "warmup_fraction", c.warmup_fraction);
  read(j, "corpus", c.corpus);
  read(j, "test_fraction", c.test_fraction);
  read(j, "test_corpus_id", c.test_corpus_id);
  read(j, "test_corpus_ood", c.test_corpus_ood);
  read(j, "out_dir", c.out_dir);
  read(j, "encoder_checkpoint", c.encoder_checkpoint);
  read(j, "planner_checkpoint", c.planner_checkpoint);
  read(j, "embeddings", c.embeddings);
  read(j, "style", c.style);
  read(j, "num_samples", c.num_samples);
  read(j, "window_radius", c.window_radius);
  read(j, "goal_radius", c.goal_radius);
  read(j, "policy", c.policy);
  read(j, "episodes", c.episodes);
  read(j, "follow_prob", c.follow_prob);
  read(j, "max_turns", c.max_turns);
  read(j, "jobs", c.jobs);
  return c;
}

RunConfig RunConfig::load(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw std::runtime_error("cannot open config file '" + file_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(file_path + ": " + e.what());
  }
  return from_json(j, std::filesystem::path(file_path).parent_path());
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"seed", seed}, {"d", d}, {"m", m}, {"hidden", hidden}, {"decay", decay},
      {"lambda", lambda}, {"pin_final", pin_final}, {"t_max", t_max},
      {"batch_size", batch_size}, {"lr_encoder", lr_encoder}, {"epochs", epochs},
      {"planner_batch_size", planner_batch_size}, {"lr_planner", lr_planner},
      {"planner_epochs", planner_epochs}, {"warmup_fraction", warmup_fraction},
      {"corpus", corpus}, {"test_fraction", test_fraction},
      {"test_corpus_id", test_corpus_id}, {"test_corpus_ood", test_corpus_ood},
      {"out_dir", out_dir}, {"encoder_checkpoint", encoder_checkpoint},
      {"planner_checkpoint", planner_checkpoint}, {"embeddings", embeddings},
      {"style", style}, {"num_samples", num_samples},
      {"window_radius", window_radius}, {"goal_radius", goal_radius},
      {"policy", policy}, {"episodes", episodes}, {"follow_prob", follow_prob},
      {"max_turns", max_turns}, {"jobs", jobs}};
}

void RunConfig::validate() const {
  bridge().validate();
  parse_path_style(style);
  if (m < 1 || hidden < 1) throw std::invalid_argument("m and hidden must be positive");
  if (t_max < 1) throw std::invalid_argument("t_max must be positive");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  if (planner_batch_size < 1) throw std::invalid_argument("planner_batch_size must be positive");
  if (!(lr_encoder > 0.0) || !(lr_planner > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (epochs < 0 || planner_epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in [0, 1)");
  if (num_samples < 1) throw std::invalid_argument("num_samples must be positive");
  if (window_radius < 0 || goal_radius < 0) throw std::invalid_argument("window radii must be >= 0");
  if (policy != "planner" && policy != "oracle" && policy != "random") {
    throw std::invalid_argument("policy must be planner, oracle or random");
  }
  if (episodes < 1 || max_turns < 1 || jobs < 1) {
    throw std::invalid_argument("episodes, max_turns and jobs must be positive");
  }
  if (!(follow_prob >= 0.0 && follow_prob <= 1.0)) throw std::invalid_argument("follow_prob must lie in [0, 1]");
}

std::string RunConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (base_dir / p).string();
}

std::string RunConfig::encoder_path() const {
  if (!encoder_checkpoint.empty()) return resolve(encoder_checkpoint);
  return (std::filesystem::path(resolve(out_dir)) / "encoder.json").string();
}

std::string RunConfig::planner_path() const {
  if (!planner_checkpoint.empty()) return resolve(planner_checkpoint);
  return (std::filesystem::path(resolve(out_dir)) / "planner.json").string();
}

BridgeConfig RunConfig::bridge() const {
  BridgeConfig b;
  b.d = d;
  b.decay = parse_decay_kind(decay);
  b.lambda = lambda;
  b.pin_final = pin_final;
  return b;
}

EncoderTrainConfig RunConfig::encoder_train() const {
  EncoderTrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.lr = lr_encoder;
  t.seed = seed;
  t.hidden = hidden;
  return t;
}

PlannerTrainConfig RunConfig::planner_train() const {
  PlannerTrainConfig t;
  t.epochs = planner_epochs;
  t.batch_size = planner_batch_size;
  t.lr = lr_planner;
  t.warmup_fraction = warmup_fraction;
  t.seed = seed;
  t.t_max = t_max;
  t.hidden = hidden;
  return t;
}

}  // namespace bridgeplan::cli
