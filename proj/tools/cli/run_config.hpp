#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "bridgeplan/bridge.hpp"
#include "bridgeplan/encoder.hpp"
#include "bridgeplan/planner.hpp"

namespace bridgeplan::cli {

// Effective settings of one run: config file values with flag overrides.
// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t d = 16;
  std::size_t m = 1024;
  std::size_t hidden = 64;
  std::string decay = "linear";
  double lambda = 0.5;
  bool pin_final = true;
  int t_max = 8;

  std::size_t batch_size = 64;
  double lr_encoder = 2e-4;
  int epochs = 10;
  std::size_t planner_batch_size = 16;
  double lr_planner = 2e-5;
  int planner_epochs = 10;
  double warmup_fraction = 0.1;

  std::string corpus;
  double test_fraction = 0.0;  // 0 keeps the whole corpus for training
  std::string test_corpus_id;
  std::string test_corpus_ood;
  std::string out_dir = "out";
  std::string encoder_checkpoint;  // default <out_dir>/encoder.json
  std::string planner_checkpoint;  // default <out_dir>/planner.json
  std::string embeddings;

  std::string style = "action_topic";
  int num_samples = 1;
  int window_radius = 1;
  int goal_radius = 2;

  std::string policy = "planner";  // planner | oracle | random
  int episodes = 100;
  double follow_prob = 1.0;
  int max_turns = 8;
  int jobs = 1;

  std::filesystem::path base_dir;

  // Throws std::invalid_argument on unknown keys or invalid values.
  static RunConfig from_json(const nlohmann::json& j, std::filesystem::path base_dir);
  static RunConfig load(const std::string& file_path);
  nlohmann::json to_json() const;
  void validate() const;

  std::string resolve(const std::string& path) const;
  std::string encoder_path() const;
  std::string planner_path() const;

  BridgeConfig bridge() const;
  EncoderTrainConfig encoder_train() const;
  PlannerTrainConfig planner_train() const;
};

}  // namespace bridgeplan::cli
