#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bridgeplan/corpus.hpp"
#include "bridgeplan/encoder.hpp"
#include "bridgeplan/planner.hpp"
#include "bridgeplan/rng.hpp"

namespace bridgeplan {

enum class Field { kAction, kTopic };

struct TurnPrediction {
  PathPoint predicted;
  PathPoint gold;
  std::vector<PathPoint> gold_window;  // contains gold
};

// Share of turns whose predicted field equals the gold field. With one
// prediction per gold label, micro precision and recall coincide, so this
// is also the micro F1. Throws std::invalid_argument on an empty list.
double micro_f1(std::span<const TurnPrediction> preds, Field field);

// Like micro_f1 but a prediction counts when it matches any gold_window entry.
double bigram_f1(std::span<const TurnPrediction> preds, Field field);

// Gold window for system turn k of a path: path[k - radius .. k + radius].
std::vector<PathPoint> gold_window(const DialoguePath& gold_path, std::size_t k,
                                   std::size_t radius = 1);

struct GoalEpisode {
  std::vector<std::string> topics_by_turn;  // planned or realized, index = turn
  std::string target_topic;
  int target_turn = 0;
};

// Fraction of episodes whose target topic appears at some turn within
// target_turn +- radius (clipped to the recorded turns).
double goal_success(std::span<const GoalEpisode> episodes, int radius = 2);

struct TopicGraph {
  std::vector<std::string> nodes;
  std::map<std::string, std::vector<std::string>> adjacency;  // sorted, unique
  std::string start;
  std::string target;

  // Throws std::invalid_argument for unknown endpoints or missing start/target.
  static TopicGraph build(std::vector<std::string> nodes,
                          const std::vector<std::pair<std::string, std::string>>& edges,
                          std::string start, std::string target);
  // {"nodes":[str], "edges":[[str,str]], "start":str, "target":str}
  static TopicGraph load(const std::string& file_path);
  static TopicGraph parse(const std::string& json_text);

  const std::vector<std::string>& neighbors(const std::string& topic) const;
  bool adjacent(const std::string& a, const std::string& b) const;
  bool contains(const std::string& topic) const;
};

struct SelfPlayState {
  const TopicGraph* graph = nullptr;
  std::string current_topic;
  std::string last_user_utterance;
  std::vector<std::string> history;  // utterances so far, oldest first
  int turn = 0;                      // 1-based system turn about to be taken
};

// System side of a self-play episode: returns the planned path from the
// current state; only its first point is acted upon.
using SystemPolicy = std::function<DialoguePath(const SelfPlayState&, Rng&)>;

struct SelfPlayResult {
  bool success = false;
  int turns_used = 0;
};

// Alternating simulation. Each system turn moves to the plan's first topic
// when that topic is adjacent to the current one; the simulated user then
// keeps the topic with probability follow_prob, otherwise jumps to a
// uniformly random neighbor. Succeeds as soon as the current topic equals
// the target, within max_turns system turns.
SelfPlayResult self_play(const SystemPolicy& policy, const TopicGraph& graph,
                         double follow_prob, int max_turns, Rng& rng);

// Templated utterances the simulator and the graph corpora share.
std::string system_utterance(const std::string& topic);
std::string follow_utterance(const std::string& topic);
std::string deviate_utterance(const std::string& topic);

// Moves along a shortest path (breadth-first search, neighbors in sorted
// order). Stays put when the target is unreachable.
SystemPolicy shortest_path_policy();
// Uniformly random neighbor each turn.
SystemPolicy random_walk_policy();

// Planner-backed policy. The knowledge text lists the current topic's edges
// as "<topic> related_to <neighbor>" triples, so the candidates are the
// neighbors plus the target.
SystemPolicy planner_policy(const EncoderParams& encoder, const PlannerParams& planner,
                            const BridgeConfig& cfg, const Featurizer& featurizer,
                            PlanOptions options = {});

// Builds the planner input the planner policy uses for a state.
PlanInput self_play_input(const SelfPlayState& state);

struct SelfPlaySummary {
  double success_rate = 0.0;
  double mean_turns = 0.0;
  int episodes = 0;
};

// Runs `episodes` games; game i uses Rng(seed + i), so results do not depend
// on how games are scheduled across `jobs` threads.
SelfPlaySummary run_self_play(const SystemPolicy& policy, const TopicGraph& graph,
                              double follow_prob, int max_turns, int episodes,
                              std::uint64_t seed, int jobs = 1);

// Maps a planning input to a path; used to evaluate trained planners and
// baselines through the same harness.
using PathPlanner = std::function<DialoguePath(const PlanInput&, Rng&)>;

struct PlanningReport {
  std::optional<double> f1_action;     // absent when no gold point has an action
  std::optional<double> bi_f1_action;
  double f1_topic = 0.0;
  double bi_f1_topic = 0.0;
  double goal_success = 0.0;
  std::size_t n = 0;
};

struct PlanningEvalOptions {
  std::uint64_t seed = 0;      // instance i plans with Rng(seed + i)
  std::size_t window_radius = 1;
  int goal_radius = 2;
};

// Plans from every system-turn snapshot of `test` that still has a remaining
// path. The first planned point is scored against the gold next point (and
// its window over the annotated path); the planned path is scored for goal
// success with the gold target turn at index true_T - 1. Returns n = 0 and
// zero metrics when there are no instances.
PlanningReport evaluate_planning(const Corpus& test, const std::vector<PathPoint>& vocab,
                                 const PathPlanner& planner,
                                 const PlanningEvalOptions& options = {});

}  // namespace bridgeplan
