#include "bridgeplan/eval.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace bridgeplan {
namespace {

bool field_equal(const PathPoint& a, const PathPoint& b, Field field) {
  if (field == Field::kTopic) return a.topic == b.topic;
  return a.action.value_or("") == b.action.value_or("");
}

void require_nonempty(std::span<const TurnPrediction> preds) {
  if (preds.empty()) throw std::invalid_argument("no predictions to score");
}

}  // namespace

double micro_f1(std::span<const TurnPrediction> preds, Field field) {
  require_nonempty(preds);
  std::size_t hits = 0;
  for (const TurnPrediction& p : preds) hits += field_equal(p.predicted, p.gold, field);
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double bigram_f1(std::span<const TurnPrediction> preds, Field field) {
  require_nonempty(preds);
  std::size_t hits = 0;
  for (const TurnPrediction& p : preds) {
    bool hit = field_equal(p.predicted, p.gold, field);
    for (const PathPoint& g : p.gold_window) hit = hit || field_equal(p.predicted, g, field);
    hits += hit;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<PathPoint> gold_window(const DialoguePath& gold_path, std::size_t k,
                                   std::size_t radius) {
  if (k >= gold_path.size()) throw std::out_of_range("gold window centre outside path");
  const std::size_t lo = k >= radius ? k - radius : 0;
  const std::size_t hi = std::min(gold_path.size() - 1, k + radius);
  return {gold_path.begin() + static_cast<std::ptrdiff_t>(lo),
          gold_path.begin() + static_cast<std::ptrdiff_t>(hi) + 1};
}

double goal_success(std::span<const GoalEpisode> episodes, int radius) {
  if (episodes.empty()) throw std::invalid_argument("no episodes to score");
  if (radius < 0) throw std::invalid_argument("window radius must be >= 0");
  std::size_t hits = 0;
  for (const GoalEpisode& ep : episodes) {
    if (ep.target_turn < 0) throw std::invalid_argument("target turn must be >= 0");
    const int n = static_cast<int>(ep.topics_by_turn.size());
    const int lo = std::max(0, ep.target_turn - radius);
    const int hi = std::min(n - 1, ep.target_turn + radius);
    bool hit = false;
    for (int t = lo; t <= hi && !hit; ++t) {
      hit = ep.topics_by_turn[static_cast<std::size_t>(t)] == ep.target_topic;
    }
    hits += hit;
  }
  return static_cast<double>(hits) / static_cast<double>(episodes.size());
}

TopicGraph TopicGraph::build(std::vector<std::string> nodes,
                             const std::vector<std::pair<std::string, std::string>>& edges,
                             std::string start, std::string target) {
  TopicGraph g;
  std::set<std::string> unique(nodes.begin(), nodes.end());
  g.nodes.assign(unique.begin(), unique.end());
  for (const std::string& n : g.nodes) g.adjacency[n];
  for (const auto& [a, b] : edges) {
    if (!unique.count(a) || !unique.count(b)) {
      throw std::invalid_argument("edge (" + a + ", " + b + ") references an unknown node");
    }
    if (a == b) continue;
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& [_, adj] : g.adjacency) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  if (!unique.count(start)) throw std::invalid_argument("start '" + start + "' is not a graph node");
  if (!unique.count(target)) throw std::invalid_argument("target '" + target + "' is not a graph node");
  g.start = std::move(start);
  g.target = std::move(target);
  return g;
}

TopicGraph TopicGraph::parse(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph edges must be [str, str]");
    edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  return build(j.at("nodes").get<std::vector<std::string>>(), edges,
               j.at("start").get<std::string>(), j.at("target").get<std::string>());
}

TopicGraph TopicGraph::load(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw std::runtime_error("cannot open graph file '" + file_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::vector<std::string>& TopicGraph::neighbors(const std::string& topic) const {
  static const std::vector<std::string> kNone;
  auto it = adjacency.find(topic);
  return it == adjacency.end() ? kNone : it->second;
}

bool TopicGraph::adjacent(const std::string& a, const std::string& b) const {
  const auto& adj = neighbors(a);
  return std::binary_search(adj.begin(), adj.end(), b);
}

bool TopicGraph::contains(const std::string& topic) const {
  return adjacency.count(topic) > 0;
}

std::string system_utterance(const std::string& topic) {
  return "let me tell you about " + topic;
}
std::string follow_utterance(const std::string& topic) {
  return "sure , tell me more about " + topic;
}
std::string deviate_utterance(const std::string& topic) {
  return "let's talk about " + topic;
}

SelfPlayResult self_play(const SystemPolicy& policy, const TopicGraph& graph,
                         double follow_prob, int max_turns, Rng& rng) {
  if (!(follow_prob >= 0.0 && follow_prob <= 1.0)) {
    throw std::invalid_argument("follow_prob must lie in [0, 1]");
  }
  if (!graph.contains(graph.start)) {
    throw std::invalid_argument("start '" + graph.start + "' is not in the graph");
  }
  SelfPlayState state;
  state.graph = &graph;
  state.current_topic = graph.start;
  if (state.current_topic == graph.target) return {true, 0};
  // The user opens the conversation on the start topic.
  state.last_user_utterance = deviate_utterance(graph.start);
  state.history.push_back(state.last_user_utterance);

  for (int turn = 1; turn <= max_turns; ++turn) {
    state.turn = turn;
    const DialoguePath path = policy(state, rng);
    if (!path.empty() && graph.adjacent(state.current_topic, path.front().topic)) {
      state.current_topic = path.front().topic;
    }
    state.history.push_back(system_utterance(state.current_topic));
    if (state.current_topic == graph.target) return {true, turn};

    const bool follows = rng.bernoulli(follow_prob);
    const auto& adj = graph.neighbors(state.current_topic);
    if (follows || adj.empty()) {
      state.last_user_utterance = follow_utterance(state.current_topic);
    } else {
      state.current_topic = adj[rng.uniform_index(adj.size())];
      state.last_user_utterance = deviate_utterance(state.current_topic);
    }
    state.history.push_back(state.last_user_utterance);
    if (state.current_topic == graph.target) return {true, turn};
  }
  return {false, max_turns};
}

SystemPolicy shortest_path_policy() {
  return [](const SelfPlayState& s, Rng&) -> DialoguePath {
    const TopicGraph& g = *s.graph;
    std::map<std::string, std::string> parent;
    std::deque<std::string> queue{s.current_topic};
    parent[s.current_topic] = s.current_topic;
    while (!queue.empty() && !parent.count(g.target)) {
      std::string node = queue.front();
      queue.pop_front();
      for (const std::string& next : g.neighbors(node)) {
        if (parent.emplace(next, node).second) queue.push_back(next);
      }
    }
    if (!parent.count(g.target)) return {PathPoint{std::nullopt, s.current_topic}};
    DialoguePath path;
    for (std::string node = g.target; node != s.current_topic; node = parent[node]) {
      path.push_back({std::nullopt, node});
    }
    std::reverse(path.begin(), path.end());
    if (path.empty()) path.push_back({std::nullopt, g.target});
    return path;
  };
}

SystemPolicy random_walk_policy() {
  return [](const SelfPlayState& s, Rng& rng) -> DialoguePath {
    const auto& adj = s.graph->neighbors(s.current_topic);
    if (adj.empty()) return {PathPoint{std::nullopt, s.current_topic}};
    return {PathPoint{std::nullopt, adj[rng.uniform_index(adj.size())]}};
  };
}

PlanInput self_play_input(const SelfPlayState& s) {
  const TopicGraph& g = *s.graph;
  PlanInput in;
  std::vector<std::string> entities{s.current_topic};
  for (const std::string& n : g.neighbors(s.current_topic)) {
    if (!in.knowledge_text.empty()) in.knowledge_text += ' ';
    in.knowledge_text += s.current_topic + " related_to " + n;
    entities.push_back(n);
  }
  for (const std::string& u : s.history) {
    if (!in.context_text.empty()) in.context_text += ' ';
    in.context_text += u;
  }
  in.target = {std::nullopt, g.target};
  in.user_text = s.last_user_utterance;
  std::vector<PathPoint> vocab;
  for (const std::string& n : g.neighbors(s.current_topic)) vocab.push_back({std::nullopt, n});
  in.candidates = candidates_for(vocab, entities, in.target);
  return in;
}

SystemPolicy planner_policy(const EncoderParams& encoder, const PlannerParams& planner,
                            const BridgeConfig& cfg, const Featurizer& featurizer,
                            PlanOptions options) {
  return [encoder, planner, cfg, featurizer, options](const SelfPlayState& s,
                                                      Rng& rng) -> DialoguePath {
    return plan(self_play_input(s), encoder, planner, cfg, featurizer, rng, options);
  };
}

SelfPlaySummary run_self_play(const SystemPolicy& policy, const TopicGraph& graph,
                              double follow_prob, int max_turns, int episodes,
                              std::uint64_t seed, int jobs) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  jobs = std::clamp(jobs, 1, episodes);
  std::vector<SelfPlayResult> results(static_cast<std::size_t>(episodes));
  auto worker = [&](int w) {
    for (int i = w; i < episodes; i += jobs) {
      Rng rng(seed + static_cast<std::uint64_t>(i));
      results[static_cast<std::size_t>(i)] = self_play(policy, graph, follow_prob, max_turns, rng);
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  SelfPlaySummary summary;
  summary.episodes = episodes;
  int wins = 0;
  long turns = 0;
  for (const SelfPlayResult& r : results) {
    wins += r.success;
    turns += r.turns_used;
  }
  summary.success_rate = static_cast<double>(wins) / episodes;
  summary.mean_turns = static_cast<double>(turns) / episodes;
  return summary;
}

PlanningReport evaluate_planning(const Corpus& test, const std::vector<PathPoint>& vocab,
                                 const PathPlanner& planner,
                                 const PlanningEvalOptions& options) {
  std::vector<TurnPrediction> preds;
  std::vector<GoalEpisode> episodes;
  bool any_action = false;
  std::uint64_t index = 0;
  for (const Dialogue& d : test.dialogues) {
    for (const PlanningSnapshot& snap : build_snapshots(d)) {
      if (snap.true_T < 1) continue;
      const PlanInput input = plan_input_from(snap, vocab);
      Rng rng(options.seed + index++);
      const DialoguePath path = planner(input, rng);
      if (path.empty()) throw std::runtime_error("planner returned an empty path");

      TurnPrediction tp;
      tp.predicted = path.front();
      tp.gold = snap.remaining.front();
      tp.gold_window = gold_window(d.path, snap.system_index, options.window_radius);
      any_action = any_action || (tp.gold.action && !tp.gold.action->empty());
      preds.push_back(std::move(tp));

      GoalEpisode ep;
      for (const PathPoint& p : path) ep.topics_by_turn.push_back(p.topic);
      ep.target_topic = snap.target.topic;
      ep.target_turn = snap.true_T - 1;
      episodes.push_back(std::move(ep));
    }
  }
  PlanningReport report;
  report.n = preds.size();
  if (preds.empty()) return report;
  report.f1_topic = micro_f1(preds, Field::kTopic);
  report.bi_f1_topic = bigram_f1(preds, Field::kTopic);
  if (any_action) {
    report.f1_action = micro_f1(preds, Field::kAction);
    report.bi_f1_action = bigram_f1(preds, Field::kAction);
  }
  report.goal_success = goal_success(episodes, options.goal_radius);
  return report;
}

}  // namespace bridgeplan
