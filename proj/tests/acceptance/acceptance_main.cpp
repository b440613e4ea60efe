// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bridgeplan/bridge.hpp"
#include "bridgeplan/corpus.hpp"
#include "bridgeplan/embedder.hpp"
#include "bridgeplan/encoder.hpp"
#include "bridgeplan/eval.hpp"
#include "bridgeplan/planner.hpp"
#include "cli/commands.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/synthetic.hpp"

namespace bridgeplan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Model sizes used wherever a criterion trains: the defaults of the run
// config. Planner training uses a larger step size than the config default
// (2e-5), which is tuned for fine-tuning a pretrained network rather than
// a small predictor trained from scratch.
constexpr std::size_t kM = 1024;
constexpr double kPlannerLr = 1e-3;

BridgeConfig default_bridge() { return BridgeConfig{}; }

EncoderTrainConfig default_encoder_train() { return EncoderTrainConfig{}; }

PlannerTrainConfig acceptance_planner_train() {
  PlannerTrainConfig cfg;
  cfg.lr = kPlannerLr;
  return cfg;
}

Corpus subset(const Corpus& c, std::size_t begin, std::size_t end) {
  return make_corpus({c.dialogues.begin() + static_cast<std::ptrdiff_t>(begin),
                      c.dialogues.begin() + static_cast<std::ptrdiff_t>(end)});
}

// 1. Monte-Carlo moments of sample_point against perturbed_bridge.
Verdict bridge_moments() {
  constexpr int kConfigs = 20;
  constexpr int kN = 100000;
  constexpr std::size_t kD = 3;
  Rng gen(101);
  double worst_mean_z = 0.0, worst_var = 0.0;
  for (int c = 0; c < kConfigs; ++c) {
    BridgeConfig cfg;
    cfg.d = kD;
    cfg.decay = c % 2 ? DecayKind::kExponential : DecayKind::kLinear;
    LatentVec z0(kD), zT(kD), zu(kD);
    for (std::size_t k = 0; k < kD; ++k) {
      z0[k] = 2.0 * gen.normal();
      zT[k] = 2.0 * gen.normal();
      zu[k] = 0.5 * gen.normal();
    }
    const double du = gen.uniform();
    const int T = 2 + static_cast<int>(gen.uniform_index(9));
    const int t = 1 + static_cast<int>(gen.uniform_index(static_cast<std::size_t>(T - 1)));
    const GaussParams p = perturbed_bridge(z0, zT, zu, du, t, T, cfg);

    Rng rng(1000 + static_cast<std::uint64_t>(c));
    std::vector<double> sum(kD, 0.0), sq(kD, 0.0);
    for (int n = 0; n < kN; ++n) {
      const LatentVec z = sample_point(p, rng);
      for (std::size_t k = 0; k < kD; ++k) {
        sum[k] += z[k];
        sq[k] += z[k] * z[k];
      }
    }
    for (std::size_t k = 0; k < kD; ++k) {
      const double mean = sum[k] / kN;
      const double var = sq[k] / kN - mean * mean;
      worst_mean_z = std::max(worst_mean_z, std::abs(mean - p.mu[k]) / std::sqrt(p.var / kN));
      worst_var = std::max(worst_var, std::abs(var / p.var - 1.0));
    }
  }
  return {worst_mean_z <= 3.0 && worst_var <= 0.03,
          "20 configs x 3 dims, worst mean deviation " + fmt("%.2f", worst_mean_z) +
              " sd (<= 3), worst variance error " + fmt("%.4f", worst_var) + " (<= 0.03)"};
}

// 2. perturbed_bridge with zu = 0, delta_u = 0 equals standard_bridge bitwise.
Verdict reduction_identity() {
  Rng rng(202);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    BridgeConfig cfg;
    cfg.decay = i % 2 ? DecayKind::kExponential : DecayKind::kLinear;
    cfg.lambda = 0.05 + 0.9 * rng.uniform();
    const std::size_t d = 1 + rng.uniform_index(8);
    const int T = 1 + static_cast<int>(rng.uniform_index(20));
    const int t = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(T) + 1));
    LatentVec z0(d), zT(d), zu(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      z0[k] = 10.0 * rng.normal();
      zT[k] = 10.0 * rng.normal();
    }
    const GaussParams a = perturbed_bridge(z0, zT, zu, 0.0, t, T, cfg);
    const GaussParams b = standard_bridge(z0, zT, t, T);
    const bool same = std::memcmp(a.mu.data(), b.mu.data(), d * sizeof(double)) == 0 &&
                      std::memcmp(&a.var, &b.var, sizeof(double)) == 0;
    mismatches += !same;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 10000 inputs differ"};
}

// 3. Analytic gradients against central differences.
Verdict gradient_exactness() {
  double worst_rel = 0.0, worst_abs = 0.0;
  std::size_t weights = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Batch batch = testing::random_gradcheck_batch(8, 300 + seed);
    const EncoderParams p = EncoderParams::init(16, 4, 310 + seed);
    BridgeConfig cfg;
    cfg.d = 4;
    cfg.decay = seed == 2 ? DecayKind::kExponential : DecayKind::kLinear;
    const auto r = testing::check_gradients(batch, p, cfg, Featurizer(16), 1e-5, 1e-6);
    worst_rel = std::max(worst_rel, r.max_rel_error);
    worst_abs = std::max(worst_abs, r.max_abs_error);
    weights = r.num_weights;
  }
  return {worst_rel <= 1e-4,
          "3 instances x " + std::to_string(weights) + " weights, max relative error " +
              fmt("%.2e", worst_rel) + " (<= 1e-4, denominator floor 1e-6), max absolute error " +
              fmt("%.2e", worst_abs)};
}

// 4. Hand-built fixtures with closed-form loss values.
Verdict closed_form_loss() {
  const EncoderParams p = testing::scalar_fixture_params();
  const Featurizer f = testing::scalar_fixture_featurizer();
  const std::vector<TupleSample> pair = {testing::fixture_tuple("a", "zero", "zero", 1, 2),
                                         testing::fixture_tuple("b", "one", "one", 1, 2)};
  const double l1 = contrastive_loss(make_batch(pair, {0, 1}), p, default_bridge(), f);
  std::vector<TupleSample> ties;
  for (const char* id : {"a", "b", "c", "d"}) ties.push_back(testing::fixture_tuple(id, "one", "zero", 1, 3));
  const double l2 = contrastive_loss(make_batch(ties, {0, 1, 2, 3}), p, default_bridge(), f);
  const double e1 = std::abs(l1 - 0.126928011042972);
  const double e2 = std::abs(l2 - 1.386294361119891);
  return {e1 <= 1e-9 && e2 <= 1e-9, "log(1+e^-2): " + fmt("%.12f", l1) + ", log 4: " + fmt("%.12f", l2)};
}

// Fraction of held-out tuples whose positive outscores a negative drawn from
// a dialogue of another cluster.
double ranking_accuracy(const std::vector<TupleSample>& tuples, const std::map<std::string, int>& cluster,
                        const EncoderParams& enc, const Featurizer& f, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t wins = 0;
  for (const TupleSample& s : tuples) {
    const TupleSample* neg = nullptr;
    while (neg == nullptr) {
      const TupleSample& cand = tuples[rng.uniform_index(tuples.size())];
      if (cluster.at(cand.dialogue_id) != cluster.at(s.dialogue_id)) neg = &cand;
    }
    const GaussParams g = tuple_bridge(s, enc, default_bridge(), f);
    const double pos = alignment_score(encode_point(s.st_text, enc, f), g);
    const double negs = alignment_score(encode_point(neg->st_text, enc, f), g);
    wins += pos > negs;
  }
  return static_cast<double>(wins) / static_cast<double>(tuples.size());
}

// 5. Trained encoder separates same-cluster from other-cluster points.
Verdict encoder_learnability() {
  const auto cc = testing::make_cluster_corpus({.num_dialogues = 500, .seed = 505});
  std::map<std::string, int> cluster;
  for (std::size_t i = 0; i < cc.corpus.dialogues.size(); ++i) cluster[cc.corpus.dialogues[i].id] = cc.cluster[i];
  const Corpus train = subset(cc.corpus, 0, 400);
  const auto held = build_all_tuples(subset(cc.corpus, 400, 500));
  const Featurizer f(kM);
  const EncoderTrainConfig tcfg = default_encoder_train();
  const auto r = train_encoder(train, tcfg, default_bridge(), f);
  const double before = ranking_accuracy(held, cluster, EncoderParams::init(kM, default_bridge().d, tcfg.seed), f, 55);
  const double after = ranking_accuracy(held, cluster, r.params, f, 55);
  return {after >= 0.90, std::to_string(held.size()) + " held-out tuples, d+ > d- for " +
                             fmt("%.1f%%", 100 * after) + " (>= 90%; untrained " + fmt("%.1f%%", 100 * before) +
                             "), loss " + fmt("%.3f", r.epoch_loss.front()) + " -> " +
                             fmt("%.3f", r.epoch_loss.back())};
}

// 6. Transition-count predictor on a marker-token corpus.
Verdict horizon_predictor() {
  const Corpus c = testing::make_marker_corpus({.num_dialogues = 2000, .seed = 606});
  const Featurizer f(kM);
  const auto r = train_planner(horizon_examples(subset(c, 0, 1600)), acceptance_planner_train(), f);
  const auto held = horizon_examples(subset(c, 1600, 2000));
  std::size_t hits = 0;
  for (const HorizonExample& ex : held) hits += argmax(r.params.horizon.forward(f(ex.text))) == ex.label;
  const double acc = static_cast<double>(hits) / static_cast<double>(held.size());
  return {acc >= 0.95, std::to_string(held.size()) + " held-out snapshots, accuracy " +
                           fmt("%.1f%%", 100 * acc) + " (>= 95%)"};
}

struct TrainedModels {
  EncoderParams encoder;
  PlannerParams planner;
};

TrainedModels train_models(const Corpus& train, const Featurizer& f) {
  TrainedModels m;
  m.encoder = train_encoder(train, default_encoder_train(), default_bridge(), f).params;
  m.planner = train_planner(train, m.encoder, acceptance_planner_train(), f).params;
  return m;
}

// 7. Planned paths hit the target window far more often than random paths.
Verdict planning_end_to_end() {
  const auto cc = testing::make_cluster_corpus({.num_dialogues = 500, .seed = 707});
  const Featurizer f(kM);
  const TrainedModels m = train_models(subset(cc.corpus, 0, 350), f);
  std::vector<PlanningSnapshot> instances;
  for (const PlanningSnapshot& s : build_all_snapshots(subset(cc.corpus, 350, 500))) {
    if (s.true_T >= 1 && instances.size() < 200) instances.push_back(s);
  }
  if (instances.size() < 200) return {false, "only " + std::to_string(instances.size()) + " test instances"};

  std::vector<GoalEpisode> planned, random;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const PlanningSnapshot& s = instances[i];
    const PlanInput in = plan_input_from(s, cc.corpus.vocab);
    GoalEpisode ep;
    ep.target_topic = s.target.topic;
    ep.target_turn = s.true_T - 1;
    GoalEpisode base = ep;

    Rng rng(7000 + i);
    for (const PathPoint& p : plan(in, m.encoder, m.planner, default_bridge(), f, rng)) {
      ep.topics_by_turn.push_back(p.topic);
    }
    Rng brng(7000 + i);
    const std::size_t len = 1 + brng.uniform_index(static_cast<std::size_t>(m.planner.t_max));
    for (std::size_t k = 0; k < len; ++k) {
      base.topics_by_turn.push_back(in.candidates[brng.uniform_index(in.candidates.size())].topic);
    }
    planned.push_back(std::move(ep));
    random.push_back(std::move(base));
  }
  const double gs = goal_success(planned);
  const double gb = goal_success(random);
  const bool pass = gb > 0.0 ? gs >= 2.0 * gb : gs > 0.0;
  return {pass, "200 instances, goal success " + fmt("%.3f", gs) + " vs random " + fmt("%.3f", gb) +
                    " (ratio " + (gb > 0.0 ? fmt("%.2f", gs / gb) : std::string("inf")) + ", >= 2)"};
}

// 8. Self-play: the oracle agrees with reachability; the trained planner
// beats a random walk.
Verdict self_play_sanity() {
  Rng graphs(808);
  int agree = 0, reachable = 0;
  for (int g = 0; g < 50; ++g) {
    const int n = 10 + static_cast<int>(graphs.uniform_index(21));
    const double p = 0.04 + 0.12 * graphs.uniform();
    const TopicGraph graph = testing::make_random_graph(n, p, graphs);
    const auto dist = testing::bfs_distance(graph, graph.start, graph.target);
    const bool expect = dist.has_value() && *dist <= 8;
    reachable += expect;
    Rng rng(8000 + static_cast<std::uint64_t>(g));
    agree += self_play(shortest_path_policy(), graph, 1.0, 8, rng).success == expect;
  }

  const Featurizer f(kM);
  const TrainedModels m = train_models(testing::make_grid_corpus({.seed = 818}), f);
  const SystemPolicy planner = planner_policy(m.encoder, m.planner, default_bridge(), f);
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"g0_0", "g4_4"}, {"g0_0", "g2_2"}, {"g1_0", "g3_4"}, {"g4_0", "g0_3"}, {"g2_2", "g0_4"}};
  bool beats = true;
  std::string rates;
  for (double follow : {0.5, 1.0}) {
    double sp = 0.0, sr = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const TopicGraph g = testing::make_grid_graph(5, 5, pairs[k].first, pairs[k].second);
      const std::uint64_t seed = 80000 + 1000 * k;
      sp += run_self_play(planner, g, follow, 8, 100, seed).success_rate / pairs.size();
      sr += run_self_play(random_walk_policy(), g, follow, 8, 100, seed).success_rate / pairs.size();
    }
    beats = beats && sp > sr;
    if (!rates.empty()) rates += ";";
    rates += " follow " + fmt("%.1f", follow) + ": planner " + fmt("%.3f", sp) + " vs random " + fmt("%.3f", sr);
  }
  return {agree == 50 && beats, "oracle agrees with reachability on " + std::to_string(agree) + "/50 graphs (" +
                                    std::to_string(reachable) + " within 8 hops); 500 episodes each," + rates};
}

// 9. Metric fixtures and the bigram >= micro property.
Verdict metric_fixtures() {
  auto pt = [](std::string t) { return PathPoint{std::nullopt, std::move(t)}; };
  const std::vector<TurnPrediction> micro = {{pt("a"), pt("a"), {pt("a")}},
                                             {pt("b"), pt("b"), {pt("b")}},
                                             {pt("b"), pt("c"), {pt("c")}}};
  const std::vector<TurnPrediction> bigram = {{pt("a"), pt("a"), {pt("a")}},
                                              {pt("b"), pt("a"), {pt("a"), pt("b")}},
                                              {pt("c"), pt("b"), {pt("b"), pt("c")}}};
  const double m = micro_f1(micro, Field::kTopic);
  const double b = bigram_f1(bigram, Field::kTopic);
  Rng rng(909);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    DialoguePath gold;
    const std::size_t len = 1 + rng.uniform_index(10);
    for (std::size_t i = 0; i < len; ++i) gold.push_back(pt(std::string(1, static_cast<char>('a' + rng.uniform_index(6)))));
    std::vector<TurnPrediction> preds;
    for (std::size_t k = 0; k < len; ++k) {
      preds.push_back({pt(std::string(1, static_cast<char>('a' + rng.uniform_index(6)))), gold[k],
                       gold_window(gold, k, rng.uniform_index(3))});
    }
    violations += bigram_f1(preds, Field::kTopic) < micro_f1(preds, Field::kTopic);
  }
  const bool pass = std::abs(m - 2.0 / 3.0) < 1e-15 && b == 1.0 && violations == 0;
  return {pass, "micro_f1 " + fmt("%.6f", m) + ", bigram_f1 " + fmt("%.6f", b) + ", " +
                    std::to_string(violations) + " property violations in 1000 sets"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Everything a command leaves behind: its stdout, stderr, exit code and
// every file under the output directory.
std::string snapshot(const std::vector<std::string>& args, const fs::path& out_dir) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  std::string all = std::to_string(code) + "\n" + out.str() + "\n" + err.str();
  if (fs::exists(out_dir)) {
    std::set<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(out_dir)) {
      if (e.is_regular_file()) files.insert(e.path());
    }
    for (const fs::path& p : files) all += "\n" + p.string() + "\n" + slurp(p);
  }
  return all;
}

// 10. Every CLI command reruns byte-identically.
Verdict cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "bridgeplan_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream corpus(dir / "corpus.jsonl");
    write_corpus(corpus, testing::make_cluster_corpus({.num_dialogues = 200, .num_clusters = 8, .seed = 1010}).corpus);
    std::ofstream(dir / "config.json") << json{{"seed", 3},
                                               {"corpus", "corpus.jsonl"},
                                               {"test_fraction", 0.2},
                                               {"epochs", 3},
                                               {"planner_epochs", 3},
                                               {"lr_planner", kPlannerLr},
                                               {"num_samples", 3},
                                               {"episodes", 50},
                                               {"follow_prob", 0.5},
                                               {"jobs", 2}}
                                              .dump(1);
    std::ofstream(dir / "instance.json")
        << R"({"context": "hello hop4", "knowledge": [["c1t0", "leads_to", "c1t3"]], "target": {"action": "recommend", "topic": "c1t3"}, "user": "hello hop4"})";
    const auto g = testing::make_grid_graph(4, 4, "g0_0", "g3_3");
    json edges = json::array();
    for (const auto& [a, adj] : g.adjacency) {
      for (const auto& b : adj) {
        if (a < b) edges.push_back({a, b});
      }
    }
    std::ofstream(dir / "graph.json") << json{{"nodes", g.nodes}, {"edges", edges}, {"start", g.start}, {"target", g.target}}.dump();
  }
  const std::string cfg = (dir / "config.json").string();
  const std::vector<std::vector<std::string>> commands = {
      {"train-encoder", "--config", cfg},
      {"train-planner", "--config", cfg},
      {"plan", "--config", cfg, "--instance", (dir / "instance.json").string()},
      {"evaluate", "--config", cfg},
      {"simulate", "--config", cfg, "--graph", (dir / "graph.json").string()},
  };
  std::string failed;
  for (const auto& args : commands) {
    const std::string first = snapshot(args, dir / "out");
    const std::string second = snapshot(args, dir / "out");
    if (first != second || first.rfind("0\n", 0) != 0) failed += " " + args[0];
  }
  fs::remove_all(dir);
  return {failed.empty(), failed.empty() ? "5 commands rerun byte-identically (stdout and artifacts)"
                                         : "differs or fails:" + failed};
}

}  // namespace
}  // namespace bridgeplan

int main() {
  using namespace bridgeplan;
  struct Criterion {
    std::string name;
    std::function<Verdict()> run;
    double time_limit;  // seconds; 0 = none
  };
  const std::vector<Criterion> criteria = {
      {"bridge moments", bridge_moments, 10},
      {"reduction identity", reduction_identity, 0},
      {"gradient exactness", gradient_exactness, 30},
      {"closed-form loss", closed_form_loss, 0},
      {"encoder learnability", encoder_learnability, 300},
      {"horizon predictor", horizon_predictor, 120},
      {"planning end-to-end", planning_end_to_end, 0},
      {"self-play sanity", self_play_sanity, 0},
      {"metric fixtures", metric_fixtures, 0},
      {"cli determinism", cli_determinism, 0},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].time_limit > 0 && secs > criteria[i].time_limit) {
      v.pass = false;
      v.detail += "; exceeded the " + fmt("%.0f", criteria[i].time_limit) + " s budget";
    }
    std::printf("%s %2zu %-22s %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
