#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bridgeplan/checkpoint.hpp"
#include "bridgeplan/corpus.hpp"
#include "bridgeplan/eval.hpp"
#include "bridgeplan/planner.hpp"
#include "run_config.hpp"

namespace bridgeplan::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Flag values that override config fields when given.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> embeddings;
  std::optional<std::string> out_dir;
  std::optional<int> num_samples;
};

RunConfig effective_config(const std::string& config_path, const Overrides& o) {
  RunConfig c = RunConfig::load(config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.embeddings) c.embeddings = *o.embeddings;
  if (o.out_dir) {
    // Flag paths are relative to the working directory, not the config.
    c.out_dir = fs::absolute(*o.out_dir).string();
  }
  if (o.num_samples) c.num_samples = *o.num_samples;
  c.validate();
  return c;
}

Featurizer make_featurizer(const RunConfig& c, std::size_t m) {
  Featurizer f(m);
  if (!c.embeddings.empty()) f.load_embeddings(c.resolve(c.embeddings));
  return f;
}

Corpus require_corpus(const RunConfig& c) {
  if (c.corpus.empty()) throw std::runtime_error("config has no corpus path");
  const std::string path = c.resolve(c.corpus);
  if (!fs::exists(path)) throw std::runtime_error("corpus file not found: " + path);
  return load_corpus(path);
}

// Training corpus plus whichever test splits the config defines.
struct Splits {
  Corpus train;
  std::optional<Corpus> test_id;
  std::optional<Corpus> test_ood;
};

Splits load_splits(const RunConfig& c) {
  Splits s;
  Corpus full = require_corpus(c);
  if (c.test_fraction > 0.0) {
    Rng rng(c.seed);
    CorpusSplit split = split_ood(full, c.test_fraction, rng);
    s.train = std::move(split.train);
    s.test_id = std::move(split.test_id);
    s.test_ood = std::move(split.test_ood);
  } else {
    s.train = std::move(full);
  }
  auto load_test = [&](const std::string& field) -> std::optional<Corpus> {
    if (field.empty()) return std::nullopt;
    const std::string path = c.resolve(field);
    if (!fs::exists(path)) throw std::runtime_error("test corpus not found: " + path);
    return load_corpus(path);
  };
  if (auto id = load_test(c.test_corpus_id)) s.test_id = std::move(id);
  if (auto ood = load_test(c.test_corpus_ood)) s.test_ood = std::move(ood);
  return s;
}

EncoderParams require_encoder(const RunConfig& c) {
  const std::string path = c.encoder_path();
  if (!fs::exists(path)) throw std::runtime_error("encoder checkpoint not found: " + path);
  return load_encoder(path);
}

PlannerParams require_planner(const RunConfig& c, const EncoderParams& enc) {
  const std::string path = c.planner_path();
  if (!fs::exists(path)) throw std::runtime_error("planner checkpoint not found: " + path);
  PlannerParams p = load_planner(path);
  if (p.m != enc.m) throw std::runtime_error("planner and encoder feature dimensions differ");
  return p;
}

fs::path ensure_out_dir(const RunConfig& c) {
  fs::path dir = c.resolve(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_train_encoder(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Splits splits = load_splits(c);
  const Featurizer feat = make_featurizer(c, c.m);
  const auto tuples = build_all_tuples(splits.train);
  EncoderTrainResult r = train_encoder(
      tuples, EncoderParams::init(c.m, c.d, c.seed, c.hidden), c.encoder_train(),
      c.bridge(), feat);

  const fs::path dir = ensure_out_dir(c);
  save_encoder(r.params, c.encoder_path());
  json log = {{"config", c.to_json()},
              {"epoch_loss", r.epoch_loss},
              {"num_tuples", r.num_tuples},
              {"num_dialogues", splits.train.dialogues.size()}};
  save_json(log, (dir / "encoder_log.json").string());
  out << json{{"encoder_checkpoint", c.encoder_path()},
              {"epoch_loss", r.epoch_loss},
              {"num_tuples", r.num_tuples}}
             .dump()
      << '\n';
  (void)err;
  return 0;
}

int cmd_train_planner(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Splits splits = load_splits(c);
  const EncoderParams enc = require_encoder(c);
  const Featurizer feat = make_featurizer(c, enc.m);
  PlannerTrainResult r = train_planner(splits.train, enc, c.planner_train(), feat);
  if (r.num_clamped > 0) {
    err << "warning: " << r.num_clamped << " transition-count labels exceed t_max="
        << c.t_max << " and were clamped\n";
  }
  const fs::path dir = ensure_out_dir(c);
  save_planner(r.params, c.planner_path());
  json log = {{"config", c.to_json()},
              {"epoch_loss", r.epoch_loss},
              {"num_examples", r.num_examples},
              {"num_clamped", r.num_clamped}};
  save_json(log, (dir / "planner_log.json").string());
  out << json{{"planner_checkpoint", c.planner_path()},
              {"epoch_loss", r.epoch_loss},
              {"num_examples", r.num_examples}}
             .dump()
      << '\n';
  return 0;
}

PathPoint point_from_json(const json& j) {
  PathPoint p;
  p.topic = j.at("topic").get<std::string>();
  if (j.contains("action") && !j.at("action").is_null()) p.action = j.at("action").get<std::string>();
  if (p.topic.empty()) throw std::runtime_error("instance target topic is empty");
  return p;
}

// Instance schema: {"context": str, "knowledge": str | [[s,p,o],...],
// "target": {"action": str|null, "topic": str}, "user": str,
// "candidates": [{"action":..,"topic":..}, ...] (optional)}.
PlanInput load_instance(const std::string& path, const RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  PlanInput input;
  input.context_text = j.value("context", "");
  input.user_text = j.value("user", "");
  input.target = point_from_json(j.at("target"));
  std::vector<std::string> entities;
  if (j.contains("knowledge")) {
    const json& k = j.at("knowledge");
    if (k.is_string()) {
      input.knowledge_text = k.get<std::string>();
    } else {
      for (const json& t : k) {
        const auto triple = t.get<std::vector<std::string>>();
        if (triple.size() != 3) throw std::runtime_error("knowledge triples need 3 strings");
        for (const std::string& s : triple) {
          if (!input.knowledge_text.empty()) input.knowledge_text += ' ';
          input.knowledge_text += s;
        }
        entities.push_back(triple[0]);
        entities.push_back(triple[2]);
      }
    }
  }
  if (j.contains("candidates")) {
    std::vector<PathPoint> vocab;
    for (const json& p : j.at("candidates")) vocab.push_back(point_from_json(p));
    input.candidates = candidates_for(vocab, {}, input.target);
  } else if (!c.corpus.empty()) {
    input.candidates = candidates_for(require_corpus(c).vocab, entities, input.target);
  } else {
    input.candidates = {input.target};
  }
  return input;
}

int cmd_plan(const RunConfig& c, const std::string& instance_path, std::ostream& out) {
  const EncoderParams enc = require_encoder(c);
  const PlannerParams planner = require_planner(c, enc);
  const Featurizer feat = make_featurizer(c, enc.m);
  const PlanInput input = load_instance(instance_path, c);
  Rng rng(c.seed);
  const PlanResult r = plan_detailed(input, enc, planner, c.bridge(), feat, rng,
                                     PlanOptions{c.num_samples});
  const PathStyle style = parse_path_style(c.style);
  out << json{{"config", c.to_json()},
              {"horizon", r.horizon},
              {"path", serialize_path(r.path, style)},
              {"prompt", format_prompt(input.knowledge_text, input.context_text, r.path, style)}}
             .dump(1)
      << '\n';
  return 0;
}

json report_to_json(const PlanningReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"f1", {{"action", opt(r.f1_action)}, {"topic", r.f1_topic}}},
          {"bi_f1", {{"action", opt(r.bi_f1_action)}, {"topic", r.bi_f1_topic}}},
          {"goal_success", r.goal_success},
          {"n", r.n}};
}

int cmd_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Splits splits = load_splits(c);
  const EncoderParams enc = require_encoder(c);
  const PlannerParams planner = require_planner(c, enc);
  const Featurizer feat = make_featurizer(c, enc.m);
  const BridgeConfig bridge = c.bridge();
  const PlanOptions options{c.num_samples};

  // Decoding vocabulary spans every loaded split so OOD targets and their
  // neighbourhoods are reachable.
  std::vector<Dialogue> all = splits.train.dialogues;
  if (splits.test_id) all.insert(all.end(), splits.test_id->dialogues.begin(), splits.test_id->dialogues.end());
  if (splits.test_ood) all.insert(all.end(), splits.test_ood->dialogues.begin(), splits.test_ood->dialogues.end());
  const std::vector<PathPoint> vocab = make_corpus(std::move(all)).vocab;

  PathPlanner fn = [&](const PlanInput& in, Rng& rng) {
    return plan(in, enc, planner, bridge, feat, rng, options);
  };
  PlanningEvalOptions eval_opts;
  eval_opts.seed = c.seed;
  eval_opts.window_radius = static_cast<std::size_t>(c.window_radius);
  eval_opts.goal_radius = c.goal_radius;

  json report = {{"config", c.to_json()}};
  std::size_t total = 0;
  auto run_split = [&](const char* name, const std::optional<Corpus>& split) {
    if (!split) return;
    const PlanningReport r = evaluate_planning(*split, vocab, fn, eval_opts);
    if (r.n == 0) return;
    report[name] = report_to_json(r);
    total += r.n;
  };
  run_split("id", splits.test_id);
  run_split("ood", splits.test_ood);
  if (total == 0) {
    err << "error: no test instances\n";
    return 1;
  }
  out << report.dump(1) << '\n';
  return 0;
}

int cmd_simulate(const RunConfig& c, const std::string& graph_path, std::ostream& out) {
  const TopicGraph graph = TopicGraph::load(graph_path);
  SystemPolicy policy;
  if (c.policy == "oracle") {
    policy = shortest_path_policy();
  } else if (c.policy == "random") {
    policy = random_walk_policy();
  } else {
    const EncoderParams enc = require_encoder(c);
    const PlannerParams planner = require_planner(c, enc);
    policy = planner_policy(enc, planner, c.bridge(), make_featurizer(c, enc.m),
                            PlanOptions{c.num_samples});
  }
  const SelfPlaySummary s = run_self_play(policy, graph, c.follow_prob, c.max_turns,
                                          c.episodes, c.seed, c.jobs);
  json cfg = c.to_json();
  cfg.erase("jobs");  // scheduling only; results do not depend on it
  out << json{{"config", cfg},
              {"self_play_success", s.success_rate},
              {"mean_turns", s.mean_turns},
              {"n", s.episodes}}
             .dump(1)
      << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Goal-directed path planning over a Brownian-bridge latent space", "bridgeplan"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  std::string instance_path;
  std::string graph_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run config (JSON)")->required();
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--jobs", o.jobs, "Worker threads (simulate)");
    sub->add_option("--embeddings", o.embeddings, "JSON Lines text->vector overrides");
    sub->add_option("--out-dir", o.out_dir, "Output directory");
  };
  CLI::App* train_enc = app.add_subcommand("train-encoder", "Contrastive training of the latent encoder");
  CLI::App* train_plan = app.add_subcommand("train-planner", "Train the transition-count predictor");
  CLI::App* plan_cmd = app.add_subcommand("plan", "Plan a path for one instance and print the prompt");
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Planning metrics on the ID/OOD test splits");
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Self-play over a topic graph");
  for (CLI::App* sub : {train_enc, train_plan, plan_cmd, eval_cmd, sim_cmd}) add_common(sub);
  plan_cmd->add_option("--instance", instance_path, "Plan input (JSON)")->required();
  plan_cmd->add_option("--num-samples", o.num_samples, "Trajectories drawn per plan");
  eval_cmd->add_option("--num-samples", o.num_samples, "Trajectories drawn per plan");
  sim_cmd->add_option("--graph", graph_path, "Topic graph (JSON)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  }

  try {
    const RunConfig c = effective_config(config_path, o);
    if (*train_enc) return cmd_train_encoder(c, out, err);
    if (*train_plan) return cmd_train_planner(c, out, err);
    if (*plan_cmd) return cmd_plan(c, instance_path, out);
    if (*eval_cmd) return cmd_evaluate(c, out, err);
    if (*sim_cmd) return cmd_simulate(c, graph_path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace bridgeplan::cli
