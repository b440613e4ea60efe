#include "bridgeplan/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace bridgeplan {
namespace {

using nlohmann::json;

void append_word(std::string& out, std::string_view piece) {
  if (piece.empty()) return;
  if (!out.empty()) out += ' ';
  out += piece;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw CorpusError("line " + std::to_string(line_no) + ": " + what);
}

const json& require(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end()) fail(line_no, std::string("missing field '") + field + "'");
  return *it;
}

std::string require_string(const json& obj, const char* field,
                           std::size_t line_no) {
  const json& v = require(obj, field, line_no);
  if (!v.is_string()) fail(line_no, std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

PathPoint parse_point(const json& v, const char* field, std::size_t line_no) {
  if (!v.is_object()) fail(line_no, std::string("field '") + field + "' must be an object");
  PathPoint p;
  p.topic = require_string(v, "topic", line_no);
  auto a = v.find("action");
  if (a != v.end() && !a->is_null()) {
    if (!a->is_string()) fail(line_no, std::string("field '") + field + ".action' must be a string or null");
    p.action = a->get<std::string>();
  }
  return p;
}

json point_to_json(const PathPoint& p) {
  json j = json::object();
  j["action"] = p.action ? json(*p.action) : json(nullptr);
  j["topic"] = p.topic;
  return j;
}

}  // namespace

std::string PathPoint::serialize() const {
  if (action && !action->empty()) return *action + " " + topic;
  return topic;
}

Corpus make_corpus(std::vector<Dialogue> dialogues) {
  Corpus c;
  c.dialogues = std::move(dialogues);
  std::set<PathPoint> seen;
  for (const Dialogue& d : c.dialogues) seen.insert(d.path.begin(), d.path.end());
  c.vocab.assign(seen.begin(), seen.end());
  return c;
}

void validate_dialogue(const Dialogue& d) {
  const std::string who = "dialogue '" + d.id + "': ";
  if (d.path.empty()) throw CorpusError(who + "path is empty");
  if (d.turns.empty()) throw CorpusError(who + "turns are empty");
  if (d.target.topic.empty()) throw CorpusError(who + "target topic is empty");
  for (const PathPoint& p : d.path) {
    if (p.topic.empty()) throw CorpusError(who + "path point with empty topic");
  }
  if (!(d.path.back() == d.target)) {
    throw CorpusError(who + "path ends in '" + d.path.back().serialize() +
                      "' but target is '" + d.target.serialize() + "'");
  }
}

Dialogue parse_dialogue_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail(line_no, "expected a JSON object");

  Dialogue d;
  d.id = require_string(j, "id", line_no);
  d.target = parse_point(require(j, "target", line_no), "target", line_no);

  const json& knowledge = require(j, "knowledge", line_no);
  if (!knowledge.is_array()) fail(line_no, "field 'knowledge' must be an array");
  for (const json& t : knowledge) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_string() ||
        !t[1].is_string() || !t[2].is_string()) {
      fail(line_no, "field 'knowledge' entries must be [str, str, str]");
    }
    d.knowledge.push_back({t[0].get<std::string>(), t[1].get<std::string>(),
                           t[2].get<std::string>()});
  }

  auto profile = j.find("user_profile");
  if (profile != j.end() && !profile->is_null()) {
    if (!profile->is_array()) fail(line_no, "field 'user_profile' must be an array or null");
    std::vector<std::pair<std::string, std::string>> kv;
    for (const json& p : *profile) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
        fail(line_no, "field 'user_profile' entries must be [str, str]");
      }
      kv.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
    d.user_profile = std::move(kv);
  }

  const json& turns = require(j, "turns", line_no);
  if (!turns.is_array()) fail(line_no, "field 'turns' must be an array");
  for (const json& t : turns) {
    if (!t.is_object()) fail(line_no, "field 'turns' entries must be objects");
    const std::string role = require_string(t, "role", line_no);
    Turn turn;
    if (role == "user") {
      turn.role = Role::kUser;
    } else if (role == "system") {
      turn.role = Role::kSystem;
    } else {
      fail(line_no, "field 'role' must be \"user\" or \"system\", got \"" + role + "\"");
    }
    turn.utterance = require_string(t, "utterance", line_no);
    d.turns.push_back(std::move(turn));
  }

  const json& path = require(j, "path", line_no);
  if (!path.is_array()) fail(line_no, "field 'path' must be an array");
  for (const json& p : path) d.path.push_back(parse_point(p, "path", line_no));

  try {
    validate_dialogue(d);
  } catch (const CorpusError& e) {
    fail(line_no, e.what());
  }
  return d;
}

Corpus parse_corpus(std::istream& in) {
  std::vector<Dialogue> dialogues;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    dialogues.push_back(parse_dialogue_line(line, line_no));
  }
  return make_corpus(std::move(dialogues));
}

Corpus load_corpus(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw CorpusError("cannot open corpus file '" + file_path + "'");
  return parse_corpus(in);
}

std::string dialogue_to_json_line(const Dialogue& d) {
  json j = json::object();
  j["id"] = d.id;
  j["target"] = point_to_json(d.target);
  json knowledge = json::array();
  for (const Triple& t : d.knowledge) knowledge.push_back({t.subject, t.predicate, t.object});
  j["knowledge"] = std::move(knowledge);
  if (d.user_profile) {
    json profile = json::array();
    for (const auto& [k, v] : *d.user_profile) profile.push_back({k, v});
    j["user_profile"] = std::move(profile);
  } else {
    j["user_profile"] = nullptr;
  }
  json turns = json::array();
  for (const Turn& t : d.turns) {
    turns.push_back({{"role", t.role == Role::kUser ? "user" : "system"},
                     {"utterance", t.utterance}});
  }
  j["turns"] = std::move(turns);
  json path = json::array();
  for (const PathPoint& p : d.path) path.push_back(point_to_json(p));
  j["path"] = std::move(path);
  return j.dump();
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Dialogue& d : corpus.dialogues) out << dialogue_to_json_line(d) << '\n';
}

std::string knowledge_text(const Dialogue& d) {
  std::string out;
  for (const Triple& t : d.knowledge) {
    append_word(out, t.subject);
    append_word(out, t.predicate);
    append_word(out, t.object);
  }
  return out;
}

std::string context_text(const Dialogue& d, std::size_t up_to_turn) {
  std::string out;
  const std::size_t end = std::min(up_to_turn, d.turns.size());
  for (std::size_t i = 0; i < end; ++i) append_word(out, d.turns[i].utterance);
  return out;
}

std::string user_text(const Dialogue& d, std::size_t up_to_turn) {
  std::string out;
  const std::size_t end = std::min(up_to_turn, d.turns.size());
  for (std::size_t i = end; i > 0; --i) {
    if (d.turns[i - 1].role == Role::kUser) {
      out = d.turns[i - 1].utterance;
      break;
    }
  }
  if (d.user_profile) {
    for (const auto& [k, v] : *d.user_profile) {
      append_word(out, k);
      append_word(out, v);
    }
  }
  return out;
}

std::vector<std::size_t> system_turns(const Dialogue& d) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    if (d.turns[i].role == Role::kSystem) out.push_back(i);
  }
  return out;
}

DialoguePath remaining_path(const Dialogue& d, std::size_t snapshot_turn) {
  if (snapshot_turn >= d.turns.size() || d.turns[snapshot_turn].role != Role::kSystem) {
    throw std::invalid_argument("dialogue '" + d.id + "': turn " +
                                std::to_string(snapshot_turn) +
                                " is not a system turn");
  }
  std::size_t realized = 0;
  for (std::size_t i = 0; i < snapshot_turn; ++i) {
    if (d.turns[i].role == Role::kSystem) ++realized;
  }
  if (realized >= d.path.size()) return {};
  return DialoguePath(d.path.begin() + static_cast<std::ptrdiff_t>(realized),
                      d.path.end());
}

std::vector<TupleSample> build_tuples(const Dialogue& d,
                                      std::size_t snapshot_turn) {
  const DialoguePath remaining = remaining_path(d, snapshot_turn);
  if (remaining.empty()) {
    throw std::invalid_argument("dialogue '" + d.id +
                                "': no remaining path at turn " +
                                std::to_string(snapshot_turn));
  }
  const int T = static_cast<int>(remaining.size());
  std::string s0 = knowledge_text(d);
  append_word(s0, context_text(d, snapshot_turn));
  const std::string u = user_text(d, snapshot_turn);
  const std::string sT = d.target.serialize();

  std::vector<TupleSample> out;
  out.reserve(static_cast<std::size_t>(T - 1));
  for (int t = 1; t < T; ++t) {
    out.push_back({d.id, u, s0, remaining[static_cast<std::size_t>(t - 1)].serialize(),
                   sT, t, T});
  }
  return out;
}

std::vector<TupleSample> build_all_tuples(const Corpus& corpus) {
  std::vector<TupleSample> out;
  for (const Dialogue& d : corpus.dialogues) {
    for (std::size_t turn : system_turns(d)) {
      if (remaining_path(d, turn).empty()) continue;
      auto tuples = build_tuples(d, turn);
      out.insert(out.end(), std::make_move_iterator(tuples.begin()),
                 std::make_move_iterator(tuples.end()));
    }
  }
  return out;
}

std::vector<PlanningSnapshot> build_snapshots(const Dialogue& d) {
  std::vector<PlanningSnapshot> out;
  const std::string knowledge = knowledge_text(d);
  std::set<std::string> entities;
  for (const Triple& t : d.knowledge) {
    entities.insert(t.subject);
    entities.insert(t.object);
  }
  std::size_t k = 0;
  for (std::size_t turn : system_turns(d)) {
    PlanningSnapshot s;
    s.dialogue_id = d.id;
    s.snapshot_turn = turn;
    s.system_index = k++;
    s.context_text = context_text(d, turn);
    s.knowledge_text = knowledge;
    s.user_text = user_text(d, turn);
    s.target = d.target;
    s.knowledge_entities.assign(entities.begin(), entities.end());
    s.remaining = remaining_path(d, turn);
    s.true_T = static_cast<int>(s.remaining.size());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PlanningSnapshot> build_all_snapshots(const Corpus& corpus) {
  std::vector<PlanningSnapshot> out;
  for (const Dialogue& d : corpus.dialogues) {
    auto snaps = build_snapshots(d);
    out.insert(out.end(), std::make_move_iterator(snaps.begin()),
               std::make_move_iterator(snaps.end()));
  }
  return out;
}

Batch make_batch(const std::vector<TupleSample>& tuples,
                 const std::vector<std::size_t>& indices) {
  Batch b;
  b.items.reserve(indices.size());
  for (std::size_t i : indices) b.items.push_back(tuples.at(i));
  b.negatives.resize(b.items.size());
  for (std::size_t i = 0; i < b.items.size(); ++i) {
    for (std::size_t j = 0; j < b.items.size(); ++j) {
      if (b.items[j].dialogue_id != b.items[i].dialogue_id) b.negatives[i].push_back(j);
    }
  }
  return b;
}

Batch sample_batch(const std::vector<TupleSample>& tuples,
                   std::size_t batch_size, Rng& rng) {
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  if (tuples.empty()) throw std::invalid_argument("no tuples to sample from");
  const bool distinct = std::any_of(tuples.begin(), tuples.end(), [&](const TupleSample& t) {
    return t.dialogue_id != tuples.front().dialogue_id;
  });
  if (!distinct) throw std::invalid_argument("tuples must come from at least 2 dialogues");

  std::vector<std::size_t> indices;
  indices.reserve(batch_size);
  if (tuples.size() >= batch_size) {
    // Partial Fisher-Yates: the first batch_size slots are the sample.
    std::vector<std::size_t> pool(tuples.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      indices.push_back(pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < batch_size; ++i) indices.push_back(rng.uniform_index(tuples.size()));
  }
  return make_batch(tuples, indices);
}

CorpusSplit split_ood(const Corpus& corpus, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  }
  std::map<std::string, std::vector<std::size_t>> by_topic;
  for (std::size_t i = 0; i < corpus.dialogues.size(); ++i) {
    by_topic[corpus.dialogues[i].target.topic].push_back(i);
  }
  const std::size_t n = corpus.dialogues.size();
  if (by_topic.size() < 2) {
    throw CorpusError("OOD split needs at least 2 distinct target topics; corpus has " +
                      std::to_string(n) + " dialogues over " +
                      std::to_string(by_topic.size()) + " target topic(s)");
  }
  const std::size_t n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n))));
  const std::size_t want_ood = (n_test + 1) / 2;

  std::vector<std::string> topics;
  for (const auto& [topic, _] : by_topic) topics.push_back(topic);
  rng.shuffle(std::span<std::string>(topics));

  std::set<std::string> ood_topics;
  std::size_t n_ood = 0;
  for (const std::string& topic : topics) {
    const std::size_t size = by_topic[topic].size();
    if (n_ood + size <= want_ood) {
      ood_topics.insert(topic);
      n_ood += size;
    }
    if (n_ood == want_ood) break;
  }
  if (ood_topics.empty()) {
    // Every group overshoots; take the smallest (first in shuffled order on ties).
    const std::string* best = nullptr;
    for (const std::string& topic : topics) {
      if (!best || by_topic[topic].size() < by_topic[*best].size()) best = &topic;
    }
    ood_topics.insert(*best);
    n_ood = by_topic[*best].size();
  }

  std::vector<std::size_t> rest;
  std::vector<Dialogue> ood;
  for (std::size_t i = 0; i < n; ++i) {
    if (ood_topics.count(corpus.dialogues[i].target.topic)) {
      ood.push_back(corpus.dialogues[i]);
    } else {
      rest.push_back(i);
    }
  }
  const std::size_t want_id = n_test > n_ood ? n_test - n_ood : 0;
  if (rest.size() <= want_id) {
    throw CorpusError("corpus too small for OOD split: " + std::to_string(n) +
                      " dialogues, " + std::to_string(n_ood) + " held out as OOD, " +
                      std::to_string(rest.size()) + " left for train and in-domain test");
  }
  rng.shuffle(std::span<std::size_t>(rest));
  std::vector<std::size_t> id_idx(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(want_id));
  std::vector<std::size_t> train_idx(rest.begin() + static_cast<std::ptrdiff_t>(want_id), rest.end());
  std::sort(id_idx.begin(), id_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<Dialogue> id, train;
  for (std::size_t i : id_idx) id.push_back(corpus.dialogues[i]);
  for (std::size_t i : train_idx) train.push_back(corpus.dialogues[i]);
  return {make_corpus(std::move(train)), make_corpus(std::move(id)), make_corpus(std::move(ood))};
}

}  // namespace bridgeplan
