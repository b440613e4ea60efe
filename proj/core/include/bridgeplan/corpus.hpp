#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bridgeplan/rng.hpp"

namespace bridgeplan {

// Raised for unreadable or schema-violating corpus input. The message carries
// the 1-based line number and, when known, the offending field or dialogue id.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One planning unit: a topic, optionally paired with an action.
struct PathPoint {
  std::optional<std::string> action;
  std::string topic;

  // "action topic", or just "topic" when there is no action.
  std::string serialize() const;

  friend bool operator==(const PathPoint&, const PathPoint&) = default;
  friend auto operator<=>(const PathPoint&, const PathPoint&) = default;
};

using DialoguePath = std::vector<PathPoint>;

enum class Role { kUser, kSystem };

struct Turn {
  Role role = Role::kUser;
  std::string utterance;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;
  friend bool operator==(const Triple&, const Triple&) = default;
};

// A goal-directed dialogue. path[k] annotates the k-th system turn; points
// past the last system turn are the not-yet-realized remainder. The last
// path point is always the target.
struct Dialogue {
  std::string id;
  PathPoint target;
  std::vector<Triple> knowledge;
  std::optional<std::vector<std::pair<std::string, std::string>>> user_profile;
  std::vector<Turn> turns;
  DialoguePath path;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  // Sorted, de-duplicated union of every path point in every dialogue.
  std::vector<PathPoint> vocab;
};

// Builds a corpus (including vocab) from already-validated dialogues.
Corpus make_corpus(std::vector<Dialogue> dialogues);

// Throws CorpusError when an invariant of Dialogue does not hold.
void validate_dialogue(const Dialogue& d);

// JSON Lines I/O. Blank lines are skipped.
Corpus load_corpus(const std::string& file_path);
Corpus parse_corpus(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);
std::string dialogue_to_json_line(const Dialogue& d);
Dialogue parse_dialogue_line(std::string_view line, std::size_t line_no);

// Text views of a dialogue used as model inputs.
std::string knowledge_text(const Dialogue& d);
std::string context_text(const Dialogue& d, std::size_t up_to_turn);
// Latest user utterance before `up_to_turn`, followed by the profile.
std::string user_text(const Dialogue& d, std::size_t up_to_turn);

// Indices into d.turns of system turns, in order.
std::vector<std::size_t> system_turns(const Dialogue& d);

// Path points not yet realized when the system speaks at `snapshot_turn`.
// Throws std::invalid_argument if snapshot_turn is not a system turn.
DialoguePath remaining_path(const Dialogue& d, std::size_t snapshot_turn);

// One contrastive observation. t indexes the interior point of the
// remaining path (1-based), T is the index of the target.
struct TupleSample {
  std::string dialogue_id;
  std::string u_text;
  std::string s0_text;
  std::string st_text;
  std::string sT_text;
  int t = 0;
  int T = 0;
};

// One tuple per interior index of the remaining path at `snapshot_turn`.
// Throws std::invalid_argument when the remaining path is empty.
std::vector<TupleSample> build_tuples(const Dialogue& d,
                                      std::size_t snapshot_turn);

// build_tuples over every system turn that still has a remaining path.
std::vector<TupleSample> build_all_tuples(const Corpus& corpus);

// A system-turn snapshot labelled with the true number of transitions
// (0 once the target has been realized).
struct PlanningSnapshot {
  std::string dialogue_id;
  std::size_t snapshot_turn = 0;
  std::size_t system_index = 0;  // k: how many system turns precede it
  std::string context_text;
  std::string knowledge_text;
  std::string user_text;
  PathPoint target;
  std::vector<std::string> knowledge_entities;
  DialoguePath remaining;
  int true_T = 0;
};

std::vector<PlanningSnapshot> build_snapshots(const Dialogue& d);
std::vector<PlanningSnapshot> build_all_snapshots(const Corpus& corpus);

// In-batch contrastive sample. negatives[i] lists the positions of batch
// members whose source dialogue differs from items[i]'s.
struct Batch {
  std::vector<TupleSample> items;
  std::vector<std::vector<std::size_t>> negatives;
};

Batch make_batch(const std::vector<TupleSample>& tuples,
                 const std::vector<std::size_t>& indices);

Batch sample_batch(const std::vector<TupleSample>& tuples,
                   std::size_t batch_size, Rng& rng);

struct CorpusSplit {
  Corpus train;
  Corpus test_id;
  Corpus test_ood;
};

// Holds out whole target-topic groups for the out-of-domain test set, then
// draws the in-domain test set from the remaining dialogues. Roughly half of
// the test_fraction share goes to each.
CorpusSplit split_ood(const Corpus& corpus, double test_fraction, Rng& rng);

}  // namespace bridgeplan
