#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bridgeplan {

using FeatVec = std::vector<double>;

// Lowercases (ASCII) and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

// FNV-1a over the token bytes followed by the splitmix64 finalizer. Seed 0.
std::uint64_t token_hash(std::string_view token, std::uint64_t seed = 0);

// Signed feature hashing with average pooling. Each token contributes
// +-1 at index token_hash(tok) % m, sign taken from the top bit of
// token_hash(tok, 1); the sum is divided by the token count. Empty text
// maps to the zero vector.
FeatVec featurize(std::string_view text, std::size_t m);

// featurize(text_a + " " + text_b, m).
FeatVec featurize_pair(std::string_view text_a, std::string_view text_b,
                       std::size_t m);

// Base text featurizer used by the encoder and planner. Hashes by default;
// texts present in the override table (loaded from a JSON Lines embedding
// file) map to their stored vectors instead.
class Featurizer {
 public:
  explicit Featurizer(std::size_t m);

  std::size_t dim() const { return m_; }
  FeatVec operator()(std::string_view text) const;

  // Throws std::invalid_argument if vec.size() != dim().
  void add_override(std::string text, FeatVec vec);
  std::size_t num_overrides() const { return overrides_.size(); }

  // Each line: {"text": str, "vector": [number, ...]} with dim() entries.
  void load_embeddings(const std::string& file_path);

 private:
  std::size_t m_;
  std::map<std::string, FeatVec, std::less<>> overrides_;
};

}  // namespace bridgeplan
