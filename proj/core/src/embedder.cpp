#include "bridgeplan/embedder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bridgeplan {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (char ch : token) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

FeatVec featurize(std::string_view text, std::size_t m) {
  if (m == 0) throw std::invalid_argument("feature dimension must be >= 1");
  FeatVec out(m, 0.0);
  const auto tokens = tokenize(text);
  if (tokens.empty()) return out;
  for (const std::string& tok : tokens) {
    const std::size_t index = static_cast<std::size_t>(token_hash(tok) % m);
    const double sign = (token_hash(tok, 1) >> 63) ? -1.0 : 1.0;
    out[index] += sign;
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& v : out) v *= inv;
  return out;
}

FeatVec featurize_pair(std::string_view text_a, std::string_view text_b,
                       std::size_t m) {
  std::string joined;
  joined.reserve(text_a.size() + text_b.size() + 1);
  joined.append(text_a);
  joined.push_back(' ');
  joined.append(text_b);
  return featurize(joined, m);
}

Featurizer::Featurizer(std::size_t m) : m_(m) {
  if (m == 0) throw std::invalid_argument("feature dimension must be >= 1");
}

FeatVec Featurizer::operator()(std::string_view text) const {
  if (!overrides_.empty()) {
    auto it = overrides_.find(text);
    if (it != overrides_.end()) return it->second;
  }
  return featurize(text, m_);
}

void Featurizer::add_override(std::string text, FeatVec vec) {
  if (vec.size() != m_) {
    throw std::invalid_argument("embedding for '" + text + "' has dimension " +
                                std::to_string(vec.size()) + ", expected " +
                                std::to_string(m_));
  }
  for (double v : vec) {
    if (!std::isfinite(v)) throw std::invalid_argument("embedding for '" + text + "' is not finite");
  }
  overrides_.insert_or_assign(std::move(text), std::move(vec));
}

void Featurizer::load_embeddings(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw std::runtime_error("cannot open embedding file '" + file_path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      add_override(j.at("text").get<std::string>(), j.at("vector").get<FeatVec>());
    } catch (const std::exception& e) {
      throw std::runtime_error(file_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace bridgeplan
