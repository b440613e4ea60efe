#include "bridgeplan/embedder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace bridgeplan {
namespace {

TEST(EmbedderTest, EmptyTextIsZero) {
  EXPECT_EQ(featurize("", 32), FeatVec(32, 0.0));
  EXPECT_EQ(featurize("   \t ", 32), FeatVec(32, 0.0));
}

TEST(EmbedderTest, TokenOrderDoesNotMatter) {
  EXPECT_EQ(featurize("movie star", 64), featurize("star movie", 64));
  EXPECT_EQ(featurize("a b c d", 7), featurize("d c b a", 7));
}

TEST(EmbedderTest, LowercasesAndSplitsOnWhitespace) {
  EXPECT_EQ(featurize("Movie  STAR\n", 64), featurize("movie star", 64));
  EXPECT_EQ(tokenize(" Hello\tWorld "), (std::vector<std::string>{"hello", "world"}));
}

// Reference values from an independent Python implementation of
// FNV-1a-64 followed by the splitmix64 finalizer.
TEST(EmbedderTest, HashMatchesReferenceImplementation) {
  EXPECT_EQ(token_hash("movie"), 0x6b8cfe9db17d963aULL);
  EXPECT_EQ(token_hash("movie", 1), 0x08aebe0400f1cfedULL);
  EXPECT_EQ(token_hash("star"), 0x7301bf368aa9646aULL);
  EXPECT_EQ(token_hash("star", 1), 0xa40460558199792dULL);
  // "movie" and "star" collide at index 2 of 8 with opposite signs.
  FeatVec want(8, 0.0);
  want[2] = 1.0 / 3.0;
  EXPECT_EQ(featurize("Movie star movie", 8), want);
}

TEST(EmbedderTest, DeterministicAndBounded) {
  const std::string text = "the quick brown fox jumps over the lazy dog again and again";
  const FeatVec a = featurize(text, 16);
  const FeatVec b = featurize(text, 16);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), a.size() * sizeof(double)));
  for (double v : a) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_LE(std::abs(v), 1.0);
  }
}

TEST(EmbedderTest, PairIsSpaceJoin) {
  EXPECT_EQ(featurize_pair("a", "", 16), featurize("a", 16));
  EXPECT_EQ(featurize_pair("a", "b", 16), featurize("a b", 16));
  EXPECT_EQ(featurize_pair("", "", 16), FeatVec(16, 0.0));
}

TEST(EmbedderTest, RejectsZeroDimension) {
  EXPECT_THROW(featurize("x", 0), std::invalid_argument);
  EXPECT_THROW(Featurizer(0), std::invalid_argument);
}

TEST(FeaturizerTest, OverridesTakePrecedence) {
  Featurizer f(4);
  EXPECT_EQ(f("hello"), featurize("hello", 4));
  f.add_override("hello", {1, 2, 3, 4});
  EXPECT_EQ(f("hello"), (FeatVec{1, 2, 3, 4}));
  EXPECT_EQ(f("world"), featurize("world", 4));
  EXPECT_THROW(f.add_override("bad", {1, 2}), std::invalid_argument);
}

TEST(FeaturizerTest, LoadsEmbeddingFile) {
  const auto path = std::filesystem::temp_directory_path() / "bridgeplan_embed_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"text": "alpha", "vector": [0.5, -0.5, 0, 1]})" << "\n\n";
    out << R"({"text": "beta", "vector": [1, 1, 1, 1]})" << "\n";
  }
  Featurizer f(4);
  f.load_embeddings(path.string());
  EXPECT_EQ(f.num_overrides(), 2u);
  EXPECT_EQ(f("alpha"), (FeatVec{0.5, -0.5, 0, 1}));
  {
    std::ofstream out(path);
    out << R"({"text": "alpha", "vector": [0.5]})" << "\n";
  }
  Featurizer g(4);
  EXPECT_THROW(g.load_embeddings(path.string()), std::runtime_error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace bridgeplan
