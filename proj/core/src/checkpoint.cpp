#include "bridgeplan/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bridgeplan {
namespace {

using nlohmann::json;

json block_to_json(const MlpBlock& block) {
  json j;
  j["dims"] = {block.input_dim(), block.hidden_dim(), block.output_dim()};
  j["params"] = std::vector<double>(block.params().begin(), block.params().end());
  return j;
}

MlpBlock block_from_json(const json& j, std::size_t in, std::size_t hidden,
                         std::size_t out, const char* name) {
  const auto dims = j.at("dims").get<std::vector<std::size_t>>();
  if (dims != std::vector<std::size_t>{in, hidden, out}) {
    throw std::runtime_error(std::string("checkpoint block '") + name + "' has unexpected dims");
  }
  MlpBlock block(in, hidden, out);
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != block.num_params()) {
    throw std::runtime_error(std::string("checkpoint block '") + name + "' has " +
                             std::to_string(params.size()) + " params, expected " +
                             std::to_string(block.num_params()));
  }
  std::copy(params.begin(), params.end(), block.params().begin());
  return block;
}

void expect_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw std::runtime_error(std::string("not a ") + format + " checkpoint");
  }
}

}  // namespace

json encoder_to_json(const EncoderParams& p) {
  json j;
  j["format"] = "bridgeplan-encoder";
  j["version"] = 1;
  j["m"] = p.m;
  j["d"] = p.d;
  j["hidden"] = p.hidden;
  j["seed"] = p.seed;
  j["blocks"] = {{"point", block_to_json(p.point)},
                 {"feedback", block_to_json(p.feedback)},
                 {"engagement", block_to_json(p.engagement)}};
  return j;
}

EncoderParams encoder_from_json(const json& j) {
  expect_format(j, "bridgeplan-encoder");
  EncoderParams p;
  p.m = j.at("m").get<std::size_t>();
  p.d = j.at("d").get<std::size_t>();
  p.hidden = j.at("hidden").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  const json& blocks = j.at("blocks");
  p.point = block_from_json(blocks.at("point"), p.m, p.hidden, p.d, "point");
  p.feedback = block_from_json(blocks.at("feedback"), p.m, p.hidden, p.m, "feedback");
  p.engagement = block_from_json(blocks.at("engagement"), p.m, p.hidden, 1, "engagement");
  return p;
}

json planner_to_json(const PlannerParams& p) {
  json j;
  j["format"] = "bridgeplan-planner";
  j["version"] = 1;
  j["m"] = p.m;
  j["hidden"] = p.hidden;
  j["t_max"] = p.t_max;
  j["seed"] = p.seed;
  j["blocks"] = {{"horizon", block_to_json(p.horizon)}};
  return j;
}

PlannerParams planner_from_json(const json& j) {
  expect_format(j, "bridgeplan-planner");
  PlannerParams p;
  p.m = j.at("m").get<std::size_t>();
  p.hidden = j.at("hidden").get<std::size_t>();
  p.t_max = j.at("t_max").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.horizon = block_from_json(j.at("blocks").at("horizon"), p.m, p.hidden,
                              static_cast<std::size_t>(p.t_max) + 1, "horizon");
  return p;
}

void save_json(const json& j, const std::string& file_path) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + file_path + "'");
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + file_path + "'");
}

json load_json(const std::string& file_path) {
  std::ifstream in(file_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + file_path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(file_path + ": " + e.what());
  }
}

void save_encoder(const EncoderParams& params, const std::string& file_path) {
  save_json(encoder_to_json(params), file_path);
}
EncoderParams load_encoder(const std::string& file_path) {
  return encoder_from_json(load_json(file_path));
}
void save_planner(const PlannerParams& params, const std::string& file_path) {
  save_json(planner_to_json(params), file_path);
}
PlannerParams load_planner(const std::string& file_path) {
  return planner_from_json(load_json(file_path));
}

}  // namespace bridgeplan
