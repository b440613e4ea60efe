#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "bridgeplan/encoder.hpp"
#include "bridgeplan/planner.hpp"

namespace bridgeplan {

// Checkpoints are single JSON documents: dimensions, seed, and one flat
// parameter array per MLP block (layer by layer, weights row-major then
// bias).

nlohmann::json encoder_to_json(const EncoderParams& params);
EncoderParams encoder_from_json(const nlohmann::json& j);
nlohmann::json planner_to_json(const PlannerParams& params);
PlannerParams planner_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::string& file_path);
nlohmann::json load_json(const std::string& file_path);

void save_encoder(const EncoderParams& params, const std::string& file_path);
EncoderParams load_encoder(const std::string& file_path);
void save_planner(const PlannerParams& params, const std::string& file_path);
PlannerParams load_planner(const std::string& file_path);

}  // namespace bridgeplan
