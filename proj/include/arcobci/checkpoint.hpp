#pragma once

#include <string>

#include <json.hpp>

#include "arcobci/engine.hpp"

namespace arcobci {

/// Everything needed to resume training or answer queries: order-model
/// weights and optimiser state, training stream, mechanism cache, config,
/// standardised data with its affine map, and the training log.
nlohmann::json model_to_json(const PosteriorModel& model);
PosteriorModel model_from_json(const nlohmann::json& j);

void save_checkpoint(const PosteriorModel& model, const std::string& path);
PosteriorModel load_checkpoint(const std::string& path);

/// step,log_evidence,max_weight,baseline
std::string format_training_log(const std::vector<TrainingRecord>& history);

}  // namespace arcobci
