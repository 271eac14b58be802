#include "arcobci/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "arcobci/error.hpp"

namespace arcobci {

namespace {

std::vector<double> flatten_rows(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json model_to_json(const PosteriorModel& model) {
  nlohmann::json j;
  j["format"] = "arco-bci-model";
  j["version"] = 1;
  j["config"] = config_to_json(model.config);
  j["data"] = {{"rows", model.data.rows()},
               {"cols", model.data.cols()},
               {"values", flatten_rows(model.data.values)},
               {"offset", to_std(model.data.offset)},
               {"scale", to_std(model.data.scale)},
               {"constant_columns", model.data.constant_columns}};
  j["arco"] = arco_to_json(model.state.params);
  j["train_state"] = train_state_to_json(model.state);
  j["rng"] = rng_state(model.rng);
  j["cache"] = model.cache->to_json();
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : model.history) hist.push_back({h.step, h.log_evidence, h.max_weight, h.baseline});
  j["history"] = std::move(hist);
  j["stable_steps"] = model.stable_steps;
  j["converged"] = model.converged;
  return j;
}

PosteriorModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "arco-bci-model") throw Error(ErrorCode::ParseError, "not a model checkpoint");
    PosteriorModel model;
    model.config = config_from_json(j.at("config"));
    model.config.validate();
    const auto& data = j.at("data");
    const int rows = data.at("rows").get<int>();
    const int cols = data.at("cols").get<int>();
    const auto values = data.at("values").get<std::vector<double>>();
    if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
      throw Error(ErrorCode::ParseError, "data size mismatch in checkpoint");
    }
    model.data.values.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) model.data.values(r, c) = values[static_cast<std::size_t>(r) * cols + c];
    model.data.offset = to_eigen(data.at("offset").get<std::vector<double>>());
    model.data.scale = to_eigen(data.at("scale").get<std::vector<double>>());
    model.data.constant_columns = data.at("constant_columns").get<std::vector<int>>();
    if (model.data.offset.size() != cols || model.data.scale.size() != cols) {
      throw Error(ErrorCode::ParseError, "standardisation size mismatch in checkpoint");
    }
    ArcoTrainState state = train_state_from_json(j.at("train_state"));
    state.params = arco_from_json(j.at("arco"));
    if (state.params.d() != cols) throw Error(ErrorCode::ParseError, "order model dimension differs from data");
    if (state.first_moment.size() != state.params.size() || state.second_moment.size() != state.params.size()) {
      throw Error(ErrorCode::ParseError, "optimiser moments do not match parameter count");
    }
    model.state = std::move(state);
    model.rng = rng_from_state(j.at("rng").get<std::string>());
    MechanismCache::load_json(*model.cache, j.at("cache"));
    for (const auto& h : j.at("history")) {
      model.history.push_back({h.at(0).get<int>(), h.at(1).get<double>(), h.at(2).get<double>(), h.at(3).get<double>()});
    }
    model.stable_steps = j.at("stable_steps").get<int>();
    model.converged = j.at("converged").get<bool>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const PosteriorModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << model_to_json(model).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

PosteriorModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return model_from_json(j);
}

std::string format_training_log(const std::vector<TrainingRecord>& history) {
  std::string out = "step,log_evidence,max_weight,baseline\n";
  for (const auto& h : history) {
    out += std::to_string(h.step) + ',' + format_double(h.log_evidence) + ',' + format_double(h.max_weight) + ',' +
           format_double(h.baseline) + '\n';
  }
  return out;
}

}  // namespace arcobci
