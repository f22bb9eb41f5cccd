#include "legalqa/checkpoint.hpp"

#include <fstream>

#include "legalqa/error.hpp"

namespace legalqa {

namespace {

json vector_json(const Eigen::Ref<const Vector>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j, std::size_t expected, const char* what) {
  auto values = j.get<std::vector<double>>();
  if (values.size() != expected) fail(ErrorCode::config_error, std::string(what) + " has the wrong number of values");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json mlp_json(const Mlp& m) {
  return {{"in", m.in}, {"hidden", m.hidden}, {"out", m.out}, {"params", vector_json(m.params)}};
}

Mlp mlp_from(const json& j) {
  Mlp m = Mlp::zeros(j.at("in").get<std::size_t>(), j.at("hidden").get<std::size_t>(), j.at("out").get<std::size_t>());
  m.params = vector_from(j.at("params"), m.parameter_count(), "network");
  return m;
}

}  // namespace

json to_json(const PredictorModel& model) {
  const auto& enc = model.encoder;
  Vector table = Eigen::Map<const Vector>(enc.feature_table.data(), enc.feature_table.size());
  return {{"format", "legalqa-predictor"},
          {"version", kCheckpointVersion},
          {"config", to_json(model.config)},
          {"encoder",
           {{"dim", enc.dim},
            {"buckets", enc.buckets},
            {"seed", enc.seed},
            {"rounds", enc.layers.size()},
            {"feature_table", vector_json(table)},
            {"layers", vector_json(enc.flatten_layers())}}},
          {"policy", mlp_json(model.policy.net)},
          {"value", mlp_json(model.value.net)}};
}

PredictorModel predictor_model_from_json(const json& j) {
  try {
    if (j.value("format", "") != "legalqa-predictor") fail(ErrorCode::config_error, "not a predictor checkpoint");
    if (j.value("version", 0) != kCheckpointVersion) {
      fail(ErrorCode::config_error, "unsupported checkpoint version " + j.value("version", json()).dump());
    }
    PredictorModel model;
    model.config = train_config_from_json(j.at("config"));
    const auto& e = j.at("encoder");
    auto& enc = model.encoder;
    enc.dim = e.at("dim").get<std::size_t>();
    enc.buckets = e.at("buckets").get<std::size_t>();
    enc.seed = e.at("seed").get<std::uint64_t>();
    auto rounds = e.at("rounds").get<std::size_t>();
    auto d = static_cast<Eigen::Index>(enc.dim);
    Vector table = vector_from(e.at("feature_table"), enc.dim * enc.buckets, "feature table");
    enc.feature_table = Eigen::Map<const Matrix>(table.data(), static_cast<Eigen::Index>(enc.buckets), d);
    enc.layers.assign(rounds, EncoderLayer{Matrix::Zero(d, d), Matrix::Zero(d, d), Vector::Zero(d)});
    enc.assign_layers(vector_from(e.at("layers"), enc.layer_parameter_count(), "encoder layers"));
    enc.validate();
    model.policy.net = mlp_from(j.at("policy"));
    model.value.net = mlp_from(j.at("value"));
    if (model.policy.net.in != enc.dim || model.policy.net.out != enc.dim || model.value.net.in != enc.dim ||
        model.value.net.out != 1) {
      fail(ErrorCode::config_error, "network shapes do not match the encoder dimension");
    }
    if (model.config.dim != enc.dim) fail(ErrorCode::config_error, "config dimension differs from the encoder");
    return model;
  } catch (const json::exception& ex) {
    fail(ErrorCode::config_error, std::string("malformed checkpoint: ") + ex.what());
  }
}

void save_checkpoint(const PredictorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

PredictorModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    fail(ErrorCode::config_error, "checkpoint " + path.string() + " is not valid JSON: " + ex.what());
  }
  return predictor_model_from_json(j);
}

}  // namespace legalqa
