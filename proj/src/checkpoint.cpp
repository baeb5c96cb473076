#include "pheno/checkpoint.hpp"

#include <json.hpp>

#include "pheno/io.hpp"

namespace pheno {

using nlohmann::json;

namespace {

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void read_into(const json& j, Eigen::MatrixXd& m, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m.rows())
    throw InputError("checkpoint: '" + name + "' should have " + std::to_string(m.rows()) + " rows");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols())
      throw InputError("checkpoint: '" + name + "' should have " + std::to_string(m.cols()) + " columns");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[c].get<double>();
  }
}

void read_into(const json& j, Eigen::VectorXd& v, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != v.size())
    throw InputError("checkpoint: '" + name + "' should have " + std::to_string(v.size()) + " entries");
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
}

const json& field(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw InputError("checkpoint: missing '" + key + "'");
  return j.at(key);
}

json params_json(const ModelParams& params) {
  json out = json::object();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BaseRateModel>) {
          out["rates"] = to_json(p.rates);
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          out["w"] = to_json(p.w);
          out["b"] = to_json(p.b);
        } else if constexpr (std::is_same_v<T, MlpParams>) {
          for (std::size_t k = 0; k < p.layers.size(); ++k) {
            const std::string prefix = "layers." + std::to_string(k) + ".";
            out[prefix + "w"] = to_json(p.layers[k].w);
            out[prefix + "b"] = to_json(p.layers[k].b);
          }
        } else {
          for (std::size_t l = 0; l < p.layers.size(); ++l) {
            const std::string prefix = "layers." + std::to_string(l) + ".";
            out[prefix + "w_x"] = to_json(p.layers[l].w_x);
            out[prefix + "w_h"] = to_json(p.layers[l].w_h);
            out[prefix + "b"] = to_json(p.layers[l].b);
          }
          out["output.w"] = to_json(p.w_out);
          out["output.b"] = to_json(p.b_out);
        }
      },
      params);
  return out;
}

json arch_json(const Model& m) {
  json a;
  a["primary_label_count"] = m.objective.primary_label_count;
  a["output_dim"] = m.objective.output_width();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BaseRateModel>) {
          a["layers"] = json::array();
          a["input_dim"] = 0;
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          a["layers"] = json::array();
          a["input_dim"] = p.w.cols();
          a["lambda"] = p.lambda;
        } else if constexpr (std::is_same_v<T, MlpParams>) {
          a["layers"] = p.hidden();
          a["input_dim"] = p.input_dim();
        } else {
          a["layers"] = p.arch().cells;
          a["input_dim"] = p.input_dim();
          a["gate_order"] = "g,i,f,o";
        }
      },
      m.params);
  return a;
}

// Allocates the shape described by `arch` and fills it from `j`.
ModelParams params_from_json(ModelKind kind, const json& arch, const ObjectiveConfig& objective,
                             const json& j) {
  const int out_dim = objective.output_width();
  const int in_dim = field(arch, "input_dim").get<int>();
  const auto layers = field(arch, "layers").get<std::vector<int>>();
  switch (kind) {
    case ModelKind::base_rate: {
      BaseRateModel m{Eigen::VectorXd(out_dim)};
      read_into(field(j, "rates"), m.rates, "rates");
      return m;
    }
    case ModelKind::logistic: {
      LogisticModel m{Eigen::MatrixXd(out_dim, in_dim), Eigen::VectorXd(out_dim),
                      arch.value("lambda", 0.0)};
      read_into(field(j, "w"), m.w, "w");
      read_into(field(j, "b"), m.b, "b");
      return m;
    }
    case ModelKind::mlp: {
      MlpParams m = zero_mlp_params(in_dim, layers, out_dim);
      for (std::size_t k = 0; k < m.layers.size(); ++k) {
        const std::string prefix = "layers." + std::to_string(k) + ".";
        read_into(field(j, prefix + "w"), m.layers[k].w, prefix + "w");
        read_into(field(j, prefix + "b"), m.layers[k].b, prefix + "b");
      }
      return m;
    }
    case ModelKind::lstm: {
      LstmParams m = zero_lstm_params({in_dim, layers, out_dim});
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const std::string prefix = "layers." + std::to_string(l) + ".";
        read_into(field(j, prefix + "w_x"), m.layers[l].w_x, prefix + "w_x");
        read_into(field(j, prefix + "w_h"), m.layers[l].w_h, prefix + "w_h");
        read_into(field(j, prefix + "b"), m.layers[l].b, prefix + "b");
      }
      read_into(field(j, "output.w"), m.w_out, "output.w");
      read_into(field(j, "output.b"), m.b_out, "output.b");
      return m;
    }
  }
  throw InputError("checkpoint: unknown model kind");
}

ModelKind kind_of(const ModelParams& p) {
  return static_cast<ModelKind>(p.index());
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const Model& m = ckpt.model;
  if (kind_of(m.params) != m.kind) throw InputError("checkpoint: model kind does not match its parameters");
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["epoch"] = ckpt.epoch;
  j["config_digest"] = ckpt.config_digest;
  j["arch_kind"] = to_string(m.kind);
  j["input_kind"] = to_string(m.input);
  j["arch"] = arch_json(m);
  j["objective"] = {{"mode", to_string(m.objective.mode)},
                    {"alpha", m.objective.alpha},
                    {"aux_label_count", m.objective.aux_label_count}};
  j["truncate_last_hours"] = m.truncate_last_hours ? json(*m.truncate_last_hours) : json(nullptr);
  j["channel_specs"] = json::parse(channel_specs_to_json(m.specs));
  j["params"] = params_json(m.params);
  json opt = {{"learning_rate", ckpt.sgd.learning_rate},
              {"momentum", ckpt.sgd.momentum},
              {"weight_decay", ckpt.sgd.weight_decay},
              {"clip_norm", ckpt.sgd.clip_norm}};
  opt["velocity"] = ckpt.velocity ? params_json(*ckpt.velocity) : json(nullptr);
  j["optimizer"] = std::move(opt);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    if (field(j, "format_version").get<int>() != kCheckpointFormatVersion)
      throw InputError("checkpoint: unsupported format_version");
    Checkpoint c;
    c.epoch = field(j, "epoch").get<int>();
    c.config_digest = field(j, "config_digest").get<std::string>();
    Model& m = c.model;
    m.kind = model_kind_from_string(field(j, "arch_kind").get<std::string>());
    m.input = input_kind_from_string(field(j, "input_kind").get<std::string>());
    const json& arch = field(j, "arch");
    const json& obj = field(j, "objective");
    m.objective.mode = objective_mode_from_string(field(obj, "mode").get<std::string>());
    m.objective.alpha = field(obj, "alpha").get<double>();
    m.objective.aux_label_count = field(obj, "aux_label_count").get<int>();
    m.objective.primary_label_count = field(arch, "primary_label_count").get<int>();
    validate_objective(m.objective);
    if (field(arch, "output_dim").get<int>() != m.objective.output_width())
      throw InputError("checkpoint: output_dim disagrees with the label counts");
    const json& trunc = field(j, "truncate_last_hours");
    if (!trunc.is_null()) m.truncate_last_hours = trunc.get<int>();
    const json& specs = field(j, "channel_specs");
    m.specs.clear();
    for (const auto& s : specs) {
      ChannelSpec cs{field(s, "name").get<std::string>(), field(s, "normal_value").get<double>(),
                     field(s, "range_lo").get<double>(), field(s, "range_hi").get<double>()};
      validate_spec(cs);
      m.specs.push_back(cs);
    }
    m.params = params_from_json(m.kind, arch, m.objective, field(j, "params"));
    const json& opt = field(j, "optimizer");
    c.sgd = {field(opt, "learning_rate").get<double>(), field(opt, "momentum").get<double>(),
             field(opt, "weight_decay").get<double>(), field(opt, "clip_norm").get<double>()};
    const json& vel = field(opt, "velocity");
    if (!vel.is_null()) c.velocity = params_from_json(m.kind, arch, m.objective, vel);
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: malformed field: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_text_file(path));
}

}  // namespace pheno
