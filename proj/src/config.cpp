#include "pheno/config.hpp"

#include <cstdio>
#include <set>

#include <json.hpp>

#include "pheno/io.hpp"
#include "pheno/rng.hpp"

namespace pheno {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects any key it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  const json& sub(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

std::vector<ChannelSpec> specs_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of channel specs");
  std::vector<ChannelSpec> out;
  for (const auto& item : j) {
    ObjectReader r(item, where + "[]");
    ChannelSpec s;
    if (!r.has("name")) throw ConfigError(where + ": channel spec without a name");
    r.get("name", s.name);
    r.get("normal_value", s.normal_value);
    r.get("range_lo", s.range_lo);
    r.get("range_hi", s.range_hi);
    r.finish();
    try {
      validate_spec(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    out.push_back(s);
  }
  return out;
}

void read_train_fields(ObjectReader& r, TrainConfig& c, int* primary_label_count) {
  std::string s;
  if (r.has("model")) {
    r.get("model", s);
    const TrainConfig defaults = default_train_config(model_kind_from_string(s));
    c = defaults;
  }
  if (r.has("input")) {
    r.get("input", s);
    c.input = input_kind_from_string(s);
  }
  r.get("layers", c.layers);
  r.get("dropout", c.dropout);
  if (r.has("objective")) {
    ObjectReader o(r.sub("objective"), r.path("objective"));
    if (o.has("mode")) {
      o.get("mode", s);
      c.objective.mode = objective_mode_from_string(s);
    }
    o.get("alpha", c.objective.alpha);
    o.get("aux_label_count", c.objective.aux_label_count);
    o.get("primary_label_count", c.objective.primary_label_count);
    o.finish();
  }
  if (r.has("optimizer")) {
    ObjectReader o(r.sub("optimizer"), r.path("optimizer"));
    o.get("learning_rate", c.sgd.learning_rate);
    o.get("momentum", c.sgd.momentum);
    o.get("weight_decay", c.sgd.weight_decay);
    o.get("clip_norm", c.sgd.clip_norm);
    o.finish();
  }
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("seed", c.seed);
  r.get("k", c.k);
  if (r.has("truncate_last_hours")) {
    int t = 0;
    r.get("truncate_last_hours", t);
    c.truncate_last_hours = t;
  }
  r.get("threads", c.threads);
  r.get("lambda_grid", c.lambda_grid);
  if (primary_label_count) *primary_label_count = c.objective.primary_label_count;
}

void check(const TrainConfig& c) {
  try {
    validate_train_config(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

CliTrainConfig cli_train_config_from_json(const std::string& text) {
  const json j = parse(text);
  ObjectReader r(j, "config");
  CliTrainConfig out;
  read_train_fields(r, out.train, &out.primary_label_count);
  if (r.has("channel_specs")) {
    std::string p;
    r.get("channel_specs", p);
    out.channel_specs = p;
  }
  r.finish();
  check(out.train);
  return out;
}

TrainConfig train_config_from_json(const std::string& text) {
  const json j = parse(text);
  ObjectReader r(j, "config");
  TrainConfig c;
  read_train_fields(r, c, nullptr);
  r.finish();
  check(c);
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["input"] = to_string(c.input);
  j["layers"] = c.layers;
  j["dropout"] = c.dropout;
  j["objective"] = {{"mode", to_string(c.objective.mode)},
                    {"alpha", c.objective.alpha},
                    {"aux_label_count", c.objective.aux_label_count},
                    {"primary_label_count", c.objective.primary_label_count}};
  j["optimizer"] = {{"learning_rate", c.sgd.learning_rate},
                    {"momentum", c.sgd.momentum},
                    {"weight_decay", c.sgd.weight_decay},
                    {"clip_norm", c.sgd.clip_norm}};
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["k"] = c.k;
  j["truncate_last_hours"] = c.truncate_last_hours ? json(*c.truncate_last_hours) : json(nullptr);
  j["lambda_grid"] = c.lambda_grid;
  return j.dump();
}

std::string config_digest(const TrainConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(train_config_to_json(config))));
  return buf;
}

namespace {

SynthConfig synth_from(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  SynthConfig c;
  r.get("episode_count", c.episode_count);
  r.get("label_count", c.label_count);
  if (r.has("channels")) c.channels = specs_from(r.sub("channels"), r.path("channels"));
  r.get("min_hours", c.min_hours);
  r.get("max_hours", c.max_hours);
  r.get("sample_interval_hours", c.sample_interval_hours);
  r.get("channel_drop_prob", c.channel_drop_prob);
  r.get("anchor_channel", c.anchor_channel);
  r.get("noise_scale", c.noise_scale);
  r.get("patient_sd", c.patient_sd);
  r.get("observation_sd", c.observation_sd);
  r.get("base_rate_top", c.base_rate_top);
  r.get("base_rate_decay", c.base_rate_decay);
  r.get("base_rates", c.base_rates);
  r.get("channel_affect_prob", c.channel_affect_prob);
  r.get("offset_min", c.offset_min);
  r.get("offset_max", c.offset_max);
  r.get("trend_max", c.trend_max);
  r.finish();
  validate_synth_config(c);
  return c;
}

}  // namespace

SynthConfig synth_config_from_json(const std::string& text) { return synth_from(parse(text), "synth"); }

SuiteConfig suite_config_from_json(const std::string& text) {
  const json j = parse(text);
  ObjectReader r(j, "suite");
  std::uint64_t seed = 1;
  r.get("seed", seed);
  SuiteConfig s = default_suite_config(seed);
  if (r.has("synth")) s.synth = synth_from(r.sub("synth"), r.path("synth"));
  r.get("primary_label_count", s.primary_label_count);
  r.get("k", s.k);
  r.get("threads", s.threads);
  if (r.has("models")) {
    s.models.clear();
    const json& models = r.sub("models");
    if (!models.is_array()) throw ConfigError("suite.models: expected an array");
    for (const auto& m : models) {
      ObjectReader mr(m, "suite.models[]");
      SuiteModel sm;
      if (!mr.has("name") || !mr.has("config")) throw ConfigError("suite.models[]: needs name and config");
      mr.get("name", sm.name);
      ObjectReader cr(mr.sub("config"), "suite.models[" + sm.name + "].config");
      sm.config.seed = seed;
      read_train_fields(cr, sm.config, nullptr);
      cr.finish();
      mr.finish();
      if (!m.at("config").contains("seed")) sm.config.seed = seed;
      check(sm.config);
      s.models.push_back(std::move(sm));
    }
  }
  if (r.has("ensembles")) {
    s.ensembles.clear();
    const json& ens = r.sub("ensembles");
    if (!ens.is_array()) throw ConfigError("suite.ensembles: expected an array");
    for (const auto& e : ens) {
      ObjectReader er(e, "suite.ensembles[]");
      SuiteEnsemble se;
      std::string mode = "mean";
      er.get("name", se.name);
      er.get("a", se.a);
      er.get("b", se.b);
      er.get("mode", mode);
      er.finish();
      if (se.name.empty() || se.a.empty() || se.b.empty())
        throw ConfigError("suite.ensembles[]: needs name, a and b");
      se.mode = ensemble_mode_from_string(mode);
      s.ensembles.push_back(se);
    }
  }
  r.finish();
  if (s.k < 1) throw ConfigError("suite.k must be >= 1");
  if (s.threads < 1) throw ConfigError("suite.threads must be >= 1");
  if (s.primary_label_count < 1 || s.primary_label_count > s.synth.label_count)
    throw ConfigError("suite.primary_label_count must be in [1, synth.label_count]");
  std::set<std::string> names;
  for (const auto& m : s.models)
    if (!names.insert(m.name).second) throw ConfigError("suite.models: duplicate name '" + m.name + "'");
  return s;
}

std::string read_config_text(const std::filesystem::path& path) {
  try {
    return read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace pheno
