// SPDX-License-Identifier: Apache-2.0

#include "mgt/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mgt/error.hpp"

namespace mgt::train {

using json = nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError(where() + "expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    known_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where() + "\"" + key + "\" has the wrong type");
    }
  }

  void read_size(const char* key, std::size_t& out) {
    known_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return;
    if (!it->is_number_unsigned()) {
      throw ConfigError(where() + "\"" + key + "\" must be a non-negative integer");
    }
    out = it->get<std::size_t>();
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string name;
    bool present = object_.contains(key);
    read(key, name);
    if (present) out = parse(name);
  }

  const json* child(const char* key) {
    known_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!known_.count(it.key())) throw ConfigError(where() + "unknown key \"" + it.key() + "\"");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : "config." + path_ + ": "; }

  const json& object_;
  std::string path_;
  std::set<std::string> known_;
};

void read_model(const json& object, model::MGTConfig& m) {
  ObjectReader r(object, "model");
  r.read_size("node_features", m.node_features);
  r.read_size("edge_features", m.edge_features);
  r.read_size("out_dim", m.out_dim);
  r.read_size("embed_dim", m.embed_dim);
  r.read_size("positional_dim", m.positional_dim);
  r.read_enum("positional", m.positional, model::parse_positional);
  r.read("scales", m.scales);
  r.read_size("wavelet_layers", m.wavelet_layers);
  r.read_size("pe_steps", m.pe_steps);
  r.read_size("atom_layers", m.atom_layers);
  r.read_size("substructure_layers", m.substructure_layers);
  r.read_size("heads", m.heads);
  r.read_size("clusters", m.clusters);
  r.read_enum("readout", m.readout, model::parse_readout);
  r.read("lambda_link", m.lambda_link);
  r.read("lambda_entropy", m.lambda_entropy);
  r.read("dropout", m.dropout);
  r.read("attention_dropout", m.attention_dropout);
  r.finish();
}

json model_json(const model::MGTConfig& m) {
  return json{{"node_features", m.node_features},
              {"edge_features", m.edge_features},
              {"out_dim", m.out_dim},
              {"embed_dim", m.embed_dim},
              {"positional_dim", m.positional_dim},
              {"positional", std::string(model::to_string(m.positional))},
              {"scales", m.scales},
              {"wavelet_layers", m.wavelet_layers},
              {"pe_steps", m.pe_steps},
              {"atom_layers", m.atom_layers},
              {"substructure_layers", m.substructure_layers},
              {"heads", m.heads},
              {"clusters", m.clusters},
              {"readout", std::string(model::to_string(m.readout))},
              {"lambda_link", m.lambda_link},
              {"lambda_entropy", m.lambda_entropy},
              {"dropout", m.dropout},
              {"attention_dropout", m.attention_dropout}};
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("config: epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("config: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("config: beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("config: epsilon must be positive");
}

TrainConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: malformed JSON: " + std::string(e.what()));
  }
  TrainConfig cfg;
  ObjectReader r(doc, "");
  if (const json* m = r.child("model")) read_model(*m, cfg.model);
  r.read_enum("task", cfg.task, model::parse_task);
  r.read_size("epochs", cfg.epochs);
  r.read_size("batch_size", cfg.batch_size);
  r.read("learning_rate", cfg.learning_rate);
  r.read("seed", cfg.seed);
  r.read("beta1", cfg.beta1);
  r.read("beta2", cfg.beta2);
  r.read("epsilon", cfg.epsilon);
  r.read("freeze_wavelet_encoder", cfg.freeze_wavelet_encoder);
  r.read("dataset", cfg.dataset);
  r.read("log", cfg.log_path);
  r.read("checkpoint", cfg.checkpoint_path);
  r.finish();
  cfg.validate();
  return cfg;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_json(const TrainConfig& cfg) {
  json doc{{"model", model_json(cfg.model)},
           {"task", std::string(model::to_string(cfg.task))},
           {"epochs", cfg.epochs},
           {"batch_size", cfg.batch_size},
           {"learning_rate", cfg.learning_rate},
           {"seed", cfg.seed},
           {"beta1", cfg.beta1},
           {"beta2", cfg.beta2},
           {"epsilon", cfg.epsilon},
           {"freeze_wavelet_encoder", cfg.freeze_wavelet_encoder},
           {"dataset", cfg.dataset},
           {"log", cfg.log_path},
           {"checkpoint", cfg.checkpoint_path}};
  return doc.dump(2);
}

TrainConfig run_identity(TrainConfig cfg) {
  cfg.log_path.clear();
  cfg.checkpoint_path.clear();
  return cfg;
}

std::string config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(run_identity(cfg))) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016" PRIx64, h);
  return out;
}

}  // namespace mgt::train
