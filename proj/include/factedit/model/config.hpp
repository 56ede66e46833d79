#pragma once

// Model dimensions, decoding limits and training settings, with JSON
// round-tripping. Unknown keys are rejected so typos do not go unnoticed.

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "factedit/neural/amsgrad.hpp"

namespace factedit {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelDims {
  int word = 100;
  int entity = 100;
  int predicate = 100;
  int buffer_hidden = 100;  // per direction; buffer vectors are twice this
  int triple = 200;
  int stream_hidden = 200;
  int attention = 200;
  int action_hidden = 200;
  int copy = 200;

  int buffer() const { return 2 * buffer_hidden; }

  /// Embeddings 100, buffer/triple/stream 200.
  static ModelDims small() { return {}; }
  /// Embeddings/buffer/triple 300, stream 600.
  static ModelDims large() { return {300, 300, 300, 150, 300, 600, 300, 300, 300}; }
  /// Gradient-check scale.
  static ModelDims tiny() { return {4, 3, 3, 3, 4, 5, 4, 4, 3}; }

  void validate() const {
    for (int d : {word, entity, predicate, buffer_hidden, triple, stream_hidden, attention, action_hidden, copy})
      if (d <= 0) throw ConfigError("all model dimensions must be positive");
  }

  bool operator==(const ModelDims&) const = default;
};

struct DecodeLimits {
  int max_consecutive_gen = 10;  // editor: Gen is masked after this many in a row
  int max_length = 100;          // encoder-decoder output cap
  int min_length = 0;            // encoder-decoder: end symbol masked before this

  void validate() const {
    if (max_consecutive_gen < 1) throw ConfigError("max_consecutive_gen must be >= 1");
    if (max_length < 0 || min_length < 0) throw ConfigError("decode lengths must be non-negative");
  }

  bool operator==(const DecodeLimits&) const = default;
};

enum class ModelKind { FactEditor = 0, EncDec = 1 };

inline std::string model_kind_name(ModelKind k) { return k == ModelKind::FactEditor ? "facteditor" : "encdec"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "facteditor") return ModelKind::FactEditor;
  if (s == "encdec") return ModelKind::EncDec;
  throw ConfigError("unknown model '" + s + "' (expected facteditor or encdec)");
}

struct TrainConfig {
  ModelKind model = ModelKind::FactEditor;
  ModelDims dims;
  nn::AmsGradConfig optimizer;
  int batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 1;
  int min_freq = 1;
  bool double_precision = false;
  int eval_every = 1;  // epochs between dev evaluations
  DecodeLimits limits;
  bool augment_root = false;

  void validate() const {
    dims.validate();
    limits.validate();
    if (!(optimizer.lr > 0)) throw ConfigError("lr must be > 0");
    if (!(optimizer.beta1 >= 0 && optimizer.beta1 < 1 && optimizer.beta2 >= 0 && optimizer.beta2 < 1))
      throw ConfigError("optimizer betas must lie in [0, 1)");
    if (!(optimizer.eps > 0)) throw ConfigError("eps must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  }

  bool operator==(const TrainConfig& o) const {
    return model == o.model && dims == o.dims && optimizer.lr == o.optimizer.lr &&
           optimizer.beta1 == o.optimizer.beta1 && optimizer.beta2 == o.optimizer.beta2 &&
           optimizer.eps == o.optimizer.eps && batch_size == o.batch_size && epochs == o.epochs && seed == o.seed &&
           min_freq == o.min_freq && double_precision == o.double_precision && eval_every == o.eval_every &&
           limits == o.limits && augment_root == o.augment_root;
  }
};

inline nlohmann::json to_json(const ModelDims& d) {
  return {{"word", d.word},
          {"entity", d.entity},
          {"predicate", d.predicate},
          {"buffer_hidden", d.buffer_hidden},
          {"triple", d.triple},
          {"stream_hidden", d.stream_hidden},
          {"attention", d.attention},
          {"action_hidden", d.action_hidden},
          {"copy", d.copy}};
}

inline nlohmann::json to_json(const DecodeLimits& l) {
  return {{"max_consecutive_gen", l.max_consecutive_gen}, {"max_length", l.max_length}, {"min_length", l.min_length}};
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"model", model_kind_name(c.model)},
          {"dims", to_json(c.dims)},
          {"optimizer",
           {{"lr", c.optimizer.lr}, {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2}, {"eps", c.optimizer.eps}}},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"min_freq", c.min_freq},
          {"precision", c.double_precision ? "double" : "float"},
          {"eval_every", c.eval_every},
          {"limits", to_json(c.limits)},
          {"augment_root", c.augment_root}};
}

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "' in " + where);
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline ModelDims dims_from_json(const nlohmann::json& j, ModelDims d = {}) {
  detail::check_keys(j,
                     {"preset", "word", "entity", "predicate", "buffer_hidden", "triple", "stream_hidden", "attention",
                      "action_hidden", "copy"},
                     "dims");
  if (j.contains("preset")) {
    const auto p = j.at("preset").get<std::string>();
    if (p == "small") d = ModelDims::small();
    else if (p == "large") d = ModelDims::large();
    else if (p == "tiny") d = ModelDims::tiny();
    else throw ConfigError("unknown preset '" + p + "'");
  }
  detail::read_opt(j, "word", d.word);
  detail::read_opt(j, "entity", d.entity);
  detail::read_opt(j, "predicate", d.predicate);
  detail::read_opt(j, "buffer_hidden", d.buffer_hidden);
  detail::read_opt(j, "triple", d.triple);
  detail::read_opt(j, "stream_hidden", d.stream_hidden);
  detail::read_opt(j, "attention", d.attention);
  detail::read_opt(j, "action_hidden", d.action_hidden);
  detail::read_opt(j, "copy", d.copy);
  return d;
}

inline DecodeLimits limits_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"max_consecutive_gen", "max_length", "min_length"}, "limits");
  DecodeLimits l;
  detail::read_opt(j, "max_consecutive_gen", l.max_consecutive_gen);
  detail::read_opt(j, "max_length", l.max_length);
  detail::read_opt(j, "min_length", l.min_length);
  return l;
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"model", "dims", "optimizer", "batch_size", "epochs", "seed", "min_freq", "precision",
                      "eval_every", "limits", "augment_root"},
                     "config");
  TrainConfig c;
  if (j.contains("model")) c.model = parse_model_kind(j.at("model").get<std::string>());
  if (j.contains("dims")) c.dims = dims_from_json(j.at("dims"));
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    detail::check_keys(o, {"lr", "beta1", "beta2", "eps"}, "optimizer");
    detail::read_opt(o, "lr", c.optimizer.lr);
    detail::read_opt(o, "beta1", c.optimizer.beta1);
    detail::read_opt(o, "beta2", c.optimizer.beta2);
    detail::read_opt(o, "eps", c.optimizer.eps);
  }
  detail::read_opt(j, "batch_size", c.batch_size);
  detail::read_opt(j, "epochs", c.epochs);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "min_freq", c.min_freq);
  detail::read_opt(j, "eval_every", c.eval_every);
  detail::read_opt(j, "augment_root", c.augment_root);
  if (j.contains("precision")) {
    const auto p = j.at("precision").get<std::string>();
    if (p != "float" && p != "double") throw ConfigError("precision must be float or double");
    c.double_precision = p == "double";
  }
  if (j.contains("limits")) c.limits = limits_from_json(j.at("limits"));
  c.validate();
  return c;
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace factedit
