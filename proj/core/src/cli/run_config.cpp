#include "kebio/cli/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

using nlohmann::json;

namespace {

// Field table for one section: key -> (writer, reader).
template <typename T>
struct Section {
  std::map<std::string, std::function<json(const T&)>> write;
  std::map<std::string, std::function<void(T&, const json&)>> read;

  template <typename F>
  void field(const std::string& key, F T::*member) {
    write[key] = [member](const T& t) { return json(t.*member); };
    read[key] = [member, key](T& t, const json& j) {
      try {
        t.*member = j.get<F>();
      } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type (" + j.type_name() + ")");
      }
    };
  }

  json to(const T& t) const {
    json j = json::object();
    for (const auto& [k, w] : write) j[k] = w(t);
    return j;
  }

  void from(T& t, const json& j, const std::string& where) const {
    if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
    for (const auto& [k, v] : j.items()) {
      auto it = read.find(k);
      if (it == read.end()) {
        throw ConfigError("unknown config key '" + k + "' in section '" + where + "'");
      }
      it->second(t, v);
    }
  }
};

const Section<EncoderConfig>& encoder_section() {
  static const Section<EncoderConfig> s = [] {
    Section<EncoderConfig> s;
    s.field("vocab_size", &EncoderConfig::vocab_size);
    s.field("hidden_dim", &EncoderConfig::hidden_dim);
    s.field("heads", &EncoderConfig::heads);
    s.field("l0", &EncoderConfig::l0);
    s.field("l1", &EncoderConfig::l1);
    s.field("max_seq_len", &EncoderConfig::max_seq_len);
    s.field("entity_dim", &EncoderConfig::entity_dim);
    s.field("k", &EncoderConfig::k);
    s.field("ffn_dim", &EncoderConfig::ffn_dim);
    s.field("layer_norm_eps", &EncoderConfig::layer_norm_eps);
    s.field("init_std", &EncoderConfig::init_std);
    s.field("gelu_tanh", &EncoderConfig::gelu_tanh);
    s.field("use_entity_memory", &EncoderConfig::use_entity_memory);
    return s;
  }();
  return s;
}

const Section<PretrainConfig>& pretrain_section() {
  static const Section<PretrainConfig> s = [] {
    Section<PretrainConfig> s;
    s.field("select_rate", &PretrainConfig::select_rate);
    s.field("mask_share", &PretrainConfig::mask_share);
    s.field("random_share", &PretrainConfig::random_share);
    s.field("keep_share", &PretrainConfig::keep_share);
    s.field("whole_entity_masking", &PretrainConfig::whole_entity_masking);
    s.field("freeze_entity_embeddings", &PretrainConfig::freeze_entity_embeddings);
    s.field("max_entities", &PretrainConfig::max_entities);
    s.field("lr", &PretrainConfig::lr);
    s.field("warmup_steps", &PretrainConfig::warmup_steps);
    s.field("total_steps", &PretrainConfig::total_steps);
    s.field("batch_size", &PretrainConfig::batch_size);
    s.field("weight_decay", &PretrainConfig::weight_decay);
    s.field("grad_clip", &PretrainConfig::grad_clip);
    s.field("adam_beta1", &PretrainConfig::adam_beta1);
    s.field("adam_beta2", &PretrainConfig::adam_beta2);
    s.field("adam_eps", &PretrainConfig::adam_eps);
    s.write["entity_embedding_init"] = [](const PretrainConfig& c) {
      return json(c.entity_init == EntityInit::kTranse ? "transe" : "random");
    };
    s.read["entity_embedding_init"] = [](PretrainConfig& c, const json& j) {
      const std::string v = j.is_string() ? j.get<std::string>() : "";
      if (v == "transe") {
        c.entity_init = EntityInit::kTranse;
      } else if (v == "random") {
        c.entity_init = EntityInit::kRandom;
      } else {
        throw ConfigError("entity_embedding_init must be \"transe\" or \"random\"");
      }
    };
    return s;
  }();
  return s;
}

const Section<TranseConfig>& transe_section() {
  static const Section<TranseConfig> s = [] {
    Section<TranseConfig> s;
    s.field("dim", &TranseConfig::dim);
    s.field("epochs", &TranseConfig::epochs);
    s.field("lr", &TranseConfig::lr);
    s.field("batch_size", &TranseConfig::batch_size);
    s.field("margin", &TranseConfig::margin);
    return s;
  }();
  return s;
}

const Section<FinetuneConfig>& finetune_section() {
  static const Section<FinetuneConfig> s = [] {
    Section<FinetuneConfig> s;
    s.field("lr", &FinetuneConfig::lr);
    s.field("epochs", &FinetuneConfig::epochs);
    s.field("batch_size", &FinetuneConfig::batch_size);
    s.field("weight_decay", &FinetuneConfig::weight_decay);
    s.field("grad_clip", &FinetuneConfig::grad_clip);
    s.field("max_len", &FinetuneConfig::max_len);
    s.field("use_entity_memory", &FinetuneConfig::use_entity_memory);
    s.field("search", &FinetuneConfig::search);
    return s;
  }();
  return s;
}

const Section<ProbeConfig>& probe_section() {
  static const Section<ProbeConfig> s = [] {
    Section<ProbeConfig> s;
    s.field("beam", &ProbeConfig::beam);
    s.field("max_len", &ProbeConfig::max_len);
    s.field("max_per_relation", &ProbeConfig::max_per_relation);
    return s;
  }();
  return s;
}

const Section<PathsConfig>& paths_section() {
  static const Section<PathsConfig> s = [] {
    Section<PathsConfig> s;
    s.field("kb_dir", &PathsConfig::kb_dir);
    s.field("raw_text", &PathsConfig::raw_text);
    s.field("ner_train", &PathsConfig::ner_train);
    s.field("ner_dev", &PathsConfig::ner_dev);
    s.field("ner_test", &PathsConfig::ner_test);
    s.field("re_train", &PathsConfig::re_train);
    s.field("re_dev", &PathsConfig::re_dev);
    s.field("re_test", &PathsConfig::re_test);
    return s;
  }();
  return s;
}

}  // namespace

void RunConfig::resolve() {
  pretrain.seed = seed;
  transe.seed = seed;
  finetune.seed = seed;
  finetune.annotate_threshold = annotate_threshold;
  transe.dim = encoder.entity_dim;
}

void RunConfig::validate() const {
  pretrain.validate();
  transe.validate();
  finetune.validate();
  if (vocab_size < static_cast<std::size_t>(Vocabulary::kNumReserved)) {
    throw ConfigError("vocab_size must be at least the reserved-token count");
  }
  if (!(annotate_threshold >= 0 && annotate_threshold <= 1)) {
    throw ConfigError("annotate_threshold must lie in [0, 1]");
  }
  if (probe.beam == 0 || probe.max_len == 0 || probe.max_len > 10) {
    throw ConfigError("probe.beam must be >= 1 and probe.max_len in [1, 10]");
  }
  EncoderConfig e = encoder;
  if (e.vocab_size == 0) e.vocab_size = 64;  // placeholder until the vocabulary exists
  e.validate();
}

std::string to_json(const RunConfig& c) {
  json j;
  j["encoder"] = encoder_section().to(c.encoder);
  j["pretrain"] = pretrain_section().to(c.pretrain);
  j["transe"] = transe_section().to(c.transe);
  j["finetune"] = finetune_section().to(c.finetune);
  j["probe"] = probe_section().to(c.probe);
  j["paths"] = paths_section().to(c.paths);
  j["vocab_size"] = c.vocab_size;
  j["annotate_threshold"] = c.annotate_threshold;
  j["steps"] = c.steps;
  j["re_negative_label"] = c.re_negative_label;
  j["seed"] = c.seed;
  return j.dump(2);
}

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  auto scalar = [](const json& v, const std::string& key, auto& dst) {
    try {
      dst = v.get<std::decay_t<decltype(dst)>>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type (" + v.type_name() + ")");
    }
  };
  for (const auto& [k, v] : j.items()) {
    if (k == "encoder") {
      encoder_section().from(c.encoder, v, k);
    } else if (k == "pretrain") {
      pretrain_section().from(c.pretrain, v, k);
    } else if (k == "transe") {
      transe_section().from(c.transe, v, k);
    } else if (k == "finetune") {
      finetune_section().from(c.finetune, v, k);
    } else if (k == "probe") {
      probe_section().from(c.probe, v, k);
    } else if (k == "paths") {
      paths_section().from(c.paths, v, k);
    } else if (k == "vocab_size") {
      scalar(v, k, c.vocab_size);
    } else if (k == "annotate_threshold") {
      scalar(v, k, c.annotate_threshold);
    } else if (k == "steps") {
      scalar(v, k, c.steps);
    } else if (k == "re_negative_label") {
      scalar(v, k, c.re_negative_label);
    } else if (k == "seed") {
      scalar(v, k, c.seed);
    } else {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  c.resolve();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  try {
    cfg = run_config_from_json(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  // Relative data paths are relative to the config file, not the caller.
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  for (std::string* p : {&cfg.paths.kb_dir, &cfg.paths.raw_text, &cfg.paths.ner_train,
                         &cfg.paths.ner_dev, &cfg.paths.ner_test, &cfg.paths.re_train,
                         &cfg.paths.re_dev, &cfg.paths.re_test}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) {
      *p = (base / *p).lexically_normal().string();
    }
  }
  return cfg;
}

std::string encoder_config_json(const EncoderConfig& config) {
  return encoder_section().to(config).dump();
}

EncoderConfig encoder_config_from_json(std::string_view text) {
  EncoderConfig c;
  try {
    encoder_section().from(c, json::parse(text), "encoder");
  } catch (const json::exception& e) {
    throw DataError(std::string("bad encoder config: ") + e.what());
  }
  return c;
}

std::uint64_t config_digest(const EncoderConfig& config) {
  return fnv1a64(encoder_config_json(config));
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
