#include "mdo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "mdo/errors.hpp"

namespace mdo {
namespace {

using json = nlohmann::json;

struct Field {
  std::function<void(TrainConfig&, const json&)> set;
  std::function<json(const TrainConfig&)> get;
};

template <typename T>
T as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + j.dump());
  }
}

template <typename T, typename Member>
Field plain(const std::string& key, Member member) {
  return {[key, member](TrainConfig& c, const json& j) { std::invoke(member, c) = as<T>(j, key); },
          [member](const TrainConfig& c) { return json(std::invoke(member, c)); }};
}

template <typename T, typename Member>
Field hp_plain(const std::string& key, Member member) {
  return {[key, member](TrainConfig& c, const json& j) { std::invoke(member, c.hp) = as<T>(j, key); },
          [member](const TrainConfig& c) { return json(std::invoke(member, c.hp)); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["vocab_size"] = {[](TrainConfig& c, const json& j) { c.vocab.size = as<int>(j, "vocab_size"); },
                       [](const TrainConfig& c) { return json(c.vocab.size); }};
    f["max_summary_len"] = plain<int>("max_summary_len", &TrainConfig::max_summary_len);
    f["embed_dim"] = plain<int>("embed_dim", &TrainConfig::embed_dim);
    f["hidden"] = plain<int>("hidden", &TrainConfig::hidden);
    f["iterations"] = plain<int>("iterations", &TrainConfig::iterations);
    f["docs_pool_size"] = plain<int>("docs_pool_size", &TrainConfig::docs_pool_size);
    f["eval_docs"] = plain<int>("eval_docs", &TrainConfig::eval_docs);
    f["eval_interval"] = plain<int>("eval_interval", &TrainConfig::eval_interval);
    f["seed"] = plain<std::uint64_t>("seed", &TrainConfig::seed);
    f["output_dir"] = plain<std::string>("output_dir", &TrainConfig::output_dir);
    f["pretrain_epochs"] = plain<int>("pretrain_epochs", &TrainConfig::pretrain_epochs);
    f["pretrain_lr"] = plain<double>("pretrain_lr", &TrainConfig::pretrain_lr);
    f["pretrain_minibatch"] = plain<int>("pretrain_minibatch", &TrainConfig::pretrain_minibatch);
    f["init_checkpoint"] = plain<std::string>("init_checkpoint", &TrainConfig::init_checkpoint);
    f["strategy"] = {[](TrainConfig& c, const json& j) {
                       c.strategy = strategy_from_string(as<std::string>(j, "strategy"));
                     },
                     [](const TrainConfig& c) { return json(std::string(strategy_name(c.strategy))); }};

    f["gamma"] = hp_plain<double>("gamma", &Hyperparams::gamma);
    f["gae_lambda"] = hp_plain<double>("gae_lambda", &Hyperparams::gae_lambda);
    f["kl_beta"] = hp_plain<double>("kl_beta", &Hyperparams::kl_beta);
    f["clip_epsilon"] = hp_plain<double>("clip_epsilon", &Hyperparams::clip_epsilon);
    f["value_coef"] = hp_plain<double>("value_coef", &Hyperparams::value_coef);
    f["entropy_coef"] = hp_plain<double>("entropy_coef", &Hyperparams::entropy_coef);
    f["learning_rate"] = hp_plain<double>("learning_rate", &Hyperparams::learning_rate);
    f["max_grad_norm"] = hp_plain<double>("max_grad_norm", &Hyperparams::max_grad_norm);
    f["ppo_epochs"] = hp_plain<int>("ppo_epochs", &Hyperparams::ppo_epochs);
    f["batch_size"] = hp_plain<int>("batch_size", &Hyperparams::batch_size);
    f["normalize_advantages"] = hp_plain<bool>("normalize_advantages", &Hyperparams::normalize_advantages);
    f["optimizer"] = {[](TrainConfig& c, const json& j) {
                        const auto name = as<std::string>(j, "optimizer");
                        const auto kind = parse_optimizer(name);
                        if (!kind) throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
                        c.hp.optimizer = *kind;
                      },
                      [](const TrainConfig& c) { return json(std::string(optimizer_name(c.hp.optimizer))); }};
    return f;
  }();
  return table;
}

}  // namespace

void TrainConfig::validate() const {
  vocab.validate();
  episode().validate();
  hp.validate();
  if (embed_dim < 1 || hidden < 1) throw ConfigError("embed_dim and hidden must be positive");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (docs_pool_size < hp.batch_size) throw ConfigError("docs_pool_size must be >= batch_size");
  if (eval_docs < 1) throw ConfigError("eval_docs must be >= 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (pretrain_epochs < 0 || pretrain_minibatch < 1 || !(pretrain_lr > 0.0)) {
    throw ConfigError("pretraining needs epochs >= 0, minibatch >= 1 and lr > 0");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(base, value);
  }
  return base;
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  json j = json::object();
  for (const auto& [key, field] : fields()) j[key] = field.get(cfg);
  return j;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j, std::move(base));
}

void apply_override(TrainConfig& cfg, std::string_view key, std::string_view value) {
  json parsed = json::parse(value.begin(), value.end(), nullptr, false);
  if (parsed.is_discarded()) parsed = std::string(value);
  cfg = config_from_json(json{{std::string(key), parsed}}, cfg);
}

void apply_env_overrides(TrainConfig& cfg) {
  const char* env = std::getenv("MDO_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || env[0] == '-') throw ConfigError(std::string("MDO_SEED is not an unsigned integer: ") + env);
  cfg.seed = v;
}

}  // namespace mdo
