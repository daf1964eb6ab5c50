#include "mdo/checkpoint.hpp"

#include <fstream>

#include "mdo/errors.hpp"

namespace mdo {

using json = nlohmann::json;

json checkpoint_to_json(const Checkpoint& ckpt) {
  ckpt.params.validate();
  json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["vocab_size"] = ckpt.params.shape.vocab_size;
  j["d"] = ckpt.params.shape.embed_dim;
  j["hidden"] = ckpt.params.shape.hidden;
  j["M"] = ckpt.params.shape.num_values;
  j["flat_params"] = ckpt.params.flat;
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    j["optimizer_state"] = {
        {"kind", std::string(optimizer_name(o.kind))},
        {"step", o.step},
        {"beta1", o.beta1},
        {"beta2", o.beta2},
        {"eps", o.eps},
        {"m", o.m},
        {"v", o.v},
    };
  } else {
    j["optimizer_state"] = nullptr;
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      throw ParseError("unsupported checkpoint schema_version " + j.at("schema_version").dump());
    }
    PolicyShape shape;
    shape.vocab_size = j.at("vocab_size").get<int>();
    shape.embed_dim = j.at("d").get<int>();
    shape.hidden = j.value("hidden", shape.hidden);
    shape.num_values = j.at("M").get<int>();
    Checkpoint ckpt{PolicyParams{shape, j.at("flat_params").get<std::vector<double>>()}, std::nullopt};
    ckpt.params.validate();
    const auto& o = j.at("optimizer_state");
    if (!o.is_null()) {
      const auto kind = parse_optimizer(o.at("kind").get<std::string>());
      if (!kind) throw ParseError("unknown optimizer kind in checkpoint");
      OptimizerState s;
      s.kind = *kind;
      s.step = o.at("step").get<std::uint64_t>();
      s.beta1 = o.at("beta1").get<double>();
      s.beta2 = o.at("beta2").get<double>();
      s.eps = o.at("eps").get<double>();
      s.m = o.at("m").get<std::vector<double>>();
      s.v = o.at("v").get<std::vector<double>>();
      ckpt.optimizer = std::move(s);
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("inconsistent checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ckpt).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace mdo
