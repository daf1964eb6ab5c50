#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mdo/mdo.hpp"
#include "mdo/ppo.hpp"
#include "mdo/toyenv.hpp"

namespace mdo {

/// Everything a training run needs. JSON keys are the field names below,
/// flattened (hyperparameters sit next to run settings).
struct TrainConfig {
  Vocabulary vocab;
  int max_summary_len = 16;
  int embed_dim = 32;
  int hidden = 64;
  Hyperparams hp;
  Strategy strategy = Strategy::Min;
  int iterations = 300;
  int docs_pool_size = 200;
  int eval_docs = 64;
  int eval_interval = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  int pretrain_epochs = 30;
  double pretrain_lr = 1e-2;
  int pretrain_minibatch = 8;
  /// When set, the frozen reference is loaded from this checkpoint instead of pretrained.
  std::string init_checkpoint;

  void validate() const;
  [[nodiscard]] EpisodeConfig episode() const { return {max_summary_len, seed}; }
};

/// Keys accepted in config files and by apply_override.
const std::vector<std::string>& config_keys();

/// Overlays the keys present in j onto base; unknown keys throw ConfigError.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig load_config(const std::string& path, TrainConfig base = {});

/// key=value override; value is parsed as JSON when possible, else taken as a string.
void apply_override(TrainConfig& cfg, std::string_view key, std::string_view value);

/// MDO_SEED, when set, replaces cfg.seed (must be an unsigned integer).
void apply_env_overrides(TrainConfig& cfg);

}  // namespace mdo
