#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "mdo/optimizer.hpp"
#include "mdo/policy.hpp"

namespace mdo {

inline constexpr int kCheckpointSchemaVersion = 1;

/// JSON: {schema_version, vocab_size, d, hidden, M, flat_params, optimizer_state}.
/// Doubles are written in shortest round-trip form, so load(save(x)) is bitwise x.
struct Checkpoint {
  PolicyParams params;
  std::optional<OptimizerState> optimizer;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
/// Throws ParseError for missing fields or a wrong schema version.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mdo
