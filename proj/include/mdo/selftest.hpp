#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mdo {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick randomized invariant checks of the installed build (kernels, GAE,
/// projection, KL shaping, gradients, scorers). Used by `mdo selftest`.
std::vector<SelftestCheck> run_selftest(std::uint64_t seed = 0);

}  // namespace mdo
