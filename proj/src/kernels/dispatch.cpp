#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "mdo/errors.hpp"

namespace mdo::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(MDO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  const char* env = std::getenv("MDO_SIMD");
  const auto requested = env ? parse_isa(env) : std::nullopt;
  if (requested == Isa::Scalar) return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) noexcept {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  return std::nullopt;
}

const KernelTable* avx2_table() noexcept {
#if defined(MDO_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
  const KernelTable* table = isa == Isa::Scalar ? &scalar_table() : avx2_table();
  if (table == nullptr) {
    throw ConfigError("kernel variant '" + std::string(isa_name(isa)) +
                      "' is not available on this host");
  }
  current().store(table, std::memory_order_release);
}

}  // namespace mdo::kernels
