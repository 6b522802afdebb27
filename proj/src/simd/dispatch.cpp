#include <atomic>
#include <cstdlib>
#include <string>

#include "alphadyn/error.hpp"
#include "kernels.hpp"

namespace alphadyn::simd {
namespace {

bool cpu_has_avx2() {
#if defined(ALPHADYN_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level initial_level() {
  Level best = cpu_has_avx2() ? Level::avx2 : Level::scalar;
  if (const char* env = std::getenv("ALPHADYN_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Level::scalar;
    if (want == "avx2" && best == Level::avx2) return Level::avx2;
  }
  return best;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> t{&table(initial_level())};
  return t;
}

}  // namespace

std::string_view to_string(Level level) {
  return level == Level::avx2 ? "avx2" : "scalar";
}

Level detected_level() { return cpu_has_avx2() ? Level::avx2 : Level::scalar; }

bool level_available(Level level) {
  return level == Level::scalar || cpu_has_avx2();
}

const KernelTable& table(Level level) {
#if defined(ALPHADYN_BUILD_AVX2)
  if (level == Level::avx2) {
    require(cpu_has_avx2(), Errc::invalid_argument, "avx2 kernels unavailable on this CPU");
    return detail::avx2_table;
  }
#else
  require(level == Level::scalar, Errc::invalid_argument, "binary built without avx2 kernels");
#endif
  return detail::scalar_table;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Level active_level() {
#if defined(ALPHADYN_BUILD_AVX2)
  if (&active() == &detail::avx2_table) return Level::avx2;
#endif
  return Level::scalar;
}

void set_active_level(Level level) { current().store(&table(level), std::memory_order_release); }

}  // namespace alphadyn::simd
