#include <atomic>
#include <cstdlib>
#include <string_view>

#include "psdg/kernels.hpp"

namespace psdg::kernels {

#if !defined(PSDG_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(PSDG_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

bool avx2_supported() {
#if defined(PSDG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

bool neon_supported() {
#if defined(PSDG_HAVE_NEON)
  return true;  // Advanced SIMD is mandatory on AArch64.
#else
  return false;
#endif
}

namespace {

const KernelTable* lookup(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2" && avx2_supported()) return avx2_table();
  if (name == "neon" && neon_supported()) return neon_table();
  return nullptr;
}

const KernelTable* best() {
  if (const char* env = std::getenv("PSDG_KERNELS")) {
    if (auto* t = lookup(env)) return t;
  }
  if (avx2_supported()) return avx2_table();
  if (neon_supported()) return neon_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{best()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  auto* t = lookup(name);
  if (!t) return false;
  slot().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace psdg::kernels
