#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dssm/kernels.hpp"

namespace dssm::kernels {

#if DSSM_HAVE_AVX2
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if DSSM_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("DSSM_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Backend::Scalar;
    if (want == "avx2" && cpu_has_avx2()) return Backend::Avx2;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(initial_backend())};
  return slot;
}

}  // namespace

bool available(Backend backend) {
  return backend == Backend::Scalar || cpu_has_avx2();
}

const KernelTable& table(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return scalar_table();
    case Backend::Avx2:
#if DSSM_HAVE_AVX2
      if (cpu_has_avx2()) return avx2_table();
#endif
      throw std::runtime_error("kernel backend 'avx2' is not available on this CPU/build");
  }
  return scalar_table();
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

Backend current() {
  return &active() == &scalar_table() ? Backend::Scalar : Backend::Avx2;
}

void select(Backend backend) { active_slot().store(&table(backend), std::memory_order_relaxed); }

std::string_view backend_name(Backend backend) {
  return backend == Backend::Scalar ? "scalar" : "avx2";
}

}  // namespace dssm::kernels
