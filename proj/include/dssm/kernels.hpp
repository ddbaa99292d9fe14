#pragma once

// Dense f64 inner loops used by the tensor core and the SSM scan.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled into a separate translation unit and chosen at runtime
// when the CPU supports it. Both variants use a fixed evaluation order, so a
// given backend is bitwise reproducible; the two backends agree to rounding.
//
// The backend can be forced with the environment variable DSSM_KERNELS
// ("scalar" or "avx2") or programmatically with select().

#include <cstddef>
#include <string_view>

namespace dssm::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  const char* name;

  // out[i] = a[i] (op) b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = alpha * x[i]
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);

  // Row-major GEMM. When accumulate is false C is overwritten.
  //   gemm_nn: C[m x n] = A[m x k] * B[k x n]
  //   gemm_nt: C[m x n] = A[m x k] * B[n x k]^T
  //   gemm_tn: C[m x n] = A[k x m]^T * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c, bool accumulate);

  // Complex lanes in split (re, im) layout.
  //   cmul:     out = a * x
  //   cmul_add: out = a * x + b
  // Outputs may alias x or b.
  void (*cmul)(const double* ar, const double* ai, const double* xr, const double* xi,
               double* outr, double* outi, std::size_t n);
  void (*cmul_add)(const double* ar, const double* ai, const double* xr, const double* xi,
                   const double* br, const double* bi, double* outr, double* outi,
                   std::size_t n);
};

const KernelTable& scalar_table();
bool available(Backend backend);
const KernelTable& table(Backend backend);

// The kernels used by the tensor core. Chosen once on first use.
const KernelTable& active();
Backend current();
void select(Backend backend);
std::string_view backend_name(Backend backend);

// RAII override used by equivalence tests.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : saved_(current()) { select(backend); }
  ~ScopedBackend() { select(saved_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend saved_;
};

}  // namespace dssm::kernels
