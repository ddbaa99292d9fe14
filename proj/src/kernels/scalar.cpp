#include "dssm/kernels.hpp"

namespace dssm::kernels {
namespace {

void add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dot(a + i * k, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

void cmul(const double* ar, const double* ai, const double* xr, const double* xi, double* outr,
          double* outi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = ar[i] * xr[i] - ai[i] * xi[i];
    const double im = ar[i] * xi[i] + ai[i] * xr[i];
    outr[i] = re;
    outi[i] = im;
  }
}

void cmul_add(const double* ar, const double* ai, const double* xr, const double* xi,
              const double* br, const double* bi, double* outr, double* outi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = ar[i] * xr[i] - ai[i] * xi[i] + br[i];
    const double im = ar[i] * xi[i] + ai[i] * xr[i] + bi[i];
    outr[i] = re;
    outi[i] = im;
  }
}

constexpr KernelTable kScalar{
    "scalar", add, sub, mul, axpy, scale, dot, sum, gemm_nn, gemm_nt, gemm_tn, cmul, cmul_add,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace dssm::kernels
