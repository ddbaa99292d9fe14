// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma and must only
// be entered after a runtime CPU check (see dispatch.cpp). Keep it free of
// standard-library templates so no AVX-encoded copies of shared inline
// functions leak into the rest of the program.

#include <immintrin.h>

#include "dssm/kernels.hpp"

namespace dssm::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = alpha * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + kLanes), _mm256_loadu_pd(b + i + kLanes), acc1);
  }
  for (; i + kLanes <= n; i += kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += a[i];
  return acc;
}

// crow[0..n) += alpha * brow[0..n)
inline void row_fma(double alpha, const double* brow, double* crow, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    _mm256_storeu_pd(crow + j,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
  }
  for (; j < n; ++j) crow[j] += alpha * brow[j];
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) row_fma(a[i * k + p], b + p * n, crow, n);
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
    for (std::size_t i = 0; i < m; ++i) row_fma(arow[i], brow, c + i * n, n);
  }
}

void cmul(const double* ar, const double* ai, const double* xr, const double* xi, double* outr,
          double* outi, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d var = _mm256_loadu_pd(ar + i);
    const __m256d vai = _mm256_loadu_pd(ai + i);
    const __m256d vxr = _mm256_loadu_pd(xr + i);
    const __m256d vxi = _mm256_loadu_pd(xi + i);
    const __m256d re = _mm256_fmsub_pd(var, vxr, _mm256_mul_pd(vai, vxi));
    const __m256d im = _mm256_fmadd_pd(var, vxi, _mm256_mul_pd(vai, vxr));
    _mm256_storeu_pd(outr + i, re);
    _mm256_storeu_pd(outi + i, im);
  }
  for (; i < n; ++i) {
    const double re = ar[i] * xr[i] - ai[i] * xi[i];
    const double im = ar[i] * xi[i] + ai[i] * xr[i];
    outr[i] = re;
    outi[i] = im;
  }
}

void cmul_add(const double* ar, const double* ai, const double* xr, const double* xi,
              const double* br, const double* bi, double* outr, double* outi, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d var = _mm256_loadu_pd(ar + i);
    const __m256d vai = _mm256_loadu_pd(ai + i);
    const __m256d vxr = _mm256_loadu_pd(xr + i);
    const __m256d vxi = _mm256_loadu_pd(xi + i);
    const __m256d re = _mm256_fnmadd_pd(vai, vxi, _mm256_fmadd_pd(var, vxr, _mm256_loadu_pd(br + i)));
    const __m256d im = _mm256_fmadd_pd(vai, vxr, _mm256_fmadd_pd(var, vxi, _mm256_loadu_pd(bi + i)));
    _mm256_storeu_pd(outr + i, re);
    _mm256_storeu_pd(outi + i, im);
  }
  for (; i < n; ++i) {
    const double re = ar[i] * xr[i] - ai[i] * xi[i] + br[i];
    const double im = ar[i] * xi[i] + ai[i] * xr[i] + bi[i];
    outr[i] = re;
    outi[i] = im;
  }
}

constexpr KernelTable kAvx2{
    "avx2", add, sub, mul, axpy, scale, dot, sum, gemm_nn, gemm_nt, gemm_tn, cmul, cmul_add,
};

}  // namespace

const KernelTable& avx2_table() { return kAvx2; }

}  // namespace dssm::kernels
