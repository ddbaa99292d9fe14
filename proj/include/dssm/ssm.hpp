#pragma once

// Diagonal complex MIMO state-space layer (S5 family).
//
// Continuous system: h' = diag(lambda) h + B u,  y = 2 Re(C h) + D .* u.
// Each stored state stands for a conjugate pair, hence the factor 2.
// Re(lambda) = -exp(lambda_log_neg_re) keeps every mode strictly stable.

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dssm/complex.hpp"
#include "dssm/tensor.hpp"

namespace dssm::ssm {

struct SsmParams {
  std::size_t state_dim = 0;  // P
  std::size_t in_dim = 0;     // D
  Tensor lambda_log_neg_re;   // [P]
  Tensor lambda_im;           // [P]
  ComplexPair B;              // [P x D]
  ComplexPair C;              // [D x P]
  Tensor Dmat;                // [D]
  Tensor log_delta;           // [P]

  ComplexPair lambda() const;
  // Parameter tensors in a fixed declaration order.
  std::vector<std::pair<std::string, Tensor>> named(const std::string& prefix) const;
};

struct DiscreteSsm {
  ComplexPair a_bar;  // [P]
  ComplexPair b_bar;  // [P x D]
};

enum class ScanAlgo { Sequential, Parallel };

// lambda_k = -1/2 + i*pi*k; B, C ~ N(0, 1/P) per real component; D = 1;
// log delta ~ U(log delta_min, log delta_max).
SsmParams init_s5(std::size_t state_dim, std::size_t in_dim, double delta_min, double delta_max,
                  std::mt19937_64& rng);

// Zero-order hold at per-state step delta_eff [P]:
//   a_bar = exp(delta lambda),  b_bar = (exp(delta lambda) - 1) / lambda * B.
// For |lambda| < 1e-12 the limit b_bar = delta * B is used.
DiscreteSsm zoh_discretize(const SsmParams& params, const Tensor& delta_eff);

// h_t = a .* h_{t-1} + b_t with h_{-1} = 0, for a [P] and b [L x P].
// Differentiable in a and b; the backward pass runs the adjoint recurrence
// with conj(a) using the same algorithm.
ComplexPair linear_recurrence(const ComplexPair& a, const ComplexPair& b, ScanAlgo algo);

// y = 2 Re(C h) + Dmat .* u over a sequence u [L x D].
Tensor scan(const DiscreteSsm& d, const SsmParams& params, const Tensor& u, ScanAlgo algo);
inline Tensor scan_sequential(const DiscreteSsm& d, const SsmParams& params, const Tensor& u) {
  return scan(d, params, u, ScanAlgo::Sequential);
}
inline Tensor scan_parallel(const DiscreteSsm& d, const SsmParams& params, const Tensor& u) {
  return scan(d, params, u, ScanAlgo::Parallel);
}

// concat(scan_fwd(u), reverse(scan_bwd(reverse(u)))) * mix, mix [2D x D].
Tensor s5_bidirectional(const SsmParams& fwd, const SsmParams& bwd, const Tensor& mix,
                        const Tensor& u, const Tensor& delta_eff_fwd,
                        const Tensor& delta_eff_bwd, ScanAlgo algo = ScanAlgo::Parallel);

// ---- raw scan machinery (no autodiff) ---------------------------------------

// One element of the associative scan: the affine map h -> a h + b, per lane.
struct ScanElement {
  std::vector<double> ar, ai, br, bi;
};

// (earlier o later) = (a_l a_e, a_l b_e + b_l): apply `earlier` first.
ScanElement combine(const ScanElement& earlier, const ScanElement& later);

// Inclusive scan of the affine maps over L steps with `lanes` lanes each.
// Arrays are [L x lanes] row-major; a may vary per step. Writes h [L x lanes].
void scan_raw(std::size_t steps, std::size_t lanes, const double* ar, const double* ai,
              const double* br, const double* bi, double* hr, double* hi, ScanAlgo algo);

}  // namespace dssm::ssm
