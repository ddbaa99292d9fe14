#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dssm/ssm.hpp"

namespace dssm::ssm {

namespace {
constexpr double kLambdaFloor2 = 1e-24;  // |lambda| < 1e-12
}

ComplexPair SsmParams::lambda() const { return {neg(exp(lambda_log_neg_re)), lambda_im}; }

std::vector<std::pair<std::string, Tensor>> SsmParams::named(const std::string& prefix) const {
  return {
      {prefix + ".lambda_log_neg_re", lambda_log_neg_re},
      {prefix + ".lambda_im", lambda_im},
      {prefix + ".B_re", B.re},
      {prefix + ".B_im", B.im},
      {prefix + ".C_re", C.re},
      {prefix + ".C_im", C.im},
      {prefix + ".D", Dmat},
      {prefix + ".log_delta", log_delta},
  };
}

SsmParams init_s5(std::size_t state_dim, std::size_t in_dim, double delta_min, double delta_max,
                  std::mt19937_64& rng) {
  if (state_dim == 0 || in_dim == 0) {
    throw std::invalid_argument("init_s5: state and input dimensions must be positive");
  }
  if (state_dim % 2 != 0) {
    throw std::invalid_argument("init_s5: state dimension must be even (conjugate pairs), got " +
                                std::to_string(state_dim));
  }
  if (!(delta_min > 0.0)) {
    throw std::invalid_argument("init_s5: delta_min must be positive, got " +
                                std::to_string(delta_min));
  }
  if (delta_min > delta_max) {
    throw std::invalid_argument("init_s5: delta_min (" + std::to_string(delta_min) +
                                ") exceeds delta_max (" + std::to_string(delta_max) + ")");
  }
  const std::size_t P = state_dim, D = in_dim;

  SsmParams p;
  p.state_dim = P;
  p.in_dim = D;
  p.lambda_log_neg_re = Tensor::full({P}, std::log(0.5), true);
  std::vector<double> im(P);
  for (std::size_t k = 0; k < P; ++k) im[k] = std::numbers::pi * static_cast<double>(k);
  p.lambda_im = Tensor::from({P}, std::move(im), true);

  std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / static_cast<double>(P)));
  auto draw = [&](Shape shape) {
    std::vector<double> v(numel(shape));
    for (double& x : v) x = normal(rng);
    return Tensor::from(std::move(shape), std::move(v), true);
  };
  Tensor b_re = draw({P, D});
  Tensor b_im = draw({P, D});
  p.B = ComplexPair(b_re, b_im);
  Tensor c_re = draw({D, P});
  Tensor c_im = draw({D, P});
  p.C = ComplexPair(c_re, c_im);
  p.Dmat = Tensor::full({D}, 1.0, true);

  const double lo = std::log(delta_min), hi = std::log(delta_max);
  std::vector<double> ld(P, lo);
  if (hi > lo) {
    std::uniform_real_distribution<double> uniform(lo, hi);
    for (double& x : ld) x = uniform(rng);
  }
  p.log_delta = Tensor::from({P}, std::move(ld), true);
  return p;
}

DiscreteSsm zoh_discretize(const SsmParams& params, const Tensor& delta_eff) {
  const std::size_t P = params.state_dim;
  if (delta_eff.shape() != Shape{P}) {
    throw ShapeError("zoh_discretize: delta_eff " + shape_str(delta_eff.shape()) +
                     " does not match state dim " + std::to_string(P));
  }
  for (double v : delta_eff.data()) {
    if (!(v > 0.0)) throw std::domain_error("zoh_discretize: delta_eff must be positive");
  }

  const ComplexPair lam = params.lambda();
  const ComplexPair z = cmul_real(lam, delta_eff);
  const ComplexPair a_bar = cexp(z);

  std::vector<bool> tiny(P);
  const Tensor mag2 = cabs2(lam);
  for (std::size_t k = 0; k < P; ++k) tiny[k] = mag2[k] < kLambdaFloor2;
  const Tensor one = Tensor::full({P}, 1.0);
  const Tensor zero = Tensor::zeros({P});
  const ComplexPair lam_safe{select(tiny, one, lam.re), select(tiny, zero, lam.im)};
  const ComplexPair ratio = cdiv(cexpm1(z), lam_safe);
  const ComplexPair coef{select(tiny, delta_eff, ratio.re), select(tiny, zero, ratio.im)};

  const ComplexPair coef_col{reshape(coef.re, {P, 1}), reshape(coef.im, {P, 1})};
  return {a_bar, cmul(coef_col, params.B)};
}

Tensor scan(const DiscreteSsm& d, const SsmParams& params, const Tensor& u, ScanAlgo algo) {
  if (u.rank() != 2 || u.dim(1) != params.in_dim || u.dim(0) == 0) {
    throw ShapeError("scan: input " + shape_str(u.shape()) + " incompatible with input dim " +
                     std::to_string(params.in_dim));
  }
  const ComplexPair bu{matmul(u, transpose(d.b_bar.re)), matmul(u, transpose(d.b_bar.im))};
  const ComplexPair h = linear_recurrence(d.a_bar, bu, algo);
  const Tensor ch_re = matmul(h.re, transpose(params.C.re)) - matmul(h.im, transpose(params.C.im));
  return scale(ch_re, 2.0) + u * params.Dmat;
}

Tensor s5_bidirectional(const SsmParams& fwd, const SsmParams& bwd, const Tensor& mix,
                        const Tensor& u, const Tensor& delta_eff_fwd,
                        const Tensor& delta_eff_bwd, ScanAlgo algo) {
  const std::size_t D = fwd.in_dim;
  if (bwd.in_dim != D || mix.shape() != Shape{2 * D, D}) {
    throw ShapeError("s5_bidirectional: mix " + shape_str(mix.shape()) + " must be [" +
                     std::to_string(2 * D) + "x" + std::to_string(D) + "]");
  }
  const Tensor y_fwd = scan(zoh_discretize(fwd, delta_eff_fwd), fwd, u, algo);
  const Tensor y_bwd = flip(scan(zoh_discretize(bwd, delta_eff_bwd), bwd, flip(u, 0), algo), 0);
  return matmul(concat({y_fwd, y_bwd}, 1), mix);
}

}  // namespace dssm::ssm
