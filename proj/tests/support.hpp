#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "dssm/tensor.hpp"

namespace dssm::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0, bool grad = false) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = g(rng);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

inline Tensor uniform_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi, bool grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) { return max_abs_diff(a.data(), b.data()); }

inline void zero_grads(const std::vector<Tensor>& params) {
  for (Tensor p : params) p.zero_grad();
}

// Central differences of a scalar function with respect to every entry of p.
inline std::vector<double> numeric_grad(const std::function<Tensor()>& f, Tensor p, double h = 1e-6) {
  NoGradGuard guard;
  auto values = p.data_mut();
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = f().item();
    values[i] = saved - h;
    const double down = f().item();
    values[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

// Largest entrywise |a - n| / max(|a|, |n|, floor).
inline double entry_rel_error(const std::vector<double>& a, const std::vector<double>& n, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(n[i]), floor});
    worst = std::max(worst, std::abs(a[i] - n[i]) / denom);
  }
  return worst;
}

// ||a - n|| / max(||a||, ||n||), or the absolute difference when both vanish.
inline double norm_rel_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::sqrt(std::max(na, nn));
  return denom > 1e-300 ? std::sqrt(diff) / denom : std::sqrt(diff);
}

// Worst entrywise relative error between backprop and central differences.
inline double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                         double h = 1e-6, double floor = 1e-4) {
  zero_grads(params);
  f().backward();
  double worst = 0.0;
  for (const Tensor& p : params) {
    const std::vector<double> analytic = p.grad();
    const std::vector<double> numeric = numeric_grad(f, p, h);
    worst = std::max(worst, entry_rel_error(analytic, numeric, floor));
  }
  return worst;
}

}  // namespace dssm::testing
