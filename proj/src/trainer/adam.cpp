#include <cmath>

#include "dssm/trainer.hpp"

namespace dssm {

void adam_step(const NamedTensors& params, AdamState& state) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& [name, p] : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = params[i].second;
    if (state.m[i].size() != p.size()) {
      throw OptimizerError("adam: moment buffer for '" + params[i].first + "' has the wrong size");
    }
    if (!p.has_grad()) continue;
    for (double g : p.node()->grad) {
      if (!std::isfinite(g)) {
        throw OptimizerError("adam: non-finite gradient in parameter '" + params[i].first + "'");
      }
    }
  }

  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const double b1 = c.beta1, b2 = c.beta2, lr = c.lr, eps = c.eps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].second;
    double* values = p.data_mut().data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    const std::size_t n = p.size();
    const double* g = p.has_grad() ? p.node()->grad.data() : nullptr;
    if (g) {
      for (std::size_t j = 0; j < n; ++j) {
        m[j] = b1 * m[j] + (1.0 - b1) * g[j];
        v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        m[j] = b1 * m[j];
        v[j] = b2 * v[j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      values[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
    }
  }
}

double clip_grad_norm(const NamedTensors& params, double max_norm) {
  double total = 0.0;
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (double g : p.node()->grad) total += g * g;
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& [name, p] : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.node()->grad) g *= factor;
    }
  }
  return norm;
}

}  // namespace dssm
