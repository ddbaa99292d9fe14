#include "dssm/objective.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dssm {

namespace {

constexpr double kNormFloor = 1e-12;

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
}

double frobenius_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

Tensor reconstruction_loss(const Tensor& h_tr, const Tensor& h_se, const Tensor& h_re,
                           const Tensor& x_embedded) {
  require_same(h_tr, x_embedded, "reconstruction_loss");
  require_same(h_se, x_embedded, "reconstruction_loss");
  require_same(h_re, x_embedded, "reconstruction_loss");
  return mean(square(h_tr + h_se + h_re - x_embedded));
}

Tensor frobenius_cosine(const Tensor& a, const Tensor& b) {
  require_same(a, b, "frobenius_cosine");
  if (frobenius_norm(a) < kNormFloor || frobenius_norm(b) < kNormFloor) return Tensor::scalar(0.0);
  return sum(a * b) / (sqrt(sum(square(a))) * sqrt(sum(square(b))));
}

Tensor orthogonality_loss(const Tensor& h_tr, const Tensor& h_se, const Tensor& h_re) {
  return abs(frobenius_cosine(h_tr, h_se)) + abs(frobenius_cosine(h_tr, h_re)) +
         abs(frobenius_cosine(h_se, h_re));
}

LossBreakdown total_loss(const Tensor& forecast, const Tensor& target,
                         const std::array<Tensor, 3>& refined, const Tensor& x_embedded,
                         const LossWeights& weights) {
  require_same(forecast, target, "total_loss");
  if (weights.lambda_rec < 0.0 || weights.lambda_orth < 0.0) {
    throw std::invalid_argument("total_loss: loss weights must be non-negative");
  }
  LossBreakdown out;
  Tensor total = mean(square(forecast - target));
  out.mse = total.item();

  auto term = [&](double weight, auto&& fn) {
    if (weight > 0.0) {
      Tensor t = fn();
      total = total + scale(t, weight);
      return t.item();
    }
    NoGradGuard guard;
    return fn().item();
  };
  out.rec = term(weights.lambda_rec, [&] {
    return reconstruction_loss(refined[0], refined[1], refined[2], x_embedded);
  });
  out.orth = term(weights.lambda_orth,
                  [&] { return orthogonality_loss(refined[0], refined[1], refined[2]); });
  out.total = total;
  return out;
}

Metrics metrics(const Tensor& forecast, const Tensor& target) {
  MetricsAccumulator acc;
  acc.add(forecast, target);
  return acc.result();
}

void MetricsAccumulator::add(const Tensor& forecast, const Tensor& target) {
  require_same(forecast, target, "metrics");
  const auto f = forecast.data();
  const auto y = target.data();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = f[i] - y[i];
    sq_ += e * e;
    abs_ += std::abs(e);
  }
  count_ += f.size();
}

Metrics MetricsAccumulator::result() const {
  if (count_ == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  return {sq_ / static_cast<double>(count_), abs_ / static_cast<double>(count_)};
}

}  // namespace dssm
