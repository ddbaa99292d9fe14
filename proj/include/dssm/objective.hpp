#pragma once

#include <array>

#include "dssm/tensor.hpp"

namespace dssm {

struct LossWeights {
  double lambda_rec = 0.1;
  double lambda_orth = 0.01;
};

// (1 / MD) || sum_c H'_c - X' ||_F^2
Tensor reconstruction_loss(const Tensor& h_tr, const Tensor& h_se, const Tensor& h_re,
                           const Tensor& x_embedded);

// <A, B>_F / (||A||_F ||B||_F); 0 when either norm is below 1e-12.
Tensor frobenius_cosine(const Tensor& a, const Tensor& b);

// sum over the three component pairs of |rho|, in [0, 3].
Tensor orthogonality_loss(const Tensor& h_tr, const Tensor& h_se, const Tensor& h_re);

struct LossBreakdown {
  Tensor total;
  double mse = 0.0;
  double rec = 0.0;
  double orth = 0.0;
};

// MSE(forecast, target) + lambda_rec * L_rec + lambda_orth * L_orth.
// A term whose weight is zero is evaluated for reporting but kept off the graph.
LossBreakdown total_loss(const Tensor& forecast, const Tensor& target,
                         const std::array<Tensor, 3>& refined, const Tensor& x_embedded,
                         const LossWeights& weights);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
};

Metrics metrics(const Tensor& forecast, const Tensor& target);

// Running sums over many windows; mean over every scored entry.
class MetricsAccumulator {
 public:
  void add(const Tensor& forecast, const Tensor& target);
  Metrics result() const;
  std::size_t count() const { return count_; }

 private:
  double sq_ = 0.0;
  double abs_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace dssm
