#pragma once

// DecompSSM forward pass.
//
//   X [T x M] --instance norm--> Xn --embed--> X' [M x D]
//   for c in {trend, seasonal, residual}:
//     X_c  = X' + pos_emb_c
//     H_c  = gate_c(X_c) .* BiS5_c(X_c; delta scaled by ASP_c(X_c))   (scan over variates)
//     H'_c = LayerNorm(H_c + sigmoid(alpha) * repeat(W_g mean_rows(H_c)))
//   Yn = FFN(concat(H'_tr, H'_se, H'_re))^T ;  Y = denormalize(Yn)

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dssm/ssm.hpp"
#include "dssm/tensor.hpp"

namespace dssm {

enum class Component : std::size_t { Trend = 0, Seasonal = 1, Residual = 2 };
inline constexpr std::array<Component, 3> kComponents{Component::Trend, Component::Seasonal,
                                                      Component::Residual};
std::string_view component_name(Component c);

struct DeltaBand {
  double min;
  double max;
};

struct ModelConfig {
  std::size_t M = 1;    // variables
  std::size_t T = 96;   // look-back
  std::size_t H = 96;   // horizon
  std::size_t D = 128;  // embedding width
  std::size_t P = 16;   // SSM state dim
  std::size_t asp_hidden = 0;  // 0 selects D / 2
  // Log-uniform timescale bands: wide for trend, narrower for seasonal and residual.
  std::array<DeltaBand, 3> bands{{{1e-4, 1e-1}, {1e-3, 1e-1}, {1e-2, 1e-1}}};
  double eps_norm = 1e-5;
  double ln_eps = 1e-5;
  bool use_gcrm = true;
  // false replaces the three GT-SSM branches by one shared linear layer.
  bool use_gtssm = true;
  ssm::ScanAlgo scan = ssm::ScanAlgo::Parallel;

  std::size_t asp_width() const { return asp_hidden ? asp_hidden : std::max<std::size_t>(1, D / 2); }
  void validate() const;
};

struct NormStats {
  Tensor mean;  // [M]
  Tensor std;   // [M], sqrt(var + eps)
};

struct BranchParams {
  Component component = Component::Trend;
  Tensor pos_emb;  // [M x D]
  Tensor asp_w1, asp_b1, asp_w2, asp_b2;      // D -> Dh -> 1
  Tensor gate_w1, gate_b1, gate_w2, gate_b2;  // D -> D -> D
  ssm::SsmParams s5_fwd;
  ssm::SsmParams s5_bwd;
  Tensor mix;  // [2D x D]
};

struct GcrmParams {
  Tensor W_g;    // [D x D]
  Tensor alpha;  // scalar
};

struct HeadParams {
  Tensor w1, b1;  // 3D -> D
  Tensor w2, b2;  // D -> H
};

struct ModelParams {
  Tensor embed;  // [T x D]
  std::array<BranchParams, 3> branches;
  Tensor linear_w, linear_b;  // only when use_gtssm is false
  GcrmParams gcrm;
  HeadParams head;

  // Every trainable tensor with a stable name, in declaration order.
  std::vector<std::pair<std::string, Tensor>> named() const;
};

ModelParams init_params(const ModelConfig& config, std::mt19937_64& rng);
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Per-variable standardization over the window, population variance.
std::pair<Tensor, NormStats> instance_normalize(const Tensor& x, double eps);
Tensor denormalize(const Tensor& yn, const NormStats& stats);

// X' = Xn^T W_e.
Tensor embed(const Tensor& xn, const Tensor& w_e);

// Scalar timescale multiplier 2 * sigmoid(FFN(mean over variables of X_c)).
Tensor adaptive_step(const Tensor& x_c, const BranchParams& bp);

// Sigmoid-gated bidirectional S5 over the variate axis.
Tensor branch_forward(const Tensor& x_embedded, const BranchParams& bp,
                      ssm::ScanAlgo algo = ssm::ScanAlgo::Parallel,
                      double* delta_scale_out = nullptr);

// Global summary over variables fed back as a gated residual, then LayerNorm.
Tensor gcrm_summary(const Tensor& h);  // column mean, [D]
Tensor gcrm_refine(const Tensor& h, const GcrmParams& gp, double ln_eps = 1e-5);

Tensor head_project(const std::array<Tensor, 3>& refined, const HeadParams& head);

struct ForwardResult {
  Tensor forecast;                // [H x M], data scale
  Tensor embedded;                // X' [M x D]
  std::array<Tensor, 3> refined;  // H'_c [M x D]
  std::array<double, 3> delta_scale{1.0, 1.0, 1.0};
};

ForwardResult model_forward(const ModelConfig& config, const ModelParams& params, const Tensor& x);

}  // namespace dssm
