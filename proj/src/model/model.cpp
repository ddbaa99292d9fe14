#include "dssm/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dssm {

std::string_view component_name(Component c) {
  switch (c) {
    case Component::Trend: return "trend";
    case Component::Seasonal: return "seasonal";
    case Component::Residual: return "residual";
  }
  return "unknown";
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("model config: ") + name + " must be >= 1");
  };
  positive(M, "M");
  positive(T, "T");
  positive(H, "H");
  positive(D, "D");
  positive(P, "P");
  if (P % 2 != 0) throw std::invalid_argument("model config: P must be even");
  for (Component c : kComponents) {
    const DeltaBand& b = bands[static_cast<std::size_t>(c)];
    if (!(b.min > 0.0) || !(b.min < b.max)) {
      throw std::invalid_argument("model config: " + std::string(component_name(c)) +
                                  " band needs 0 < delta_min < delta_max");
    }
  }
  if (!(eps_norm > 0.0) || !(ln_eps > 0.0)) {
    throw std::invalid_argument("model config: eps values must be positive");
  }
}

namespace {

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor normal(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor param_zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return matmul(x, w) + b; }

Tensor gate_activation(Component c, const Tensor& x) {
  switch (c) {
    case Component::Trend: return tanh(x);
    case Component::Seasonal: return gelu(x);
    case Component::Residual: return relu(x);
  }
  return x;
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("embed.W", embed);
  for (const BranchParams& bp : branches) {
    const std::string p = "branch." + std::string(component_name(bp.component));
    out.emplace_back(p + ".pos_emb", bp.pos_emb);
    if (!bp.asp_w1.defined()) continue;
    out.emplace_back(p + ".asp.W1", bp.asp_w1);
    out.emplace_back(p + ".asp.b1", bp.asp_b1);
    out.emplace_back(p + ".asp.W2", bp.asp_w2);
    out.emplace_back(p + ".asp.b2", bp.asp_b2);
    out.emplace_back(p + ".gate.W1", bp.gate_w1);
    out.emplace_back(p + ".gate.b1", bp.gate_b1);
    out.emplace_back(p + ".gate.W2", bp.gate_w2);
    out.emplace_back(p + ".gate.b2", bp.gate_b2);
    for (auto& kv : bp.s5_fwd.named(p + ".s5_fwd")) out.push_back(std::move(kv));
    for (auto& kv : bp.s5_bwd.named(p + ".s5_bwd")) out.push_back(std::move(kv));
    out.emplace_back(p + ".mix", bp.mix);
  }
  if (linear_w.defined()) {
    out.emplace_back("linear.W", linear_w);
    out.emplace_back("linear.b", linear_b);
  }
  out.emplace_back("gcrm.W_g", gcrm.W_g);
  out.emplace_back("gcrm.alpha", gcrm.alpha);
  out.emplace_back("head.W1", head.w1);
  out.emplace_back("head.b1", head.b1);
  out.emplace_back("head.W2", head.w2);
  out.emplace_back("head.b2", head.b2);
  return out;
}

ModelParams init_params(const ModelConfig& config, std::mt19937_64& rng) {
  config.validate();
  const std::size_t M = config.M, T = config.T, D = config.D, H = config.H;
  const std::size_t Dh = config.asp_width();

  ModelParams p;
  p.embed = uniform({T, D}, fan_in_bound(T), rng);
  for (Component c : kComponents) {
    BranchParams& bp = p.branches[static_cast<std::size_t>(c)];
    bp.component = c;
    bp.pos_emb = normal({M, D}, 0.02, rng);
    if (!config.use_gtssm) continue;
    const DeltaBand band = config.bands[static_cast<std::size_t>(c)];
    bp.asp_w1 = uniform({D, Dh}, fan_in_bound(D), rng);
    bp.asp_b1 = param_zeros({Dh});
    bp.asp_w2 = param_zeros({Dh, 1});
    bp.asp_b2 = param_zeros({1});
    bp.gate_w1 = uniform({D, D}, fan_in_bound(D), rng);
    bp.gate_b1 = param_zeros({D});
    bp.gate_w2 = uniform({D, D}, fan_in_bound(D), rng);
    bp.gate_b2 = param_zeros({D});
    bp.s5_fwd = ssm::init_s5(config.P, D, band.min, band.max, rng);
    bp.s5_bwd = ssm::init_s5(config.P, D, band.min, band.max, rng);
    std::vector<double> mix(2 * D * D, 0.0);
    for (std::size_t i = 0; i < D; ++i) {
      mix[i * D + i] = 0.5;
      mix[(D + i) * D + i] = 0.5;
    }
    bp.mix = Tensor::from({2 * D, D}, std::move(mix), true);
  }
  if (!config.use_gtssm) {
    p.linear_w = uniform({D, D}, fan_in_bound(D), rng);
    p.linear_b = param_zeros({D});
  }
  p.gcrm.W_g = uniform({D, D}, fan_in_bound(D), rng);
  p.gcrm.alpha = Tensor::scalar(0.0, true);
  p.head.w1 = uniform({3 * D, D}, fan_in_bound(3 * D), rng);
  p.head.b1 = param_zeros({D});
  p.head.w2 = param_zeros({D, H});
  p.head.b2 = param_zeros({H});
  return p;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_params(config, rng);
}

std::pair<Tensor, NormStats> instance_normalize(const Tensor& x, double eps) {
  if (x.rank() != 2) throw ShapeError("instance_normalize: expected [T x M], got " + shape_str(x.shape()));
  if (!(eps > 0.0)) throw std::invalid_argument("instance_normalize: eps must be positive");
  const std::size_t T = x.dim(0), M = x.dim(1);
  std::vector<double> mu(M, 0.0), sd(M, 0.0);
  const auto xd = x.data();
  for (std::size_t m = 0; m < M; ++m) {
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) s += xd[t * M + m];
    mu[m] = s / static_cast<double>(T);
    double v = 0.0;
    for (std::size_t t = 0; t < T; ++t) v += (xd[t * M + m] - mu[m]) * (xd[t * M + m] - mu[m]);
    sd[m] = std::sqrt(v / static_cast<double>(T) + eps);
  }
  NormStats stats{Tensor::from({M}, std::move(mu)), Tensor::from({M}, std::move(sd))};
  Tensor xn = (x - stats.mean) / stats.std;
  return {xn, stats};
}

Tensor denormalize(const Tensor& yn, const NormStats& stats) {
  if (yn.rank() != 2 || yn.dim(1) != stats.mean.size()) {
    throw ShapeError("denormalize: forecast " + shape_str(yn.shape()) + " vs stats for " +
                     std::to_string(stats.mean.size()) + " variables");
  }
  return yn * stats.std + stats.mean;
}

Tensor embed(const Tensor& xn, const Tensor& w_e) { return matmul(transpose(xn), w_e); }

Tensor adaptive_step(const Tensor& x_c, const BranchParams& bp) {
  const Tensor pooled = mean(x_c, 0, true);  // [1 x D]
  const Tensor hidden = gelu(linear(pooled, bp.asp_w1, bp.asp_b1));
  const Tensor raw = linear(hidden, bp.asp_w2, bp.asp_b2);  // [1 x 1]
  return reshape(scale(sigmoid(raw), 2.0), {1});
}

Tensor branch_forward(const Tensor& x_embedded, const BranchParams& bp, ssm::ScanAlgo algo,
                      double* delta_scale_out) {
  const Tensor x_c = x_embedded + bp.pos_emb;
  const Tensor delta_scale = adaptive_step(x_c, bp);
  if (delta_scale_out) *delta_scale_out = delta_scale.item();
  const Tensor delta_fwd = delta_scale * exp(bp.s5_fwd.log_delta);
  const Tensor delta_bwd = delta_scale * exp(bp.s5_bwd.log_delta);
  const Tensor s = ssm::s5_bidirectional(bp.s5_fwd, bp.s5_bwd, bp.mix, x_c, delta_fwd, delta_bwd, algo);
  const Tensor hidden = gate_activation(bp.component, linear(x_c, bp.gate_w1, bp.gate_b1));
  const Tensor g = sigmoid(linear(hidden, bp.gate_w2, bp.gate_b2));
  return g * s;
}

Tensor gcrm_summary(const Tensor& h) { return mean(h, 0, false); }

Tensor gcrm_refine(const Tensor& h, const GcrmParams& gp, double ln_eps) {
  if (h.rank() != 2 || gp.W_g.shape() != Shape{h.dim(1), h.dim(1)}) {
    throw ShapeError("gcrm_refine: H " + shape_str(h.shape()) + " vs W_g " +
                     shape_str(gp.W_g.shape()));
  }
  const Tensor g = reshape(gcrm_summary(h), {h.dim(1), 1});
  const Tensor z = reshape(matmul(gp.W_g, g), {1, h.dim(1)});  // z = W_g g
  const Tensor gated = z * reshape(sigmoid(gp.alpha), {1, 1});
  return layer_norm(h + gated, ln_eps);
}

Tensor head_project(const std::array<Tensor, 3>& refined, const HeadParams& head) {
  const Tensor joined = concat({refined[0], refined[1], refined[2]}, 1);  // [M x 3D]
  const Tensor hidden = gelu(linear(joined, head.w1, head.b1));
  return transpose(linear(hidden, head.w2, head.b2));  // [H x M]
}

ForwardResult model_forward(const ModelConfig& config, const ModelParams& params, const Tensor& x) {
  if (x.rank() != 2 || x.dim(0) != config.T || x.dim(1) != config.M) {
    throw ShapeError("model_forward: input " + shape_str(x.shape()) + " does not match T=" +
                     std::to_string(config.T) + ", M=" + std::to_string(config.M));
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw std::domain_error("model_forward: input window contains non-finite values");
  }

  auto [xn, stats] = instance_normalize(x, config.eps_norm);
  ForwardResult out;
  out.embedded = embed(xn, params.embed);

  for (Component c : kComponents) {
    const std::size_t i = static_cast<std::size_t>(c);
    const BranchParams& bp = params.branches[i];
    Tensor h;
    if (config.use_gtssm) {
      h = branch_forward(out.embedded, bp, config.scan, &out.delta_scale[i]);
    } else {
      h = linear(out.embedded + bp.pos_emb, params.linear_w, params.linear_b);
    }
    out.refined[i] = config.use_gcrm ? gcrm_refine(h, params.gcrm, config.ln_eps) : h;
  }

  out.forecast = denormalize(head_project(out.refined, params.head), stats);
  return out;
}

}  // namespace dssm
