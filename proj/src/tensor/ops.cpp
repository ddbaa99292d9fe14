#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "dssm/kernels.hpp"
#include "dssm/tensor.hpp"

namespace dssm {

using detail::Node;
using detail::accumulate;
using detail::make_result;

namespace {

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

struct Extents {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

Extents split_at(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     shape_str(shape));
  }
  Extents e;
  for (std::size_t d = 0; d < axis; ++d) e.outer *= shape[d];
  e.n = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) e.inner *= shape[d];
  return e;
}

// Flat index into `from` for every element of `to` under broadcasting.
std::vector<std::uint32_t> broadcast_index(const Shape& from, const Shape& to) {
  const std::size_t r = to.size();
  const std::size_t off = r - from.size();
  const std::size_t total_to = numel(to);
  const std::size_t total_from = numel(from);
  if (total_from == 1) return std::vector<std::uint32_t>(total_to, 0);
  if (std::equal(from.begin(), from.end(), to.begin() + static_cast<std::ptrdiff_t>(off))) {
    std::vector<std::uint32_t> index(total_to);
    for (std::size_t i = 0; i < total_to; ++i) index[i] = static_cast<std::uint32_t>(i % total_from);
    return index;
  }
  std::vector<std::size_t> stride(r, 0);
  std::size_t s = 1;
  for (std::size_t d = r; d-- > off;) {
    const std::size_t extent = from[d - off];
    stride[d] = extent == 1 ? 0 : s;
    s *= extent;
  }
  const std::size_t total = numel(to);
  std::vector<std::uint32_t> index(total);
  std::vector<std::size_t> counter(r, 0);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < total; ++i) {
    index[i] = static_cast<std::uint32_t>(flat);
    for (std::size_t d = r; d-- > 0;) {
      ++counter[d];
      flat += stride[d];
      if (counter[d] < to[d]) break;
      flat -= stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return index;
}

struct BinaryPlan {
  Shape out;
  bool same = true;
  std::vector<std::uint32_t> ia, ib;
};

BinaryPlan plan_binary(const Tensor& a, const Tensor& b, const char* op) {
  BinaryPlan plan;
  if (a.shape() == b.shape()) {
    plan.out = a.shape();
    return plan;
  }
  plan.out = broadcast_shapes(a.shape(), b.shape(), op);
  plan.same = false;
  plan.ia = broadcast_index(a.shape(), plan.out);
  plan.ib = broadcast_index(b.shape(), plan.out);
  return plan;
}

enum class BinKind { Add, Sub, Mul, Div };

template <BinKind K>
double apply(double x, double y) {
  if constexpr (K == BinKind::Add) return x + y;
  if constexpr (K == BinKind::Sub) return x - y;
  if constexpr (K == BinKind::Mul) return x * y;
  return x / y;
}

template <BinKind K>
Tensor binary(const Tensor& a, const Tensor& b, const char* op) {
  BinaryPlan plan = plan_binary(a, b, op);
  Shape out_shape = plan.out;
  const std::size_t n = numel(out_shape);
  std::vector<double> out(n);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  const auto& k = kernels::active();
  if (plan.same) {
    if constexpr (K == BinKind::Add) k.add(ad, bd, out.data(), n);
    else if constexpr (K == BinKind::Sub) k.sub(ad, bd, out.data(), n);
    else if constexpr (K == BinKind::Mul) k.mul(ad, bd, out.data(), n);
    else for (std::size_t i = 0; i < n; ++i) out[i] = ad[i] / bd[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = apply<K>(ad[plan.ia[i]], bd[plan.ib[i]]);
  }

  auto backward = [plan = std::move(plan)](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const std::vector<double>& g = self.grad;
    const std::size_t n = g.size();
    auto ia = [&](std::size_t i) { return plan.same ? i : plan.ia[i]; };
    auto ib = [&](std::size_t i) { return plan.same ? i : plan.ib[i]; };
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        if constexpr (K == BinKind::Add || K == BinKind::Sub) ga[ia(i)] += g[i];
        else if constexpr (K == BinKind::Mul) ga[ia(i)] += g[i] * pb.data[ib(i)];
        else ga[ia(i)] += g[i] / pb.data[ib(i)];
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        if constexpr (K == BinKind::Add) gb[ib(i)] += g[i];
        else if constexpr (K == BinKind::Sub) gb[ib(i)] -= g[i];
        else if constexpr (K == BinKind::Mul) gb[ib(i)] += g[i] * pa.data[ia(i)];
        else {
          const double y = pb.data[ib(i)];
          gb[ib(i)] -= g[i] * pa.data[ia(i)] / (y * y);
        }
      }
    }
  };
  return make_result(op, std::move(out_shape), std::move(out), {a, b}, std::move(backward));
}

// f maps x -> y; df maps (x, y) -> dy/dx.
template <class F, class DF>
Tensor unary(const Tensor& x, const char* op, F f, DF df) {
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = f(xd[i]);
  auto backward = [df](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& gp = p.ensure_grad();
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i] * df(p.data[i], self.data[i]);
  };
  return make_result(op, x.shape(), std::move(out), {x}, std::move(backward));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Shape broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t d = 0; d < r; ++d) {
    const std::size_t ea = d + a.size() >= r ? a[d + a.size() - r] : 1;
    const std::size_t eb = d + b.size() >= r ? b[d + b.size() - r] : 1;
    if (ea != eb && ea != 1 && eb != 1) shape_fail(op, a, b);
    out[d] = std::max(ea, eb);
    if (ea == 0 || eb == 0) out[d] = 0;
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return binary<BinKind::Add>(a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary<BinKind::Sub>(a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary<BinKind::Mul>(a, b, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary<BinKind::Div>(a, b, "div"); }

Tensor neg(const Tensor& x) {
  return unary(x, "neg", [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size());
  kernels::active().scale(factor, x.data().data(), out.data(), out.size());
  auto backward = [factor](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& gp = p.ensure_grad();
    kernels::active().axpy(factor, self.grad.data(), gp.data(), gp.size());
  };
  return make_result("scale", x.shape(), std::move(out), {x}, std::move(backward));
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(x, "add_scalar", [value](double v) { return v + value; },
               [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& x) {
  return unary(x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor expm1(const Tensor& x) {
  return unary(x, "expm1", [](double v) { return std::expm1(v); },
               [](double, double y) { return y + 1.0; });
}

Tensor log(const Tensor& x) {
  return unary(x, "log", [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Tensor sin(const Tensor& x) {
  return unary(x, "sin", [](double v) { return std::sin(v); },
               [](double v, double) { return std::cos(v); });
}

Tensor cos(const Tensor& x) {
  return unary(x, "cos", [](double v) { return std::cos(v); },
               [](double v, double) { return -std::sin(v); });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, "tanh", [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  return unary(x, "gelu", [](double v) { return v * normal_cdf(v); },
               [](double v, double) { return normal_cdf(v) + v * normal_pdf(v); });
}

Tensor softplus(const Tensor& x) {
  return unary(x, "softplus",
               [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
               [](double v, double) { return stable_sigmoid(v); });
}

Tensor square(const Tensor& x) {
  return unary(x, "square", [](double v) { return v * v; },
               [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(const Tensor& x) {
  return unary(x, "sqrt", [](double v) { return std::sqrt(v); },
               [](double, double y) { return 0.5 / y; });
}

Tensor abs(const Tensor& x) {
  return unary(x, "abs", [](double v) { return std::abs(v); },
               [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor select(const std::vector<bool>& mask, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("select", a.shape(), b.shape());
  if (mask.size() != a.size()) {
    throw ShapeError("select: mask has " + std::to_string(mask.size()) + " entries for shape " +
                     shape_str(a.shape()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? a[i] : b[i];
  auto backward = [mask](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) if (mask[i]) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) if (!mask[i]) g[i] += self.grad[i];
    }
  };
  return make_result("select", a.shape(), std::move(out), {a, b}, std::move(backward));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_fail("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::active().gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data(), false);
  auto backward = [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto& kt = kernels::active();
    if (pa.requires_grad) {
      // dA[m x k] = dC[m x n] * B^T
      kt.gemm_nt(m, k, n, self.grad.data(), pb.data.data(), pa.ensure_grad().data(), true);
    }
    if (pb.requires_grad) {
      // dB[k x n] = A^T * dC
      kt.gemm_tn(k, n, m, pa.data.data(), self.grad.data(), pb.ensure_grad().data(), true);
    }
  };
  return make_result("matmul", {m, n}, std::move(out), {a, b}, std::move(backward));
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose: expected a 2-D tensor, got " + shape_str(x.shape()));
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<double> out(r * c);
  const auto xd = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xd[i * c + j];
  auto backward = [r, c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  };
  return make_result("transpose", {c, r}, std::move(out), {x}, std::move(backward));
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) shape_fail("reshape", x.shape(), shape);
  auto backward = [](Node& self) { accumulate(*self.parents[0], self.grad); };
  return make_result("reshape", std::move(shape), x.to_vector(), {x}, std::move(backward));
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  if (broadcast_shapes(x.shape(), shape, "broadcast_to") != shape) {
    shape_fail("broadcast_to", x.shape(), shape);
  }
  auto index = broadcast_index(x.shape(), shape);
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[index[i]];
  auto backward = [index = std::move(index)](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < index.size(); ++i) g[index[i]] += self.grad[i];
  };
  return make_result("broadcast_to", shape, std::move(out), {x}, std::move(backward));
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  Shape out_shape = first;
  split_at(first, axis, "concat");
  std::vector<std::size_t> widths;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) shape_fail("concat", first, probe);
    probe[axis] = first[axis];
    if (probe != first) shape_fail("concat", first, p.shape());
    widths.push_back(p.dim(axis));
    out_shape[axis] += p.dim(axis);
  }
  const Extents e = split_at(out_shape, axis, "concat");
  std::vector<double> out(numel(out_shape));
  std::size_t col = 0;
  for (std::size_t t = 0; t < parts.size(); ++t) {
    const auto src = parts[t].data();
    const std::size_t w = widths[t] * e.inner;
    for (std::size_t o = 0; o < e.outer; ++o) {
      std::copy_n(src.data() + o * w, w, out.data() + o * e.n * e.inner + col * e.inner);
    }
    col += widths[t];
  }
  auto backward = [widths, e](Node& self) {
    std::size_t col = 0;
    for (std::size_t t = 0; t < widths.size(); ++t) {
      Node& p = *self.parents[t];
      const std::size_t w = widths[t] * e.inner;
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t o = 0; o < e.outer; ++o) {
          const double* src = self.grad.data() + o * e.n * e.inner + col * e.inner;
          for (std::size_t i = 0; i < w; ++i) g[o * w + i] += src[i];
        }
      }
      col += widths[t];
    }
  };
  return make_result("concat", out_shape, std::move(out), parts, std::move(backward));
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Extents e = split_at(x.shape(), axis, "slice");
  if (begin > end || end > e.n) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for axis " + std::to_string(axis) + " of " +
                     shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t w = (end - begin) * e.inner;
  std::vector<double> out(e.outer * w);
  const auto xd = x.data();
  for (std::size_t o = 0; o < e.outer; ++o) {
    std::copy_n(xd.data() + o * e.n * e.inner + begin * e.inner, w, out.data() + o * w);
  }
  auto backward = [e, begin, w](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t o = 0; o < e.outer; ++o) {
      double* dst = g.data() + o * e.n * e.inner + begin * e.inner;
      for (std::size_t i = 0; i < w; ++i) dst[i] += self.grad[o * w + i];
    }
  };
  return make_result("slice", out_shape, std::move(out), {x}, std::move(backward));
}

Tensor flip(const Tensor& x, std::size_t axis) {
  const Extents e = split_at(x.shape(), axis, "flip");
  auto mirror = [e](std::size_t flat) {
    const std::size_t o = flat / (e.n * e.inner);
    const std::size_t rem = flat % (e.n * e.inner);
    const std::size_t j = rem / e.inner;
    const std::size_t i = rem % e.inner;
    return o * e.n * e.inner + (e.n - 1 - j) * e.inner + i;
  };
  std::vector<double> out(x.size());
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = x[mirror(f)];
  auto backward = [mirror](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t f = 0; f < g.size(); ++f) g[mirror(f)] += self.grad[f];
  };
  return make_result("flip", x.shape(), std::move(out), {x}, std::move(backward));
}

Tensor sum(const Tensor& x) {
  const double total = kernels::active().sum(x.data().data(), x.size());
  auto backward = [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    const double s = self.grad[0];
    for (double& v : g) v += s;
  };
  return make_result("sum", {}, {total}, {x}, std::move(backward));
}

Tensor sum(const Tensor& x, std::size_t axis, bool keepdim) {
  const Extents e = split_at(x.shape(), axis, "sum");
  Shape out_shape = x.shape();
  if (keepdim) out_shape[axis] = 1;
  else out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(e.outer * e.inner, 0.0);
  const auto xd = x.data();
  for (std::size_t o = 0; o < e.outer; ++o)
    for (std::size_t j = 0; j < e.n; ++j)
      for (std::size_t i = 0; i < e.inner; ++i) out[o * e.inner + i] += xd[(o * e.n + j) * e.inner + i];
  auto backward = [e](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t o = 0; o < e.outer; ++o)
      for (std::size_t j = 0; j < e.n; ++j)
        for (std::size_t i = 0; i < e.inner; ++i) g[(o * e.n + j) * e.inner + i] += self.grad[o * e.inner + i];
  };
  return make_result("sum_axis", out_shape, std::move(out), {x}, std::move(backward));
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean(const Tensor& x, std::size_t axis, bool keepdim) {
  const std::size_t n = split_at(x.shape(), axis, "mean").n;
  if (n == 0) throw ShapeError("mean: empty axis in " + shape_str(x.shape()));
  return scale(sum(x, axis, keepdim), 1.0 / static_cast<double>(n));
}

Tensor layer_norm(const Tensor& x, double eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: expected at least 1-D input");
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const std::size_t d = x.shape().back();
  if (d == 0) throw ShapeError("layer_norm: empty feature axis in " + shape_str(x.shape()));
  const std::size_t rows = x.size() / d;
  std::vector<double> out(x.size());
  std::vector<double> inv_std(rows);
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = (row[j] - mu) * inv_std[r];
  }
  auto backward = [d, rows, inv_std = std::move(inv_std)](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dy = self.grad.data() + r * d;
      const double* y = self.data.data() + r * d;
      double mean_dy = 0.0, mean_dy_y = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        mean_dy += dy[j];
        mean_dy_y += dy[j] * y[j];
      }
      mean_dy *= inv_d;
      mean_dy_y *= inv_d;
      for (std::size_t j = 0; j < d; ++j) {
        g[r * d + j] += inv_std[r] * (dy[j] - mean_dy - y[j] * mean_dy_y);
      }
    }
  };
  return make_result("layer_norm", x.shape(), std::move(out), {x}, std::move(backward));
}

}  // namespace dssm
