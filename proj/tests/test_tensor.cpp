#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <doctest.h>

#include "dssm/complex.hpp"
#include "dssm/tensor.hpp"
#include "support.hpp"

using namespace dssm;
using dssm::testing::grad_check;
using dssm::testing::max_abs_diff;
using dssm::testing::random_tensor;
using dssm::testing::uniform_tensor;

TEST_CASE("construction and accessors") {
  const Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.dim(0) == 2);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 6);
  CHECK(Tensor::scalar(4.5).item() == 4.5);
  CHECK(Tensor::zeros({3})[2] == 0.0);
  CHECK(Tensor::full({2, 2}, 7.0)[3] == 7.0);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("broadcasting follows numpy rules") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor row = Tensor::from({3}, {10, 20, 30});
  const Tensor col = Tensor::from({2, 1}, {100, 200});
  const Tensor s = add(a, row);
  CHECK(s.shape() == Shape{2, 3});
  CHECK(s.at(1, 2) == 36);
  const Tensor t = add(a, col);
  CHECK(t.at(1, 0) == 204);
  const Tensor u = mul(col, row);  // [2,1] x [3] -> [2,3]
  CHECK(u.shape() == Shape{2, 3});
  CHECK(u.at(1, 2) == 6000);
  CHECK(broadcast_shapes({4, 1, 3}, {5, 1}, "t") == Shape{4, 5, 3});
  CHECK_THROWS_AS(add(a, Tensor::zeros({2})), ShapeError);
}

TEST_CASE("shape errors name the operation and both shapes") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({4, 5});
  try {
    matmul(a, b);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x5]") != std::string::npos);
  }
}

TEST_CASE("elementwise forward values") {
  const Tensor x = Tensor::from({4}, {-2.0, -0.5, 0.0, 1.5});
  CHECK(relu(x)[0] == 0.0);
  CHECK(relu(x)[3] == 1.5);
  CHECK(sigmoid(x)[2] == 0.5);
  CHECK(tanh(x)[3] == doctest::Approx(std::tanh(1.5)));
  CHECK(gelu(x)[3] == doctest::Approx(1.5 * 0.5 * std::erfc(-1.5 / std::numbers::sqrt2)));
  CHECK(softplus(x)[0] == doctest::Approx(std::log1p(std::exp(-2.0))));
  CHECK(expm1(Tensor::scalar(1e-10)).item() == doctest::Approx(1e-10).epsilon(1e-12));
  CHECK(abs(x)[1] == 0.5);
  CHECK(sigmoid(Tensor::scalar(-800.0)).item() == 0.0);
  CHECK(std::isfinite(sigmoid(Tensor::scalar(800.0)).item()));
}

TEST_CASE("layout and reductions") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor t = transpose(a);
  CHECK(t.shape() == Shape{3, 2});
  CHECK(t.at(2, 1) == 6);
  CHECK(sum(a).item() == 21);
  CHECK(mean(a).item() == 3.5);
  const Tensor s0 = sum(a, 0);
  CHECK(s0.shape() == Shape{3});
  CHECK(s0[1] == 7);
  const Tensor m1 = mean(a, 1, true);
  CHECK(m1.shape() == Shape{2, 1});
  CHECK(m1[1] == 5);
  const Tensor c = concat({a, a}, 1);
  CHECK(c.shape() == Shape{2, 6});
  CHECK(c.at(1, 3) == 4);
  const Tensor sl = slice(a, 1, 1, 3);
  CHECK(sl.shape() == Shape{2, 2});
  CHECK(sl.at(1, 0) == 5);
  const Tensor f = flip(a, 0);
  CHECK(f.at(0, 0) == 4);
  CHECK(reshape(a, {3, 2}).at(2, 0) == 5);
  CHECK(broadcast_to(Tensor::from({3}, {1, 2, 3}), {2, 3}).at(1, 2) == 3);
  CHECK_THROWS_AS(reshape(a, {4}), ShapeError);
  CHECK_THROWS_AS(slice(a, 1, 2, 5), ShapeError);
}

TEST_CASE("layer_norm rows have zero mean and unit population variance") {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({5, 9}, rng, 3.0);
  const Tensor y = layer_norm(x, 1e-14);
  for (std::size_t r = 0; r < 5; ++r) {
    double m = 0.0, v = 0.0;
    for (std::size_t j = 0; j < 9; ++j) m += y.at(r, j);
    m /= 9;
    for (std::size_t j = 0; j < 9; ++j) v += (y.at(r, j) - m) * (y.at(r, j) - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 9 == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradients match central differences for every op") {
  std::mt19937_64 rng(17);
  const double tol = 1e-6;
  const Tensor a = random_tensor({3, 4}, rng, 1.0, true);
  const Tensor b = random_tensor({3, 4}, rng, 1.0, true);
  const Tensor row = random_tensor({4}, rng, 1.0, true);
  const Tensor pos = uniform_tensor({3, 4}, rng, 0.5, 2.0, true);
  const Tensor w = random_tensor({4, 5}, rng, 1.0, true);
  const Tensor weights = random_tensor({3, 4}, rng);

  auto weighted = [&](const Tensor& t) { return sum(t * weights); };

  SUBCASE("add / sub / mul / div with broadcasting") {
    CHECK(grad_check([&] { return weighted(add(a, row)); }, {a, row}) < tol);
    CHECK(grad_check([&] { return weighted(sub(row, a)); }, {a, row}) < tol);
    CHECK(grad_check([&] { return weighted(mul(a, row)); }, {a, row}) < tol);
    CHECK(grad_check([&] { return weighted(div(a, pos)); }, {a, pos}) < tol);
  }
  SUBCASE("unary maps") {
    CHECK(grad_check([&] { return weighted(exp(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(expm1(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(log(pos)); }, {pos}) < tol);
    CHECK(grad_check([&] { return weighted(sin(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(cos(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(sigmoid(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(tanh(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(gelu(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(softplus(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(square(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(sqrt(pos)); }, {pos}) < tol);
    CHECK(grad_check([&] { return weighted(abs(pos)); }, {pos}) < tol);
    CHECK(grad_check([&] { return weighted(relu(pos)); }, {pos}) < tol);
    CHECK(grad_check([&] { return weighted(scale(a, -2.5) + 1.0); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(neg(a)); }, {a}) < tol);
  }
  SUBCASE("select routes gradients by mask") {
    std::vector<bool> mask(12);
    for (std::size_t i = 0; i < 12; ++i) mask[i] = i % 3 == 0;
    CHECK(grad_check([&] { return weighted(select(mask, a, b)); }, {a, b}) < tol);
  }
  SUBCASE("matmul, transpose, reshape") {
    CHECK(grad_check([&] { return sum(square(matmul(a, w))); }, {a, w}) < tol);
    CHECK(grad_check([&] { return weighted(transpose(transpose(a))); }, {a}) < tol);
    CHECK(grad_check([&] { return sum(square(reshape(a, {6, 2}))); }, {a}) < tol);
  }
  SUBCASE("concat, slice, flip, broadcast_to") {
    CHECK(grad_check([&] { return sum(square(concat({a, b}, 0))); }, {a, b}) < tol);
    CHECK(grad_check([&] { return sum(square(concat({a, b}, 1))); }, {a, b}) < tol);
    CHECK(grad_check([&] { return weighted(concat({slice(a, 1, 0, 2), slice(a, 1, 2, 4)}, 1)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(flip(a, 0) * flip(a, 1)); }, {a}) < tol);
    CHECK(grad_check([&] { return weighted(broadcast_to(row, {3, 4})); }, {row}) < tol);
  }
  SUBCASE("reductions") {
    CHECK(grad_check([&] { return square(sum(a)); }, {a}) < tol);
    CHECK(grad_check([&] { return sum(square(sum(a, 0))); }, {a}) < tol);
    CHECK(grad_check([&] { return sum(square(mean(a, 1, true))); }, {a}) < tol);
    CHECK(grad_check([&] { return square(mean(a)); }, {a}) < tol);
  }
  SUBCASE("layer_norm") {
    CHECK(grad_check([&] { return weighted(layer_norm(a, 1e-5)); }, {a}) < tol);
  }
}

TEST_CASE("complex helpers") {
  std::mt19937_64 rng(23);
  const ComplexPair z(random_tensor({5}, rng, 0.7, true), random_tensor({5}, rng, 2.0, true));
  const ComplexPair e = cexp(z);
  for (std::size_t i = 0; i < 5; ++i) {
    const std::complex<double> ref = std::exp(std::complex<double>(z.re[i], z.im[i]));
    CHECK(e.re[i] == doctest::Approx(ref.real()).epsilon(1e-14));
    CHECK(e.im[i] == doctest::Approx(ref.imag()).epsilon(1e-14));
  }
  const ComplexPair em1 = cexpm1(z);
  for (std::size_t i = 0; i < 5; ++i) {
    const std::complex<double> ref = std::exp(std::complex<double>(z.re[i], z.im[i])) - 1.0;
    CHECK(std::abs(em1.re[i] - ref.real()) < 1e-14);
    CHECK(std::abs(em1.im[i] - ref.imag()) < 1e-14);
  }
  // Small arguments keep full relative precision.
  const ComplexPair tiny(Tensor::from({1}, {1e-12}), Tensor::from({1}, {2e-12}));
  const ComplexPair t = cexpm1(tiny);
  CHECK(t.re[0] == doctest::Approx(1e-12).epsilon(1e-9));
  CHECK(t.im[0] == doctest::Approx(2e-12).epsilon(1e-9));

  const ComplexPair w(random_tensor({5}, rng, 1.0, true), random_tensor({5}, rng, 1.0, true));
  const ComplexPair q = cdiv(z, w);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto ref = std::complex<double>(z.re[i], z.im[i]) / std::complex<double>(w.re[i], w.im[i]);
    CHECK(q.re[i] == doctest::Approx(ref.real()).epsilon(1e-13));
    CHECK(q.im[i] == doctest::Approx(ref.imag()).epsilon(1e-13));
  }
  auto loss = [&] {
    const ComplexPair r = cmul(cexpm1(z), cconj(cdiv(w, z)));
    return sum(r.re * 0.3 + r.im * 0.7) + sum(cabs2(cadd(z, w)));
  };
  CHECK(grad_check(loss, {z.re, z.im, w.re, w.im}) < 1e-6);
  CHECK_THROWS_AS(ComplexPair(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
}

TEST_CASE("leaf gradients accumulate until cleared") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  sum(square(x)).backward();
  sum(square(x)).backward();
  CHECK(x.grad()[1] == 8.0);
  x.zero_grad();
  CHECK(x.grad()[1] == 0.0);
  sum(x * 3.0).backward();
  CHECK(x.grad()[0] == 3.0);
}

TEST_CASE("shared subexpressions receive the full gradient") {
  Tensor x = Tensor::from({1}, {3.0}, true);
  const Tensor y = x * x;
  const Tensor z = y * y + y;  // x^4 + x^2
  sum(z).backward();
  CHECK(x.grad()[0] == doctest::Approx(4 * 27 + 6));
  // A second backward through the same graph gives the same increment.
  x.zero_grad();
  sum(z).backward();
  CHECK(x.grad()[0] == doctest::Approx(4 * 27 + 6));
}

TEST_CASE("no-grad scope records nothing") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y;
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    y = sum(square(x));
  }
  CHECK(grad_enabled());
  CHECK_FALSE(y.requires_grad());
  CHECK(y.item() == 5.0);
}

TEST_CASE("backward requires a scalar") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS((x * 2.0).backward(), ShapeError);
}

TEST_CASE("detach copies values without history") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  const Tensor y = (x * 2.0).detach();
  CHECK_FALSE(y.requires_grad());
  CHECK(max_abs_diff(y, Tensor::from({2}, {2.0, 4.0})) == 0.0);
}
