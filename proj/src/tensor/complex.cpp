#include "dssm/complex.hpp"

#include <string>

namespace dssm {

ComplexPair::ComplexPair(Tensor real, Tensor imag) : re(std::move(real)), im(std::move(imag)) {
  if (re.shape() != im.shape()) {
    throw ShapeError("ComplexPair: re " + shape_str(re.shape()) + " and im " +
                     shape_str(im.shape()) + " differ");
  }
}

ComplexPair cadd(const ComplexPair& a, const ComplexPair& b) {
  return {a.re + b.re, a.im + b.im};
}

ComplexPair cmul(const ComplexPair& a, const ComplexPair& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

ComplexPair cmul_real(const ComplexPair& a, const Tensor& r) { return {a.re * r, a.im * r}; }

ComplexPair cconj(const ComplexPair& a) { return {a.re, neg(a.im)}; }

ComplexPair cexp(const ComplexPair& z) {
  const Tensor mag = exp(z.re);
  return {mag * cos(z.im), mag * sin(z.im)};
}

ComplexPair cexpm1(const ComplexPair& z) {
  // e^{x+iy} - 1 = (expm1(x) cos y - 2 sin^2(y/2)) + i e^x sin y
  const Tensor half_sin = sin(scale(z.im, 0.5));
  const Tensor re = expm1(z.re) * cos(z.im) - scale(square(half_sin), 2.0);
  const Tensor im = exp(z.re) * sin(z.im);
  return {re, im};
}

Tensor cabs2(const ComplexPair& z) { return square(z.re) + square(z.im); }

ComplexPair cdiv(const ComplexPair& a, const ComplexPair& b) {
  const Tensor denom = cabs2(b);
  const Tensor re = (a.re * b.re + a.im * b.im) / denom;
  const Tensor im = (a.im * b.re - a.re * b.im) / denom;
  return {re, im};
}

}  // namespace dssm
