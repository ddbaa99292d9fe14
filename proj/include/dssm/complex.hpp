#pragma once

// Complex arithmetic on (re, im) tensor pairs, composed from real ops so the
// autodiff core never sees a complex number.

#include "dssm/tensor.hpp"

namespace dssm {

struct ComplexPair {
  Tensor re;
  Tensor im;

  ComplexPair() = default;
  ComplexPair(Tensor real, Tensor imag);

  const Shape& shape() const { return re.shape(); }
};

ComplexPair cadd(const ComplexPair& a, const ComplexPair& b);
ComplexPair cmul(const ComplexPair& a, const ComplexPair& b);
// Complex times real (broadcasting).
ComplexPair cmul_real(const ComplexPair& a, const Tensor& r);
ComplexPair cconj(const ComplexPair& a);
ComplexPair cexp(const ComplexPair& z);
// exp(z) - 1 without cancellation for small |z|.
ComplexPair cexpm1(const ComplexPair& z);
// a / b. Entries of b with |b|^2 == 0 produce a defined but meaningless value;
// callers mask them out.
ComplexPair cdiv(const ComplexPair& a, const ComplexPair& b);
Tensor cabs2(const ComplexPair& z);

}  // namespace dssm
