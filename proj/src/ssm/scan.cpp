#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "dssm/kernels.hpp"
#include "dssm/ssm.hpp"

namespace dssm::ssm {

ScanElement combine(const ScanElement& earlier, const ScanElement& later) {
  const std::size_t n = earlier.ar.size();
  if (later.ar.size() != n || earlier.br.size() != n || later.br.size() != n) {
    throw ShapeError("combine: scan elements have mismatched lane counts");
  }
  const auto& k = kernels::active();
  ScanElement out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                  std::vector<double>(n)};
  k.cmul(later.ar.data(), later.ai.data(), earlier.ar.data(), earlier.ai.data(), out.ar.data(),
         out.ai.data(), n);
  k.cmul_add(later.ar.data(), later.ai.data(), earlier.br.data(), earlier.bi.data(),
             later.br.data(), later.bi.data(), out.br.data(), out.bi.data(), n);
  return out;
}

namespace {

void scan_sequential_raw(std::size_t steps, std::size_t lanes, const double* ar, const double* ai,
                         const double* br, const double* bi, double* hr, double* hi) {
  const auto& k = kernels::active();
  std::copy_n(br, lanes, hr);
  std::copy_n(bi, lanes, hi);
  for (std::size_t t = 1; t < steps; ++t) {
    const std::size_t o = t * lanes;
    k.cmul_add(ar + o, ai + o, hr + o - lanes, hi + o - lanes, br + o, bi + o, hr + o, hi + o,
               lanes);
  }
}

// Blelloch work-efficient scan. The tree is padded to a power of two with
// identity maps (1, 0) so the combine order is fixed for a given length.
void scan_parallel_raw(std::size_t steps, std::size_t lanes, const double* ar, const double* ai,
                       const double* br, const double* bi, double* hr, double* hi) {
  const auto& k = kernels::active();
  const std::size_t n = std::bit_ceil(steps);
  std::vector<double> xar(n * lanes, 1.0), xai(n * lanes, 0.0);
  std::vector<double> xbr(n * lanes, 0.0), xbi(n * lanes, 0.0);
  std::copy_n(ar, steps * lanes, xar.begin());
  std::copy_n(ai, steps * lanes, xai.begin());
  std::copy_n(br, steps * lanes, xbr.begin());
  std::copy_n(bi, steps * lanes, xbi.begin());

  auto A_r = [&](std::size_t i) { return xar.data() + i * lanes; };
  auto A_i = [&](std::size_t i) { return xai.data() + i * lanes; };
  auto B_r = [&](std::size_t i) { return xbr.data() + i * lanes; };
  auto B_i = [&](std::size_t i) { return xbi.data() + i * lanes; };

  // Up-sweep: x[i] <- x[j] o x[i], j = i - stride.
  for (std::size_t stride = 1; stride < n; stride *= 2) {
    for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
      const std::size_t j = i - stride;
      k.cmul_add(A_r(i), A_i(i), B_r(j), B_i(j), B_r(i), B_i(i), B_r(i), B_i(i), lanes);
      k.cmul(A_r(i), A_i(i), A_r(j), A_i(j), A_r(i), A_i(i), lanes);
    }
  }

  // Down-sweep to an exclusive prefix.
  std::fill_n(A_r(n - 1), lanes, 1.0);
  std::fill_n(A_i(n - 1), lanes, 0.0);
  std::fill_n(B_r(n - 1), lanes, 0.0);
  std::fill_n(B_i(n - 1), lanes, 0.0);
  std::vector<double> tar(lanes), tai(lanes), tbr(lanes), tbi(lanes);
  for (std::size_t stride = n / 2; stride >= 1; stride /= 2) {
    for (std::size_t i = 2 * stride - 1; i < n; i += 2 * stride) {
      const std::size_t j = i - stride;
      std::copy_n(A_r(j), lanes, tar.begin());
      std::copy_n(A_i(j), lanes, tai.begin());
      std::copy_n(B_r(j), lanes, tbr.begin());
      std::copy_n(B_i(j), lanes, tbi.begin());
      std::copy_n(A_r(i), lanes, A_r(j));
      std::copy_n(A_i(i), lanes, A_i(j));
      std::copy_n(B_r(i), lanes, B_r(j));
      std::copy_n(B_i(i), lanes, B_i(j));
      // x[i] <- x[i] o t  (prefix first, then the left subtree total)
      k.cmul_add(tar.data(), tai.data(), B_r(i), B_i(i), tbr.data(), tbi.data(), B_r(i), B_i(i),
                 lanes);
      k.cmul(tar.data(), tai.data(), A_r(i), A_i(i), A_r(i), A_i(i), lanes);
    }
    if (stride == 1) break;
  }

  // Exclusive prefix b-part is h_{t-1}; finish with one step.
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t o = t * lanes;
    k.cmul_add(ar + o, ai + o, B_r(t), B_i(t), br + o, bi + o, hr + o, hi + o, lanes);
  }
}

}  // namespace

void scan_raw(std::size_t steps, std::size_t lanes, const double* ar, const double* ai,
              const double* br, const double* bi, double* hr, double* hi, ScanAlgo algo) {
  if (steps == 0 || lanes == 0) return;
  if (algo == ScanAlgo::Sequential) {
    scan_sequential_raw(steps, lanes, ar, ai, br, bi, hr, hi);
  } else {
    scan_parallel_raw(steps, lanes, ar, ai, br, bi, hr, hi);
  }
}

ComplexPair linear_recurrence(const ComplexPair& a, const ComplexPair& b, ScanAlgo algo) {
  if (a.re.rank() != 1 || b.re.rank() != 2 || b.re.dim(1) != a.re.dim(0)) {
    throw ShapeError("linear_recurrence: multiplier " + shape_str(a.shape()) +
                     " incompatible with inputs " + shape_str(b.shape()));
  }
  const std::size_t steps = b.re.dim(0);
  const std::size_t lanes = a.re.dim(0);
  if (steps == 0) throw ShapeError("linear_recurrence: sequence length must be >= 1");

  std::vector<double> ar(steps * lanes), ai(steps * lanes);
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(a.re.data().data(), lanes, ar.begin() + static_cast<std::ptrdiff_t>(t * lanes));
    std::copy_n(a.im.data().data(), lanes, ai.begin() + static_cast<std::ptrdiff_t>(t * lanes));
  }
  std::vector<double> out(2 * steps * lanes);
  double* hr = out.data();
  double* hi = out.data() + steps * lanes;
  scan_raw(steps, lanes, ar.data(), ai.data(), b.re.data().data(), b.im.data().data(), hr, hi,
           algo);

  auto backward = [steps, lanes, algo](detail::Node& self) {
    detail::Node& p_ar = *self.parents[0];
    detail::Node& p_ai = *self.parents[1];
    detail::Node& p_br = *self.parents[2];
    detail::Node& p_bi = *self.parents[3];
    const std::size_t n = steps * lanes;
    const double* gr = self.grad.data();
    const double* gi = self.grad.data() + n;
    const double* hr = self.data.data();
    const double* hi = self.data.data() + n;

    // Adjoint: lam_t = g_t + conj(a) lam_{t+1}, run forward on reversed time.
    std::vector<double> car(n), cai(n), rgr(n), rgi(n), lr(n), li(n);
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t src = (steps - 1 - t) * lanes;
      for (std::size_t p = 0; p < lanes; ++p) {
        car[t * lanes + p] = p_ar.data[p];
        cai[t * lanes + p] = -p_ai.data[p];
        rgr[t * lanes + p] = gr[src + p];
        rgi[t * lanes + p] = gi[src + p];
      }
    }
    std::vector<double> rlr(n), rli(n);
    scan_raw(steps, lanes, car.data(), cai.data(), rgr.data(), rgi.data(), rlr.data(), rli.data(),
             algo);
    for (std::size_t t = 0; t < steps; ++t) {
      std::copy_n(rlr.data() + (steps - 1 - t) * lanes, lanes, lr.data() + t * lanes);
      std::copy_n(rli.data() + (steps - 1 - t) * lanes, lanes, li.data() + t * lanes);
    }

    detail::accumulate(p_br, lr);
    detail::accumulate(p_bi, li);
    if (p_ar.requires_grad || p_ai.requires_grad) {
      // dL/da = sum_t lam_t conj(h_{t-1})
      std::vector<double> dar(lanes, 0.0), dai(lanes, 0.0);
      for (std::size_t t = 1; t < steps; ++t) {
        const std::size_t o = t * lanes;
        const std::size_t q = o - lanes;
        for (std::size_t p = 0; p < lanes; ++p) {
          dar[p] += lr[o + p] * hr[q + p] + li[o + p] * hi[q + p];
          dai[p] += li[o + p] * hr[q + p] - lr[o + p] * hi[q + p];
        }
      }
      detail::accumulate(p_ar, dar);
      detail::accumulate(p_ai, dai);
    }
  };

  Tensor packed = detail::make_result("linear_recurrence", {2, steps, lanes}, std::move(out),
                                      {a.re, a.im, b.re, b.im}, std::move(backward));
  return {reshape(slice(packed, 0, 0, 1), {steps, lanes}),
          reshape(slice(packed, 0, 1, 2), {steps, lanes})};
}

}  // namespace dssm::ssm
