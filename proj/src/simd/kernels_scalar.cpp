#include "kernels.hpp"

namespace alphadyn::simd::detail {
namespace {

// plain re/im arithmetic; std::complex operator* goes through the
// NaN-recovering libcall without -ffast-math
struct C {
  double re, im;
};

inline C ld(const cplx* p) { return {p->real(), p->imag()}; }
inline void st(cplx* p, C v) { *p = cplx(v.re, v.im); }
inline C mul(C a, C b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline C sub(C a, C b) { return {a.re - b.re, a.im - b.im}; }
inline C add(C a, C b) { return {a.re + b.re, a.im + b.im}; }

void cross_const_acc(const cplx* u, const cplx* hx, const cplx* hy, const cplx* hz, cplx* ox,
                     cplx* oy, cplx* oz, std::size_t n) {
  const C ux = ld(u), uy = ld(u + 1), uz = ld(u + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const C x = ld(hx + i), y = ld(hy + i), z = ld(hz + i);
    st(ox + i, add(ld(ox + i), sub(mul(uy, z), mul(uz, y))));
    st(oy + i, add(ld(oy + i), sub(mul(uz, x), mul(ux, z))));
    st(oz + i, add(ld(oz + i), sub(mul(ux, y), mul(uy, x))));
  }
}

void cross_pointwise(const cplx* ax, const cplx* ay, const cplx* az, const cplx* bx,
                     const cplx* by, const cplx* bz, cplx* ox, cplx* oy, cplx* oz,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const C a0 = ld(ax + i), a1 = ld(ay + i), a2 = ld(az + i);
    const C b0 = ld(bx + i), b1 = ld(by + i), b2 = ld(bz + i);
    st(ox + i, sub(mul(a1, b2), mul(a2, b1)));
    st(oy + i, sub(mul(a2, b0), mul(a0, b2)));
    st(oz + i, sub(mul(a0, b1), mul(a1, b0)));
  }
}

void shifted_curl(const double* qx, const double* qy, const double* qz, const cplx* hx,
                  const cplx* hy, const cplx* hz, cplx* ox, cplx* oy, cplx* oz,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const C x = ld(hx + i), y = ld(hy + i), z = ld(hz + i);
    const C tx{qy[i] * z.re - qz[i] * y.re, qy[i] * z.im - qz[i] * y.im};
    const C ty{qz[i] * x.re - qx[i] * z.re, qz[i] * x.im - qx[i] * z.im};
    const C tz{qx[i] * y.re - qy[i] * x.re, qx[i] * y.im - qy[i] * x.im};
    st(ox + i, C{-tx.im, tx.re});
    st(oy + i, C{-ty.im, ty.re});
    st(oz + i, C{-tz.im, tz.re});
  }
}

void mul_real(const double* d, const cplx* h, cplx* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) st(o + i, C{d[i] * h[i].real(), d[i] * h[i].imag()});
}

void mul_real_acc(const double* d, const cplx* h, cplx* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    st(o + i, C{o[i].real() + d[i] * h[i].real(), o[i].imag() + d[i] * h[i].imag()});
}

void axpy(cplx a, const cplx* x, cplx* y, std::size_t n) {
  const C ac = {a.real(), a.imag()};
  for (std::size_t i = 0; i < n; ++i) st(y + i, add(ld(y + i), mul(ac, ld(x + i))));
}

double norm2(const cplx* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

cplx dot(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

}  // namespace

const KernelTable scalar_table = {
    cross_const_acc, cross_pointwise, shifted_curl, mul_real, mul_real_acc, axpy, norm2, dot,
};

}  // namespace alphadyn::simd::detail
