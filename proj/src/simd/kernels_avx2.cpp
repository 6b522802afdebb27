#include <immintrin.h>

#include "kernels.hpp"

namespace alphadyn::simd::detail {
namespace {

// two complex doubles per register: [re0, im0, re1, im1]

inline __m256d load(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d br = _mm256_movedup_pd(b);
  const __m256d bi = _mm256_permute_pd(b, 0xF);
  const __m256d as = _mm256_permute_pd(a, 0x5);
  return _mm256_fmaddsub_pd(a, br, _mm256_mul_pd(as, bi));
}

// h * u with u broadcast as (ur, ui)
inline __m256d cmul_const(__m256d h, __m256d ur, __m256d ui) {
  return _mm256_fmaddsub_pd(h, ur, _mm256_mul_pd(_mm256_permute_pd(h, 0x5), ui));
}

inline __m256d dup_real(const double* d) {
  const __m256d t = _mm256_castpd128_pd256(_mm_loadu_pd(d));
  return _mm256_permute4x64_pd(t, 0x50);
}

inline __m256d times_i(__m256d x) {
  const __m256d sign = _mm256_set_pd(0.0, -0.0, 0.0, -0.0);
  return _mm256_xor_pd(_mm256_permute_pd(x, 0x5), sign);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void cross_const_acc(const cplx* u, const cplx* hx, const cplx* hy, const cplx* hz, cplx* ox,
                     cplx* oy, cplx* oz, std::size_t n) {
  const __m256d uxr = _mm256_set1_pd(u[0].real()), uxi = _mm256_set1_pd(u[0].imag());
  const __m256d uyr = _mm256_set1_pd(u[1].real()), uyi = _mm256_set1_pd(u[1].imag());
  const __m256d uzr = _mm256_set1_pd(u[2].real()), uzi = _mm256_set1_pd(u[2].imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d x = load(hx + i), y = load(hy + i), z = load(hz + i);
    const __m256d cx = _mm256_sub_pd(cmul_const(z, uyr, uyi), cmul_const(y, uzr, uzi));
    const __m256d cy = _mm256_sub_pd(cmul_const(x, uzr, uzi), cmul_const(z, uxr, uxi));
    const __m256d cz = _mm256_sub_pd(cmul_const(y, uxr, uxi), cmul_const(x, uyr, uyi));
    store(ox + i, _mm256_add_pd(load(ox + i), cx));
    store(oy + i, _mm256_add_pd(load(oy + i), cy));
    store(oz + i, _mm256_add_pd(load(oz + i), cz));
  }
  if (i < n) scalar_table.cross_const_acc(u, hx + i, hy + i, hz + i, ox + i, oy + i, oz + i, n - i);
}

void cross_pointwise(const cplx* ax, const cplx* ay, const cplx* az, const cplx* bx,
                     const cplx* by, const cplx* bz, cplx* ox, cplx* oy, cplx* oz,
                     std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d a0 = load(ax + i), a1 = load(ay + i), a2 = load(az + i);
    const __m256d b0 = load(bx + i), b1 = load(by + i), b2 = load(bz + i);
    store(ox + i, _mm256_sub_pd(cmul(a1, b2), cmul(a2, b1)));
    store(oy + i, _mm256_sub_pd(cmul(a2, b0), cmul(a0, b2)));
    store(oz + i, _mm256_sub_pd(cmul(a0, b1), cmul(a1, b0)));
  }
  if (i < n)
    scalar_table.cross_pointwise(ax + i, ay + i, az + i, bx + i, by + i, bz + i, ox + i, oy + i,
                                 oz + i, n - i);
}

void shifted_curl(const double* qx, const double* qy, const double* qz, const cplx* hx,
                  const cplx* hy, const cplx* hz, cplx* ox, cplx* oy, cplx* oz,
                  std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d kx = dup_real(qx + i), ky = dup_real(qy + i), kz = dup_real(qz + i);
    const __m256d x = load(hx + i), y = load(hy + i), z = load(hz + i);
    const __m256d tx = _mm256_fmsub_pd(ky, z, _mm256_mul_pd(kz, y));
    const __m256d ty = _mm256_fmsub_pd(kz, x, _mm256_mul_pd(kx, z));
    const __m256d tz = _mm256_fmsub_pd(kx, y, _mm256_mul_pd(ky, x));
    store(ox + i, times_i(tx));
    store(oy + i, times_i(ty));
    store(oz + i, times_i(tz));
  }
  if (i < n)
    scalar_table.shifted_curl(qx + i, qy + i, qz + i, hx + i, hy + i, hz + i, ox + i, oy + i,
                              oz + i, n - i);
}

void mul_real(const double* d, const cplx* h, cplx* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(o + i, _mm256_mul_pd(dup_real(d + i), load(h + i)));
  if (i < n) scalar_table.mul_real(d + i, h + i, o + i, n - i);
}

void mul_real_acc(const double* d, const cplx* h, cplx* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(o + i, _mm256_fmadd_pd(dup_real(d + i), load(h + i), load(o + i)));
  if (i < n) scalar_table.mul_real_acc(d + i, h + i, o + i, n - i);
}

void axpy(cplx a, const cplx* x, cplx* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(a.real()), ai = _mm256_set1_pd(a.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(y + i, _mm256_add_pd(load(y + i), cmul_const(load(x + i), ar, ai)));
  if (i < n) scalar_table.axpy(a, x + i, y + i, n - i);
}

double norm2(const cplx* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v0 = load(x + i), v1 = load(x + i + 2);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  if (i < n) s += scalar_table.norm2(x + i, n - i);
  return s;
}

cplx dot(const cplx* x, const cplx* y, std::size_t n) {
  __m256d re = _mm256_setzero_pd(), im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d a = load(x + i), b = load(y + i);
    re = _mm256_fmadd_pd(a, b, re);
    im = _mm256_fmadd_pd(a, _mm256_permute_pd(b, 0x5), im);
  }
  // im lanes hold [xr*yi, xi*yr, ...]
  alignas(32) double t[4];
  _mm256_store_pd(t, im);
  cplx s(hsum(re), (t[0] - t[1]) + (t[2] - t[3]));
  if (i < n) s += scalar_table.dot(x + i, y + i, n - i);
  return s;
}

}  // namespace

const KernelTable avx2_table = {
    cross_const_acc, cross_pointwise, shifted_curl, mul_real, mul_real_acc, axpy, norm2, dot,
};

}  // namespace alphadyn::simd::detail
