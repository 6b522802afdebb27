#pragma once

// Inner loops shared by the spectral operators. Every kernel has a scalar
// reference version; wider variants are picked once at startup from the
// CPU feature set and can be overridden with ALPHADYN_SIMD=scalar|avx2.
//
// Vector fields are passed split by component (x, y, z arrays of length n).
// Output arrays must not alias inputs unless stated.

#include <complex>
#include <cstddef>
#include <string_view>

namespace alphadyn::simd {

using cplx = std::complex<double>;

struct KernelTable {
  // o += u x h for a constant complex 3-vector u
  void (*cross_const_acc)(const cplx* u, const cplx* hx, const cplx* hy, const cplx* hz,
                          cplx* ox, cplx* oy, cplx* oz, std::size_t n);
  // o = a x b pointwise
  void (*cross_pointwise)(const cplx* ax, const cplx* ay, const cplx* az, const cplx* bx,
                          const cplx* by, const cplx* bz, cplx* ox, cplx* oy, cplx* oz,
                          std::size_t n);
  // o = i q x h with real wave vectors q
  void (*shifted_curl)(const double* qx, const double* qy, const double* qz, const cplx* hx,
                       const cplx* hy, const cplx* hz, cplx* ox, cplx* oy, cplx* oz,
                       std::size_t n);
  // o = d * h
  void (*mul_real)(const double* d, const cplx* h, cplx* o, std::size_t n);
  // o += d * h
  void (*mul_real_acc)(const double* d, const cplx* h, cplx* o, std::size_t n);
  // y += a x
  void (*axpy)(cplx a, const cplx* x, cplx* y, std::size_t n);
  // sum |x|^2
  double (*norm2)(const cplx* x, std::size_t n);
  // sum conj(x) y
  cplx (*dot)(const cplx* x, const cplx* y, std::size_t n);
};

enum class Level { scalar, avx2 };

std::string_view to_string(Level level);

// best level supported by this binary and CPU
Level detected_level();
bool level_available(Level level);

const KernelTable& table(Level level);
const KernelTable& active();
Level active_level();

// test hook; throws if the level is unavailable
void set_active_level(Level level);

}  // namespace alphadyn::simd
