#pragma once

#include <complex>
#include <cstddef>

#include "alphadyn/spectral_field.hpp"

namespace alphadyn {

// smallest n' >= n of the form 2^a 3^b 5^c
int fft_size_at_least(int n);

// Three complex M^3 buffers with forward/backward 3D transforms. Owns its
// plans and memory; not shareable between threads.
class Grid3 {
 public:
  explicit Grid3(int M);
  ~Grid3();
  Grid3(const Grid3&) = delete;
  Grid3& operator=(const Grid3&) = delete;

  int M() const { return M_; }
  std::size_t points() const { return n_; }
  cplx* comp(int c) { return buf_[c]; }
  const cplx* comp(int c) const { return buf_[c]; }

  // scatter coefficients (zero elsewhere); requires M >= 2N+1
  void load(const SpectralField& f);
  // coefficient sum -> point values
  void to_physical();
  // point values -> coefficients (normalized)
  void to_spectral();
  // gather modes |k_i| <= out.N() into out (other fields of out kept)
  void store(SpectralField& out) const;

 private:
  std::size_t wrap(int k) const { return static_cast<std::size_t>(k < 0 ? k + M_ : k); }

  int M_;
  std::size_t n_;
  cplx* buf_[3];
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

}  // namespace alphadyn
