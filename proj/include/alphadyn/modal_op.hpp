#pragma once

// Galerkin discretization of the shifted induction operator
//
//   L(j, eps) H = (grad + i j) x (U x H) + eps (grad + i j)^2 H
//
// on the cubic truncation |k_i| <= N. In coefficients, with q = k/s + j,
//
//   (L H)(k) = i q x P_N(U * H)(k) - eps |q|^2 H(k).

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "alphadyn/linalg.hpp"
#include "alphadyn/spectral_field.hpp"

namespace alphadyn {

struct ModalOperatorSpec {
  SpectralField U;
  Vec3 j = Vec3::Zero();
  double eps = 1.0;
  int N = 2;
};

// eps > 0, N >= 1, U mean-free and divergence-free; throws invalid-argument
void validate(const ModalOperatorSpec& spec);

class Grid3;

// Matrix-free action of L with precomputed wave vectors. The convolution
// uses direct sparse accumulation when U has few nonzero modes and a padded
// FFT otherwise. Holds scratch space, so one instance per thread.
class ModalOperator {
 public:
  explicit ModalOperator(const ModalOperatorSpec& spec);
  ~ModalOperator();
  ModalOperator(ModalOperator&&) noexcept;
  ModalOperator& operator=(ModalOperator&&) noexcept;

  const ModalOperatorSpec& spec() const { return spec_; }
  int N() const { return spec_.N; }
  std::size_t dim() const { return 3 * modes_; }
  std::size_t modes() const { return modes_; }

  // out = L in (flat coefficient vectors of length dim())
  void apply(const cplx* in, cplx* out) const;
  SpectralField apply(const SpectralField& H) const;
  linalg::LinOp linop() const;

  // advective part only: i q x P_N(U * H)
  void apply_advection(const cplx* in, cplx* out) const;
  // -eps |k/s + j|^2 per mode
  const std::vector<double>& diffusion() const { return diff_; }
  const std::vector<double>& q(int c) const { return q_[c]; }

  bool uses_fft() const { return grid_ != nullptr; }

 private:
  void convolve(const cplx* in, cplx* out) const;

  ModalOperatorSpec spec_;
  std::size_t modes_ = 0;
  std::array<std::vector<double>, 3> q_;
  std::vector<double> diff_;
  struct UMode {
    WaveVector k;
    cplx u[3];
  };
  std::vector<UMode> umodes_;
  std::unique_ptr<Grid3> grid_;
  std::array<std::vector<cplx>, 3> uphys_;
  mutable std::vector<cplx> conv_;
};

SpectralField apply_L(const ModalOperatorSpec& spec, const SpectralField& H);

struct DenseOptions {
  std::size_t max_bytes = std::size_t{2} << 30;
};
// Galerkin matrix of L; too-large when the matrix exceeds max_bytes
linalg::Mat assemble_dense(const ModalOperatorSpec& spec, const DenseOptions& opt = {});
// first-order piece in L(j, 1) = L0 + |j| L1 - |j|^2:
//   L1 H = i jhat x P_N(U * H) - 2 (jhat . k/s) H
linalg::Mat assemble_L1(const SpectralField& U, const Vec3& jhat, int N,
                        const DenseOptions& opt = {});

struct CellOptions;
// e_l + S(e_l), l = 1..3, at the cell-solve truncation
std::array<SpectralField, 3> kernel_basis_L0(const SpectralField& U, const CellOptions& opt);

}  // namespace alphadyn
