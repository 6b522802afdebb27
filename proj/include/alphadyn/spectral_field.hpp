#pragma once

// Truncated Fourier representation of complex 3-vector fields on the torus
// of period 2*pi*s (s = period scale, 1 for the standard cell).
//
//   f(x) = sum_k  c(k) exp(i (k/s).x),   |k_i| <= N
//
// Coefficients are stored component-major; within a component k is
// lexicographic with k3 fastest.

#include <Eigen/Core>
#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace alphadyn {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

struct WaveVector {
  int k1 = 0, k2 = 0, k3 = 0;
  friend bool operator==(const WaveVector&, const WaveVector&) = default;
};

enum class FieldKind { real_valued, complex_valued };

struct AbcParams {
  double a = 1.0, b = 1.0, c = 1.0;
};

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int N, FieldKind kind = FieldKind::complex_valued,
                         double period_scale = 1.0);

  int N() const { return N_; }
  int side() const { return 2 * N_ + 1; }
  std::size_t modes() const { return static_cast<std::size_t>(side()) * side() * side(); }
  std::size_t size() const { return 3 * modes(); }

  FieldKind kind() const { return kind_; }
  void set_kind(FieldKind kind) { kind_ = kind; }
  double period_scale() const { return scale_; }
  void set_period_scale(double s);

  bool contains(const WaveVector& k) const;
  std::size_t index(const WaveVector& k) const;
  WaveVector wave(std::size_t idx) const;
  // physical wave vector k / s
  Vec3 wavenumber(const WaveVector& k) const;

  cplx* data() { return c_.data(); }
  const cplx* data() const { return c_.data(); }
  cplx* component(int c) { return c_.data() + c * modes(); }
  const cplx* component(int c) const { return c_.data() + c * modes(); }

  cplx& at(int c, const WaveVector& k) { return c_[c * modes() + index(k)]; }
  const cplx& at(int c, const WaveVector& k) const { return c_[c * modes() + index(k)]; }
  CVec3 coeff(const WaveVector& k) const;
  void set_coeff(const WaveVector& k, const CVec3& v);

  void set_zero();
  bool is_zero() const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(cplx a);
  // y += a x, same truncation
  void axpy(cplx a, const SpectralField& x);

  // Eigen view of the flat coefficient vector
  Eigen::Map<Eigen::VectorXcd> vec() { return {c_.data(), static_cast<Eigen::Index>(c_.size())}; }
  Eigen::Map<const Eigen::VectorXcd> vec() const {
    return {c_.data(), static_cast<Eigen::Index>(c_.size())};
  }

 private:
  void check_compatible(const SpectralField& o) const;

  int N_ = 0;
  FieldKind kind_ = FieldKind::complex_valued;
  double scale_ = 1.0;
  std::vector<cplx> c_ = std::vector<cplx>(3);
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(cplx a, SpectralField f);

// wraps a flat coefficient vector (length 3 (2N+1)^3)
SpectralField field_from_vector(const Eigen::VectorXcd& v, int N,
                                FieldKind kind = FieldKind::complex_valued,
                                double period_scale = 1.0);

SpectralField constant_field(int N, const CVec3& v);
SpectralField make_abc(const AbcParams& p, int N);

SpectralField curl(const SpectralField& f);
SpectralField laplacian(const SpectralField& f);
SpectralField inv_laplacian(const SpectralField& f);
CVec3 mean(const SpectralField& f);
SpectralField without_mean(SpectralField f);

// Pointwise product via a zero-padded transform; exact when cap >= N_f + N_g.
// Default cap is N_f + N_g.
SpectralField cross(const SpectralField& f, const SpectralField& g,
                    std::optional<int> cap = std::nullopt);
// Average of f x g over the cell, from coefficients directly.
CVec3 mean_cross(const SpectralField& f, const SpectralField& g);

cplx inner(const SpectralField& f, const SpectralField& g);
double l2(const SpectralField& f);

// Copy into a different truncation (drops or zero-pads modes).
SpectralField resized(const SpectralField& f, int N);
// Physical complex conjugate: g(x) = conj(f(x)).
SpectralField conjugate(const SpectralField& f);

// max_k |(k/s + j) . c(k)|
double max_divergence(const SpectralField& f, const Vec3& j = Vec3::Zero());
// removes the (k/s + j)-longitudinal part of every mode
SpectralField project_divergence_free(const SpectralField& f, const Vec3& j = Vec3::Zero());

// max_k |c(-k) - conj c(k)| relative to the largest coefficient
double reality_defect(const SpectralField& f);
// streamfunction with curl(psi) = U for mean-free divergence-free U
SpectralField streamfunction(const SpectralField& U);

struct Norms {
  double l2 = 0.0;          // (mean |f|^2)^(1/2)
  double cell_l2 = 0.0;     // (integral over one period cell of |f|^2)^(1/2)
  double sup_estimate = 0.0;
  // max over the grid of the max-row-sum norm of the Jacobian
  double sup_grad_estimate = 0.0;
  // same with the spectral (l2-induced) norm
  double sup_grad_spectral = 0.0;
};

struct NormOptions {
  int oversample = 4;
};

Norms norms(const SpectralField& f, const NormOptions& opt = {});

// multiplies the sampled sup estimates when they are used as upper bounds
inline constexpr double kSupSafety = 1.05;

// f_n(x) = zeta^{n/2} f(zeta^{-n/2} x), recorded as a change of period
SpectralField rescale_flow(const SpectralField& f, double zeta, int n);

// Values on the uniform grid x_m = 2 pi s m / M, m in [0, M)^3, stored as
// three arrays of M^3 points with the last index fastest.
struct PhysicalSamples {
  int M = 0;
  std::array<std::vector<cplx>, 3> comp;
};
PhysicalSamples to_physical(const SpectralField& f, int M);

// Value and derivatives at one point (by direct Fourier summation).
struct FieldJet {
  std::array<cplx, 3> value{};
  std::array<std::array<cplx, 3>, 3> grad{};               // grad[a][b] = d_b f_a
  std::array<std::array<std::array<cplx, 3>, 3>, 3> hess{};  // hess[a][b][c] = d_b d_c f_a
};
FieldJet evaluate_jet(const SpectralField& f, const Vec3& x, int order = 2);

}  // namespace alphadyn
