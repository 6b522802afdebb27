#pragma once

// Bloch synthesis F(x) = \int G(x; j) exp(i j.x) dj over boxes in j.
//
// Each box carries a tensor Gauss-Legendre node set. Between nodes G is the
// Lagrange interpolant, and the j-integral of every basis polynomial against
// exp(i j.x) is done exactly per axis, so F stays accurate far from the
// origin and the Parseval identity holds for the interpolated family:
//
//   \int |F|^2 dx = (2 pi)^3 sum_nodes w_node sum_k |G_node(k)|^2.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "alphadyn/eigensolve.hpp"
#include "alphadyn/spectral_field.hpp"

namespace alphadyn {

struct GaussRule {
  std::vector<double> t, w;  // on [-1, 1]
};
GaussRule gauss_legendre(int n);

struct BlochBox {
  Vec3 center = Vec3::Zero();
  double half_width = 0.0;  // 0 marks a single point node
  int order = 5;            // nodes per axis (1 for point nodes)
  double point_weight = 1.0;
};

struct BlochFamily {
  std::vector<BlochBox> boxes;
  // per box, order^3 fields indexed (a1 * q + a2) * q + a3
  std::vector<std::vector<SpectralField>> fields;
  // per box and node, the growth exponent when known
  std::vector<std::vector<cplx>> exponents;
  bool conjugate_paired = false;

  int N() const;
  double period_scale() const;
  std::size_t node_count() const;
  Vec3 node(std::size_t box, int a1, int a2, int a3) const;
  double weight(std::size_t box, int a1, int a2, int a3) const;
};

// throws invalid-argument on overlapping boxes, boxes leaving the j-cell,
// or fields of mixed truncation
void validate(const BlochFamily& f);

BlochFamily point_family(const SpectralField& G, const Vec3& j, double weight);
// G independent of j on one box (order 1, exact sinc profile)
BlochFamily constant_band(const SpectralField& G, const Vec3& center, double J);
// samples G(j) at the nodes; with paired = true a mirror box at -center
// holds the conjugate reflection so that F is real
BlochFamily sample_family(const std::function<SpectralField(const Vec3&)>& G, const Vec3& center,
                          double J, int order, bool paired);

// (2 pi)^3 sum w |G|^2, the Parseval right-hand side
double family_mass(const BlochFamily& f);
void scale(BlochFamily& f, double c);
// F_s(x) = s^{-3/2} F(x / s): norm preserving dilation
BlochFamily dilate(const BlochFamily& f, double s);

// 1D profile J \int_{-1}^{1} l_a(t) exp(i J t x) dt of Lagrange basis a
cplx lagrange_profile(const GaussRule& rule, int a, double J, double x);

struct VolumeGeometry {
  double R = 10.0;
  double h = 0.0;  // 0 picks pi s / (4 (N + 1))
};
struct SampledVolume {
  double R = 0.0, h = 0.0;
  int n = 0;  // points per axis, x_m = -R + m h
  std::array<std::vector<cplx>, 3> values;  // index (m1 * n + m2) * n + m3
  double max_imag_ratio() const;
};
SampledVolume synthesize(const BlochFamily& f, const VolumeGeometry& g);
// direct evaluation at one point
CVec3 evaluate(const BlochFamily& f, const Vec3& x);

void save_volume(const std::filesystem::path& path, const SampledVolume& v);
SampledVolume load_volume(const std::filesystem::path& path);

// Box masses \int_{[-R,R]^3} |F|^2 by the tensor trapezoid rule, for a list
// of radii (each rounded to a multiple of h). The per-axis Gram integrals are
// accumulated once for all radii; masses are contracted lazily.
class BoxMass {
 public:
  BoxMass(const BlochFamily& f, const std::vector<double>& radii, double h = 0.0);
  std::size_t count() const { return cache_.size(); }
  double R(std::size_t i) const;
  double mass(std::size_t i);
  double rhs() const { return rhs_; }
  double h() const { return h_; }

 private:
  struct Tensor {
    int D = 0;
    std::array<std::vector<cplx>, 3> T;
  };
  const BlochFamily* f_;
  double h_ = 0.0, rhs_ = 0.0;
  std::vector<long> grid_idx_;
  // K_[b * nb + b2][axis][((a * q2 + a2) * (4N + 1) + delta) * nR + r]
  std::vector<std::vector<std::vector<cplx>>> K_;
  std::vector<Tensor> tensors_;
  std::vector<double> cache_;
};

struct ParsevalRow {
  double R = 0.0, lhs = 0.0, rel_err = 0.0;
};
struct ParsevalReport {
  double rhs = 0.0;
  std::vector<ParsevalRow> rows;
  bool decreasing = false;  // rel_err non-increasing along the rows
  bool converged = false;   // decreasing and final rel_err below tol
};
ParsevalReport parseval_check(const BlochFamily& f, const std::vector<double>& radii,
                              double h = 0.0, double tol = 0.05);

struct ConcentrationOptions {
  double R_max = 0.0;  // 0: 40 / (smallest box half-width)
  int nR = 400;
  double h = 0.0;
};
// smallest grid R with mass >= (1 - delta) rhs; not-concentrated otherwise
double concentration_radius(const BlochFamily& f, double delta, const ConcentrationOptions& opt = {});

struct BandOptions {
  int N = 2;
  int order = 5;
  EigOptions eig;
  ContinuationOptions continuation;
  // simplicity margin as a fraction of |p|
  double simple_margin = 1e-3;
};
struct BandDatum {
  BlochFamily family;  // normalized, at the physical scale zeta^{n/2}
  double eps = 1.0, eps_modal = 1.0;
  int n = 0;
  double J = 0.0;
  cplx p_star = 0.0;     // at (j*, 1)
  cplx p_center = 0.0;   // at (j*, eps_modal)
  double min_re_p = 0.0;
  double raw_mass = 0.0;  // before normalization
};
// eps_modal = eps / zeta^n must lie in (zeta, 1]; band-broken names the
// first node whose eigenvalue is not simple
BandDatum build_band_datum(const SpectralField& U, const Vec3& j_star, double J, double eps,
                           double zeta, int n, const BandOptions& opt = {});

// n with eps in (zeta^{n+1}, zeta^n]
int scale_index(double eps, double zeta);

}  // namespace alphadyn
