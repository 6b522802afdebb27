#pragma once

// Whole-space assembly: u = sum_{n,l} curl(Psi_n phi_{n,l}) with
// Psi_n(x) = zeta^n Psi(x zeta^{-n/2}) and radial cutoffs phi_{n,l}, plus the
// datum B = sum_l l^{-2} F(. - x_{n,l}).
//
// Radii reach 1e13 and beyond, so points are addressed per block: a block
// center lies on the period lattice of Psi_n, hence Psi_n(x_{n,l} + y) =
// Psi_n(y) and everything is evaluated from the block-local offset y.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "alphadyn/bloch.hpp"
#include "alphadyn/spectral_field.hpp"

namespace alphadyn {

// tolerance (1/U) exp(-(n+1) - U (l+1))
double block_tolerance(double U, int n, int l);

// tail(R) = |F - F 1_{Q_R}|^2 <= C / R beyond the sampled radii
struct TailLaw {
  double C = 0.0;
  double safety = 1.25;
  std::vector<std::pair<double, double>> samples;  // (R, measured tail)
  double tail(double R) const { return C / R; }
};
// samples the normalized family's tail on the given cube radii
TailLaw measure_tail_law(const BlochFamily& f, const std::vector<double>& radii, double safety = 1.25);
// pointwise maximum of several laws (uniformity over eps)
TailLaw envelope(const std::vector<TailLaw>& laws);

// degree-5 ramp: phi = 1 - S((r - r_in) / w), S = 10t^3 - 15t^4 + 6t^5
struct CutoffSpec {
  Vec3 center = Vec3::Zero();
  double r_in = 0.0;
  double width = 0.0;
  int degree = 5;
  double r_out() const { return r_in + width; }
  // at radius r + dr, with dr a small increment kept separate for precision
  double value(double r, double dr = 0.0) const;
  double d1(double r, double dr = 0.0) const;
  double d2(double r, double dr = 0.0) const;
  // analytic bounds on sup |grad phi| and sup |D^2 phi|
  double grad_bound() const;
  double hess_bound() const;
};

struct Block {
  int n = 1, l = 1;
  double R = 0.0;        // 1/R + tail(R) < tol
  double tol = 0.0;      // block_tolerance(U, n, l)
  Eigen::Vector3i cell;  // lattice site
  CutoffSpec cutoff;
};

struct CatalogOptions {
  int n_min = 1;
  double margin = 0.01;     // relative slack left in every sized inequality
  double max_extent = INFINITY;
};

struct BlockCatalog {
  double U = 10.0;
  double zeta = 0.9;
  int n_max = 3, l_max = 3;
  double spacing = 0.0;  // lattice spacing
  double tail_C = 0.0;
  SpectralField psi;
  std::vector<Block> blocks;
  // index of the block at (n, l), or -1
  int find(int n, int l) const;
  SpectralField psi_n(int n) const;
};

// catalog-infeasible when a radius or ramp width is not representable or the
// lattice exceeds max_extent
BlockCatalog plan_catalog(const SpectralField& psi, double zeta, double U, int n_max, int l_max,
                          const TailLaw& tail, const CatalogOptions& opt = {});

void save_catalog(const std::filesystem::path& path, const BlockCatalog& c);
BlockCatalog load_catalog(const std::filesystem::path& path);

// a point given by its lattice cell and offset from that cell's block center
struct BlockPoint {
  Eigen::Vector3i cell = Eigen::Vector3i::Zero();
  Vec3 offset = Vec3::Zero();
  Vec3 local = Vec3::Zero();  // small displacement added after periodic reduction
};

struct GluedSample {
  int block = -1;
  Vec3 u = Vec3::Zero();
  Eigen::Matrix3d grad_u = Eigen::Matrix3d::Zero();  // (a, b) = d_b u_a
  double divergence = 0.0;
};
struct GluedEvaluation {
  std::vector<BlockPoint> points;
  std::vector<GluedSample> samples;
  double max_relative_divergence = 0.0;
};
GluedEvaluation evaluate_u(const BlockCatalog& c, const std::vector<BlockPoint>& points);
GluedSample evaluate_u(const BlockCatalog& c, const BlockPoint& p);
// plain coordinates, for points of moderate size
GluedSample evaluate_u(const BlockCatalog& c, const Vec3& x);

struct DatumTerm {
  int l = 1;
  double weight = 1.0;  // l^{-2}
  int block = -1;
};
struct DatumReport {
  double eps = 1.0;
  int n_eps = 0;
  std::vector<DatumTerm> terms;
  double f1_in_plateau = 0.0;  // lower bound for |F_1|_{L^2(Q_{n,1})}
  double leak = 0.0;           // upper bound for |F_l|_{L^2(Q_{n,1})}, l != 1
  double norm_lower = 0.0, norm_upper = 0.0;
  bool in_range = false;  // 1/2 <= lower, upper <= 2
};
// F is taken unit-normalized; tail bounds come from the catalog's law
DatumReport build_datum(const BlockCatalog& c, double eps);
// B(x) for a point addressed in the catalog lattice
CVec3 evaluate_datum(const BlockCatalog& c, const DatumReport& d, const BlochFamily& F,
                     const BlockPoint& p);

struct CheckRow {
  std::string check;
  int n = 0, l = 0;
  double measured = 0.0, bound = 0.0;
  double margin = 0.0;  // positive means satisfied
  bool pass = false;
};
struct CatalogReport {
  std::vector<CheckRow> rows;
  double lipschitz_C = 10.0;
  int failures() const;
  bool all_pass() const { return failures() == 0; }
};
struct CheckOptions {
  double lipschitz_C = 10.0;
  int radial_samples = 4096;
  int plateau_samples = 6;  // per axis, over one period cell
  double fd_h = 1e-2;
  double div_tol = 1e-8;
};
CatalogReport check_catalog(const BlockCatalog& c, const std::vector<double>& eps_samples,
                            const CheckOptions& opt = {});

// W^{2,inf} norm max|f| + max|grad f| + max|D^2 f| sampled over one period
double w2inf_norm(const SpectralField& f, int samples_per_axis = 12);

struct SweepRow {
  double U = 0.0;
  int failures = 0;
};
// U = 1, 2, 4, ... up to U_max; first value passing every measured check
// (the U >= 10 hypothesis row is not counted), or 0
double dyadic_sweep(const SpectralField& psi, double zeta, int n_max, int l_max, const TailLaw& tail,
                    const std::vector<double>& eps_samples, double U_max, std::vector<SweepRow>* rows = nullptr);

}  // namespace alphadyn
