#pragma once

// Cell problem, alpha-matrix and instability certification.
//
//   L0 S = curl(U x S) + lap S = curl(v x U),  S mean-free
//   A(j) v = i jhat x mean(U x S(v))

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "alphadyn/spectral_field.hpp"

namespace alphadyn {

enum class CellMethod { direct, neumann };

struct CellOptions {
  CellMethod method = CellMethod::direct;
  double tol = 1e-12;
  // truncation of S; 0 picks U.N() + 2
  int N = 0;
  int max_iter = 1000;
  // the Neumann path refuses contraction factors at or above this
  double max_contraction = 1.0;
};

int cell_truncation(const SpectralField& U, const CellOptions& opt);

struct CellSolution {
  CVec3 input_v = CVec3::Zero();
  SpectralField field;
  double residual = 0.0;  // relative to |curl(v x U)|
  int iterations = 0;
  // measured |curl(U x lap^-1 .)| (Neumann path only)
  double contraction = std::numeric_limits<double>::quiet_NaN();
};

SpectralField apply_L0(const SpectralField& U, const SpectralField& S);
SpectralField cell_rhs(const SpectralField& U, const CVec3& v, int N);

CellSolution solve_cell_problem(const SpectralField& U, const CVec3& v,
                                const CellOptions& opt = {});

// operator norm of W -> P curl(U x lap^-1 W) on mean-free fields of truncation N
double neumann_contraction(const SpectralField& U, int N, std::uint64_t seed = 11);

// the three cell solutions and M = [mean(U x S(e_1)), ...]
struct CellResponse {
  std::array<CellSolution, 3> cells;
  Eigen::Matrix3cd M = Eigen::Matrix3cd::Zero();
};
CellResponse cell_response(const SpectralField& U, const CellOptions& opt = {});

struct AlphaMatrix {
  Eigen::Matrix3cd A = Eigen::Matrix3cd::Zero();
  Vec3 j_direction = Vec3::Zero();
  std::array<cplx, 3> eigenvalues{};  // descending Re, ties descending Im
  Eigen::Matrix3cd eigenvectors = Eigen::Matrix3cd::Zero();  // columns, unit, phase fixed
};

AlphaMatrix alpha_matrix(const CellResponse& response, const Vec3& j);
AlphaMatrix alpha_matrix(const SpectralField& U, const Vec3& j, const CellOptions& opt = {});

// I_U v = -mean(U x lap^-1 curl(U x v)), real part
Eigen::Matrix3d first_order_matrix(const SpectralField& U);

// eigenvalues of i jhat x diag(b^2, c^2, a^2): {+mu, 0, -mu}
std::array<cplx, 3> abc_closed_form(const AbcParams& p, const Vec3& j);

// sorts by descending real part, then descending imaginary part
void sort_eigenvalues(std::array<cplx, 3>& values);
// makes the largest-modulus component real and positive
void fix_phase(Eigen::Ref<Eigen::VectorXcd> v);

std::vector<Vec3> icosphere_directions();  // 42 vertices
std::vector<Vec3> axis_directions();       // +-e_i
std::vector<Vec3> cube_directions();       // 26 normalized nonzero {-1,0,1}^3
std::vector<Vec3> default_scan_directions();

struct ScanRow {
  Vec3 direction = Vec3::Zero();
  std::array<cplx, 3> eigenvalues{};
  double margin = 0.0;  // gap from the leading eigenvalue to the other two
};
struct ScanReport {
  std::vector<ScanRow> rows;
  std::size_t best = 0;
  double best_re = 0.0;
  double best_margin = 0.0;
  bool certified = false;
};

struct ScanOptions {
  double threshold = 0.0;
  // simplicity margin as a fraction of |A|
  double simple_margin = 1e-6;
};

ScanReport instability_scan(const CellResponse& response, const std::vector<Vec3>& directions,
                            const ScanOptions& opt = {});
ScanReport instability_scan(const SpectralField& U, const std::vector<Vec3>& directions,
                            const ScanOptions& opt = {}, const CellOptions& cell = {});

// 0.05 / |U|_{W^{1,inf}} with the sampled norms
double default_delta0(const SpectralField& U);

}  // namespace alphadyn
