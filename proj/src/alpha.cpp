#include "alphadyn/alpha.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "alphadyn/error.hpp"
#include "alphadyn/linalg.hpp"
#include "alphadyn/modal_op.hpp"

namespace alphadyn {

namespace {

constexpr cplx I(0.0, 1.0);

SpectralField constant_like(const SpectralField& U, const CVec3& v) {
  SpectralField c = constant_field(0, v);
  c.set_period_scale(U.period_scale());
  return c;
}

CVec3 unit(int l) {
  CVec3 e = CVec3::Zero();
  e[l] = 1.0;
  return e;
}

ModalOperatorSpec cell_spec(const SpectralField& U, int N) {
  ModalOperatorSpec s;
  s.U = U;
  s.N = N;
  return s;
}

double relative_residual(const ModalOperator& L0, const SpectralField& S, const SpectralField& rhs) {
  SpectralField r = L0.apply(S);
  r -= rhs;
  const double nr = l2(rhs);
  return nr > 0.0 ? l2(r) / nr : l2(r);
}

// dense Galerkin solve on the mean-free modes, several right-hand sides
std::vector<SpectralField> solve_direct(const SpectralField& U, const std::vector<SpectralField>& rhs,
                                        int N) {
  const linalg::Mat A = assemble_dense(cell_spec(U, N));
  SpectralField probe(N);
  const std::size_t modes = probe.modes();
  const std::size_t zero = probe.index({0, 0, 0});
  std::vector<Eigen::Index> keep;
  keep.reserve(3 * modes - 3);
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < modes; ++i)
      if (i != zero) keep.push_back(static_cast<Eigen::Index>(a * modes + i));
  const auto n = static_cast<Eigen::Index>(keep.size());
  linalg::Mat R(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) R(r, c) = A(keep[r], keep[c]);
  linalg::Mat B(n, static_cast<Eigen::Index>(rhs.size()));
  for (std::size_t m = 0; m < rhs.size(); ++m)
    for (Eigen::Index r = 0; r < n; ++r) B(r, static_cast<Eigen::Index>(m)) = rhs[m].data()[keep[r]];
  const linalg::DenseLU lu(std::move(R));
  require(lu.rcond() > 1e-14, Errc::solver_failure, "cell Galerkin system is numerically singular");
  const linalg::Mat X = lu.solve(B);
  std::vector<SpectralField> out;
  for (std::size_t m = 0; m < rhs.size(); ++m) {
    SpectralField S(N, FieldKind::complex_valued, U.period_scale());
    for (Eigen::Index r = 0; r < n; ++r) S.data()[keep[r]] = X(r, static_cast<Eigen::Index>(m));
    out.push_back(std::move(S));
  }
  return out;
}

// W -> P curl(U x lap^-1 W)
SpectralField neumann_T(const SpectralField& U, const SpectralField& W) {
  return curl(cross(U, inv_laplacian(W), W.N()));
}

}  // namespace

int cell_truncation(const SpectralField& U, const CellOptions& opt) {
  require(opt.N >= 0, Errc::invalid_truncation, "negative cell truncation");
  const int N = opt.N > 0 ? opt.N : U.N() + 2;
  return std::max(N, 1);
}

SpectralField apply_L0(const SpectralField& U, const SpectralField& S) {
  return ModalOperator(cell_spec(U, S.N())).apply(S);
}

SpectralField cell_rhs(const SpectralField& U, const CVec3& v, int N) {
  SpectralField r = curl(cross(constant_like(U, v), U, N));
  r.set_kind(FieldKind::complex_valued);
  return r;
}

double neumann_contraction(const SpectralField& U, int N, std::uint64_t seed) {
  if (U.is_zero()) return 0.0;
  const SpectralField Ubar = conjugate(U);
  const double s = U.period_scale();
  auto to_field = [&](const linalg::Vec& x) {
    SpectralField f = field_from_vector(x, N, FieldKind::complex_valued, s);
    return without_mean(std::move(f));
  };
  const linalg::LinOp T = [&](const linalg::Vec& x, linalg::Vec& y) {
    y = without_mean(neumann_T(U, to_field(x))).vec();
  };
  const linalg::LinOp TH = [&](const linalg::Vec& x, linalg::Vec& y) {
    const SpectralField b = to_field(x);
    SpectralField t = without_mean(cross(Ubar, curl(b), N));
    t = inv_laplacian(t);
    t *= -1.0;
    y = t.vec();
  };
  SpectralField probe(N);
  return linalg::op_norm(T, TH, static_cast<Eigen::Index>(probe.size()), seed, 500, 1e-9).value;
}

CellSolution solve_cell_problem(const SpectralField& U, const CVec3& v, const CellOptions& opt) {
  require(opt.tol > 0.0, Errc::invalid_argument, "tolerance must be positive");
  const int N = cell_truncation(U, opt);
  CellSolution sol;
  sol.input_v = v;
  sol.field = SpectralField(N, FieldKind::complex_valued, U.period_scale());
  if (U.is_zero() || v.isZero(0.0)) return sol;
  const SpectralField rhs = cell_rhs(U, v, N);
  if (opt.method == CellMethod::direct) {
    sol.field = std::move(solve_direct(U, {rhs}, N)[0]);
    sol.iterations = 1;
  } else {
    sol.contraction = neumann_contraction(U, N);
    require(sol.contraction < opt.max_contraction, Errc::series_diverges,
            "Neumann contraction factor " + std::to_string(sol.contraction) + " is not below " +
                std::to_string(opt.max_contraction));
    const double nf = l2(rhs);
    SpectralField W = rhs;
    bool done = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
      SpectralField next = rhs - neumann_T(U, W);
      const double inc = l2(next - W);
      W = std::move(next);
      sol.iterations = it;
      if (inc <= opt.tol * nf) {
        done = true;
        break;
      }
    }
    require(done, Errc::series_diverges, "Neumann series did not reach tolerance");
    sol.field = inv_laplacian(W);
  }
  sol.residual = relative_residual(ModalOperator(cell_spec(U, N)), sol.field, rhs);
  return sol;
}

CellResponse cell_response(const SpectralField& U, const CellOptions& opt) {
  CellResponse r;
  const int N = cell_truncation(U, opt);
  if (opt.method == CellMethod::direct && !U.is_zero()) {
    std::vector<SpectralField> rhs;
    for (int l = 0; l < 3; ++l) rhs.push_back(cell_rhs(U, unit(l), N));
    std::vector<SpectralField> S = solve_direct(U, rhs, N);
    const ModalOperator L0(cell_spec(U, N));
    for (int l = 0; l < 3; ++l) {
      r.cells[l].input_v = unit(l);
      r.cells[l].field = std::move(S[l]);
      r.cells[l].iterations = 1;
      r.cells[l].residual = relative_residual(L0, r.cells[l].field, rhs[l]);
    }
  } else {
    for (int l = 0; l < 3; ++l) r.cells[l] = solve_cell_problem(U, unit(l), opt);
  }
  for (int l = 0; l < 3; ++l) r.M.col(l) = mean_cross(U, r.cells[l].field);
  return r;
}

void sort_eigenvalues(std::array<cplx, 3>& values) {
  double scale = 0.0;
  for (const cplx& v : values) scale = std::max(scale, std::abs(v));
  const double tie = 1e-12 * scale;
  std::sort(values.begin(), values.end(), [tie](cplx a, cplx b) {
    if (std::abs(a.real() - b.real()) > tie) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
  if (v.size() == 0) return;
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const double m = std::abs(v[imax]);
  if (m == 0.0) return;
  v *= std::conj(v[imax]) / m;
  v[imax] = m;
}

AlphaMatrix alpha_matrix(const CellResponse& response, const Vec3& j) {
  const double nj = j.norm();
  require(nj > 0.0 && std::isfinite(nj), Errc::undefined_direction, "alpha-matrix needs j != 0");
  AlphaMatrix a;
  a.j_direction = j / nj;
  Eigen::Matrix3cd J;
  const Vec3& d = a.j_direction;
  J << 0.0, -d[2], d[1], d[2], 0.0, -d[0], -d[1], d[0], 0.0;
  a.A = I * J * response.M;
  Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(a.A);
  require(es.info() == Eigen::Success, Errc::eigs_failed, "3x3 eigensolve failed");
  std::array<int, 3> order{0, 1, 2};
  std::array<cplx, 3> vals{es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
  std::array<cplx, 3> sorted = vals;
  sort_eigenvalues(sorted);
  std::array<bool, 3> used{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      if (!used[k] && vals[k] == sorted[i]) {
        order[i] = k;
        used[k] = true;
        break;
      }
  for (int i = 0; i < 3; ++i) {
    a.eigenvalues[i] = sorted[i];
    Eigen::VectorXcd v = es.eigenvectors().col(order[i]).normalized();
    fix_phase(v);
    a.eigenvectors.col(i) = v;
  }
  return a;
}

AlphaMatrix alpha_matrix(const SpectralField& U, const Vec3& j, const CellOptions& opt) {
  require(j.norm() > 0.0, Errc::undefined_direction, "alpha-matrix needs j != 0");
  return alpha_matrix(cell_response(U, opt), j);
}

Eigen::Matrix3d first_order_matrix(const SpectralField& U) {
  Eigen::Matrix3d Iu = Eigen::Matrix3d::Zero();
  if (U.is_zero()) return Iu;
  for (int l = 0; l < 3; ++l) {
    const SpectralField w = inv_laplacian(curl(cross(U, constant_like(U, unit(l)))));
    Iu.col(l) = -mean_cross(U, w).real();
  }
  return Iu;
}

std::array<cplx, 3> abc_closed_form(const AbcParams& p, const Vec3& j) {
  const double nj = j.norm();
  require(nj > 0.0 && std::isfinite(nj), Errc::undefined_direction, "closed form needs j != 0");
  const double a2 = p.a * p.a, b2 = p.b * p.b, c2 = p.c * p.c;
  const double s = a2 * b2 * j[1] * j[1] + b2 * c2 * j[2] * j[2] + a2 * c2 * j[0] * j[0];
  const double mu = std::sqrt(s) / nj;
  return {cplx(mu), cplx(0.0), cplx(-mu)};
}

std::vector<Vec3> icosphere_directions() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v;
  for (double s1 : {-1.0, 1.0})
    for (double s2 : {-1.0, 1.0}) {
      v.emplace_back(0.0, s1, s2 * phi);
      v.emplace_back(s1, s2 * phi, 0.0);
      v.emplace_back(s2 * phi, 0.0, s1);
    }
  const std::size_t nv = v.size();
  for (std::size_t a = 0; a < nv; ++a)
    for (std::size_t b = a + 1; b < nv; ++b)
      if (std::abs((v[a] - v[b]).norm() - 2.0) < 1e-9) v.push_back(0.5 * (v[a] + v[b]));
  for (Vec3& d : v) d.normalize();
  return v;
}

std::vector<Vec3> axis_directions() {
  std::vector<Vec3> v;
  for (int i = 0; i < 3; ++i)
    for (double s : {1.0, -1.0}) {
      Vec3 d = Vec3::Zero();
      d[i] = s;
      v.push_back(d);
    }
  return v;
}

std::vector<Vec3> cube_directions() {
  std::vector<Vec3> v;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c)
        if (a || b || c) v.push_back(Vec3(a, b, c).normalized());
  return v;
}

std::vector<Vec3> default_scan_directions() {
  std::vector<Vec3> v = icosphere_directions();
  for (const Vec3& d : axis_directions()) v.push_back(d);
  return v;
}

ScanReport instability_scan(const CellResponse& response, const std::vector<Vec3>& directions,
                            const ScanOptions& opt) {
  require(!directions.empty(), Errc::invalid_argument, "empty direction sample");
  ScanReport rep;
  double best_norm = 0.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const AlphaMatrix a = alpha_matrix(response, directions[i]);
    ScanRow row;
    row.direction = a.j_direction;
    row.eigenvalues = a.eigenvalues;
    row.margin = std::min(std::abs(a.eigenvalues[0] - a.eigenvalues[1]),
                          std::abs(a.eigenvalues[0] - a.eigenvalues[2]));
    if (i == 0 || row.eigenvalues[0].real() > rep.best_re) {
      rep.best = i;
      rep.best_re = row.eigenvalues[0].real();
      rep.best_margin = row.margin;
      best_norm = a.A.norm();
    }
    rep.rows.push_back(row);
  }
  rep.certified = rep.best_re > opt.threshold &&
                  rep.best_margin > std::max(opt.threshold, opt.simple_margin * best_norm) &&
                  best_norm > 0.0;
  return rep;
}

ScanReport instability_scan(const SpectralField& U, const std::vector<Vec3>& directions,
                            const ScanOptions& opt, const CellOptions& cell) {
  return instability_scan(cell_response(U, cell), directions, opt);
}

double default_delta0(const SpectralField& U) {
  const Norms n = norms(U);
  const double w = std::max(n.sup_estimate, n.sup_grad_estimate) * kSupSafety;
  require(w > 0.0, Errc::invalid_argument, "zero flow has no natural amplitude scale");
  return 0.05 / w;
}

}  // namespace alphadyn
