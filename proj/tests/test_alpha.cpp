#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "alphadyn/alpha.hpp"
#include "alphadyn/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace alphadyn;
using testing::bcross;
using testing::random_field;
using testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

// -a sin z + c cos y, -b sin x + a cos z, -c sin y + b cos x and its partials
Vec3 abc_u(const AbcParams& p, const Vec3& x) {
  return {-p.a * std::sin(x[2]) + p.c * std::cos(x[1]), -p.b * std::sin(x[0]) + p.a * std::cos(x[2]),
          -p.c * std::sin(x[1]) + p.b * std::cos(x[0])};
}
Vec3 abc_du(const AbcParams& p, const Vec3& x, int axis) {
  switch (axis) {
    case 0: return {0.0, -p.b * std::cos(x[0]), -p.b * std::sin(x[0])};
    case 1: return {-p.c * std::sin(x[1]), 0.0, -p.c * std::cos(x[1])};
    default: return {-p.a * std::cos(x[2]), -p.a * std::sin(x[2]), 0.0};
  }
}

// |k| = 1 support makes lap^-1 = -1, so I(v) = mean(U x (v.grad)U); 8^3 nodes integrate exactly
Eigen::Matrix3d abc_quadrature(const AbcParams& p) {
  Eigen::Matrix3d I = Eigen::Matrix3d::Zero();
  const int n = 8;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec3 x = (2 * kPi / n) * Vec3(i, j, k);
        const Vec3 u = abc_u(p, x);
        for (int l = 0; l < 3; ++l) I.col(l) += u.cross(abc_du(p, x, l));
      }
  return I / (n * n * n);
}

// I(v) = sum_k i (v.k)/|k|^2 c(-k) x c(k)
Eigen::Matrix3d fourier_oracle(const SpectralField& U) {
  Eigen::Matrix3cd I = Eigen::Matrix3cd::Zero();
  for (std::size_t m = 0; m < U.modes(); ++m) {
    const WaveVector k = U.wave(m);
    const Vec3 kv(k.k1, k.k2, k.k3);
    if (kv.squaredNorm() == 0) continue;
    const CVec3 x = bcross(U.coeff({-k.k1, -k.k2, -k.k3}), U.coeff(k));
    for (int l = 0; l < 3; ++l) I.col(l) += cplx(0, kv[l] / kv.squaredNorm()) * x;
  }
  return I.real();
}

Eigen::Matrix3cd cross_matrix(const Vec3& j) {
  Eigen::Matrix3cd X;
  X << 0, -j[2], j[1], j[2], 0, -j[0], -j[1], j[0], 0;
  return X;
}

AbcParams random_abc(Rng& r) { return {r.uniform(-2, 2), r.uniform(-2, 2), r.uniform(-2, 2)}; }

SpectralField real_flow(int N, Rng& r) {
  return random_field(N, r, {.real = true, .mean_free = true, .div_free = true});
}

}  // namespace

TEST_SUITE("alpha") {
  TEST_CASE("first-order matrix of ABC is diag(b^2, c^2, a^2)") {
    Rng r(101);
    for (int t = 0; t < 5; ++t) {
      const AbcParams p = random_abc(r);
      for (int N : {2, 3}) {
        const Eigen::Matrix3d I = first_order_matrix(make_abc(p, N));
        const Eigen::Matrix3d J = Eigen::Vector3d(p.b * p.b, p.c * p.c, p.a * p.a).asDiagonal();
        CHECK((I - J).cwiseAbs().maxCoeff() < 1e-13);
        CHECK((I - abc_quadrature(p)).cwiseAbs().maxCoeff() < 1e-13);
      }
    }
  }

  TEST_CASE("first-order matrix matches the Fourier sum, is symmetric and quadratic") {
    Rng r(102);
    for (int t = 0; t < 4; ++t) {
      const SpectralField U = real_flow(2, r);
      const Eigen::Matrix3d I = first_order_matrix(U);
      CHECK((I - fourier_oracle(U)).cwiseAbs().maxCoeff() < 1e-13);
      CHECK((I - I.transpose()).cwiseAbs().maxCoeff() < 1e-13);
      const Eigen::Matrix3d I3 = first_order_matrix(3.0 * U);
      CHECK((I3 - 9.0 * I).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(first_order_matrix(SpectralField(2)).isZero());
  }

  TEST_CASE("closed-form eigenvalues") {
    Rng r(103);
    for (int t = 0; t < 5; ++t) {
      const AbcParams p = random_abc(r);
      const Vec3 j = r.vec3();
      const Eigen::Matrix3cd J = Eigen::Vector3cd(p.b * p.b, p.c * p.c, p.a * p.a).asDiagonal();
      const Eigen::Matrix3cd L = cplx(0, 1) * cross_matrix(j.normalized()) * J;
      Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(L);
      std::array<cplx, 3> ev{es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
      sort_eigenvalues(ev);
      const std::array<cplx, 3> cf = abc_closed_form(p, j);
      for (int l = 0; l < 3; ++l) CHECK(std::abs(ev[l] - cf[l]) < 1e-12);
    }
    CHECK_THROWS_AS(abc_closed_form({1, 1, 1}, Vec3::Zero()), Error);
  }

  TEST_CASE("cell problem: residual, methods agree, leading Neumann term") {
    const SpectralField U = 0.05 * make_abc({1, 1, 1}, 1);
    const CVec3 v(0.3, -0.2, 0.9);
    const CellSolution d = solve_cell_problem(U, v);
    CHECK(d.residual < 1e-12);
    const SpectralField res = apply_L0(U, d.field) - cell_rhs(U, v, d.field.N());
    CHECK(l2(res) < 1e-12 * l2(cell_rhs(U, v, d.field.N())));
    CHECK(std::abs(mean(d.field).norm()) < 1e-15);
    CHECK(max_divergence(d.field) < 1e-13);

    CellOptions no;
    no.method = CellMethod::neumann;
    const CellSolution n = solve_cell_problem(U, v, no);
    CHECK(n.contraction < 0.5);
    CHECK(l2(n.field - d.field) < 10 * no.tol * l2(d.field));

    // |S - lap^-1 G| / |S| shrinks linearly in delta0
    double prev = 0.0;
    for (double delta : {0.02, 0.01}) {
      const SpectralField Ud = delta * make_abc({1, 1, 1}, 1);
      const CellSolution s = solve_cell_problem(Ud, v);
      const SpectralField lead = inv_laplacian(cell_rhs(Ud, v, s.field.N()));
      const double rel = l2(s.field - lead) / l2(s.field);
      if (prev > 0) CHECK(prev / rel == doctest::Approx(2.0).epsilon(0.05));
      prev = rel;
    }
  }

  TEST_CASE("alpha matrix approaches the first-order prediction") {
    const double delta = 0.05;
    const SpectralField U = delta * make_abc({1, 1, 1}, 1);
    const AlphaMatrix A = alpha_matrix(U, Vec3(1, 0, 0));
    CHECK(std::abs(A.eigenvalues[0] - delta * delta) < delta * delta * delta);
    CHECK(std::abs(A.eigenvalues[1]) < 1e-15);
    CHECK(std::abs(A.eigenvalues[2] + delta * delta) < delta * delta * delta);
    for (int l = 0; l < 3; ++l) {
      const Eigen::Vector3cd x = A.eigenvectors.col(l);
      CHECK((A.A * x - A.eigenvalues[l] * x).norm() < 1e-14);
      CHECK(x.norm() == doctest::Approx(1.0));
    }
    // j is a direction only
    const AlphaMatrix B = alpha_matrix(U, Vec3(7, 0, 0));
    CHECK((A.A - B.A).norm() < 1e-16);
    CHECK_THROWS_AS(alpha_matrix(U, Vec3::Zero()), Error);
    CHECK(alpha_matrix(SpectralField(1), Vec3(0, 0, 1)).A.isZero());
  }

  TEST_CASE("alpha matrix against the first-order matrix for random flows") {
    Rng r(104);
    const SpectralField U0 = real_flow(2, r);
    const Vec3 j = r.unit();
    const Eigen::Matrix3cd L1 = cplx(0, 1) * cross_matrix(j) * first_order_matrix(U0).cast<cplx>();
    double prev = 0.0;
    for (double delta : {0.02, 0.01}) {
      const Eigen::Matrix3cd A = alpha_matrix(delta * U0, j).A;
      const double err = (A - delta * delta * L1).norm();
      if (prev > 0) CHECK(prev / err > 6.0);
      prev = err;
    }
  }

  TEST_CASE("instability scan") {
    const double delta = 0.05;
    const SpectralField U = delta * make_abc({1, 1, 1}, 1);
    const ScanReport s = instability_scan(U, cube_directions());
    CHECK(s.rows.size() == 26);
    CHECK(s.certified);
    CHECK(s.best_re == doctest::Approx(delta * delta).epsilon(delta));
    for (const ScanRow& row : s.rows) CHECK(row.eigenvalues[0].real() <= s.best_re + 1e-15);

    // unequal amplitudes: sampled maximiser agrees with the closed form
    const AbcParams p{1.0, 0.5, 0.2};
    const SpectralField V = delta * make_abc(p, 1);
    const std::vector<Vec3> dirs = icosphere_directions();
    CHECK(dirs.size() == 42);
    const ScanReport t = instability_scan(V, dirs);
    std::size_t best = 0;
    for (std::size_t i = 1; i < dirs.size(); ++i)
      if (abc_closed_form(p, dirs[i])[0].real() > abc_closed_form(p, dirs[best])[0].real()) best = i;
    CHECK(abc_closed_form(p, dirs[t.best])[0].real() ==
          doctest::Approx(abc_closed_form(p, dirs[best])[0].real()).epsilon(1e-3));

    const ScanReport z = instability_scan(SpectralField(1), axis_directions());
    CHECK_FALSE(z.certified);
  }

  TEST_CASE("default delta0") {
    // |U|_{W1,inf} of ABC(1,1,1) is max(sup|U|, sup|grad U|) = max(sqrt 6, 2)
    const SpectralField U = make_abc({1, 1, 1}, 1);
    const double d = default_delta0(U);
    CHECK(d <= 0.05 / std::sqrt(6.0));
    CHECK(d >= 0.05 / (1.1 * std::sqrt(6.0)));
    CHECK(default_delta0(4.0 * U) == doctest::Approx(d / 4.0).epsilon(1e-12));
    CHECK_THROWS_AS(default_delta0(SpectralField(1)), Error);
  }

  TEST_CASE("direction sets") {
    for (const auto& set : {icosphere_directions(), axis_directions(), cube_directions()})
      for (const Vec3& d : set) CHECK(d.norm() == doctest::Approx(1.0));
    CHECK(axis_directions().size() == 6);
  }
}
