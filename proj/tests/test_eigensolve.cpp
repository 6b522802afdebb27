#include <algorithm>
#include <cmath>

#include "alphadyn/eigensolve.hpp"
#include "alphadyn/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace alphadyn;
using testing::Rng;

namespace {

SpectralField abc(double delta) { return delta * make_abc({1, 1, 1}, 1); }

std::vector<cplx> dense_spectrum(const ModalOperatorSpec& s) {
  const linalg::EigResult e = linalg::eig(assemble_dense(s), false);
  std::vector<cplx> v(e.values.data(), e.values.data() + e.values.size());
  std::sort(v.begin(), v.end(), [](cplx a, cplx b) { return a.real() > b.real(); });
  return v;
}

}  // namespace

TEST_SUITE("eigensolve") {
  TEST_CASE("kernel of L0 is three-dimensional and semisimple") {
    const ModalOperatorSpec s{abc(0.05), Vec3::Zero(), 1.0, 2};
    const std::vector<cplx> ev = dense_spectrum(s);
    int small = 0;
    for (cplx p : ev) {
      if (std::abs(p) < 1e-8) ++small;
      else CHECK(p.real() <= -0.5);
    }
    CHECK(small == 3);
    const linalg::Mat L = assemble_dense(s);
    for (const linalg::Mat& M : {L, linalg::Mat(L * L)}) {
      const Eigen::VectorXd sv = linalg::singular_values(M);
      int null = 0;
      for (Eigen::Index i = 0; i < sv.size(); ++i) null += sv[i] < 1e-10 * sv[0];
      CHECK(null == 3);
    }
  }

  TEST_CASE("leading eigenvalues: dense and Krylov agree with the full spectrum") {
    const ModalOperatorSpec s{abc(0.05), Vec3(0.001, 0.00075, 0.0), 1.0, 3};
    const std::vector<cplx> ev = dense_spectrum(s);
    EigOptions dense, krylov;
    dense.method = EigMethod::dense;
    krylov.method = EigMethod::krylov;
    const std::vector<EigPair> a = leading_eigs(s, 3, dense);
    const std::vector<EigPair> b = leading_eigs(s, 3, krylov);
    REQUIRE(a.size() == 3);
    REQUIRE(b.size() == 3);
    for (int l = 0; l < 3; ++l) {
      CHECK(std::abs(a[l].p - ev[l]) < 1e-12);
      CHECK(std::abs(b[l].p - ev[l]) < 1e-10);
      CHECK(a[l].residual < 1e-8);
      CHECK(b[l].residual < 1e-8);
      CHECK(l2(a[l].H) == doctest::Approx(1.0));
      // non-solenoidal gradient modes decay; growing modes are solenoidal
      if (a[l].p.real() > 0) CHECK(a[l].modal_div_residual < 1e-8);
    }
    CHECK(a[0].p.real() > 0.0);
    CHECK(a[0].p.real() >= a[1].p.real());
  }

  TEST_CASE("nearest eigenvalues come nearest first") {
    const ModalOperatorSpec s{abc(0.05), Vec3(0.01, 0.0, 0.0), 1.0, 2};
    const std::vector<cplx> ev = dense_spectrum(s);
    const cplx target(-0.9, 0.0);
    std::vector<cplx> sorted = ev;
    std::sort(sorted.begin(), sorted.end(),
              [&](cplx x, cplx y) { return std::abs(x - target) < std::abs(y - target); });
    const std::vector<EigPair> n = nearest_eigs(s, target, 2);
    REQUIRE(n.size() == 2);
    CHECK(std::abs(n[0].p - target) <= std::abs(n[1].p - target) + 1e-14);
    CHECK(std::abs(n[0].p - target) == doctest::Approx(std::abs(sorted[0] - target)).epsilon(1e-10));
  }

  TEST_CASE("first-order Kato expansion") {
    const double delta = 0.05;
    const std::vector<double> mags{0.2 * delta, 0.1 * delta, 0.05 * delta, 0.025 * delta};
    const KatoReport k = kato_first_order_check(abc(delta), Vec3(1, 0, 0), mags);
    CHECK(k.rows.size() == mags.size());
    CHECK(k.slope >= 1.8);
    // the mu are the alpha-matrix eigenvalues
    const AlphaMatrix A = alpha_matrix(abc(delta), Vec3(1, 0, 0));
    for (int l = 0; l < 3; ++l) CHECK(std::abs(k.mu[l] - A.eigenvalues[l]) < 1e-12);
    for (const KatoRow& row : k.rows) {
      CHECK(row.max_remainder < row.jmag);
      for (int l = 0; l < 3; ++l) CHECK(row.residual[l] < 1e-8);
    }
  }

  TEST_CASE("log-log slope") {
    const std::vector<double> x{1, 2, 4, 8};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v * v * v);
    CHECK(loglog_slope(x, y) == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("continuation in eps keeps the growing branch") {
    const ModalOperatorSpec s{abc(0.05), Vec3(0.001, 0.00075, 0.0), 1.0, 2};
    const EigPair start = leading_eigs(s, 1)[0];
    ContinuationOptions opt;
    opt.d_eps = 0.02;
    const ContinuationResult c = continue_eigpair(s, start, 0.95, opt);
    CHECK(c.reached);
    CHECK(c.achieved_eps == doctest::Approx(0.95));
    CHECK(c.eta() == doctest::Approx(0.05));
    CHECK(c.min_re_p >= 0.5 * start.p.real());
    CHECK(c.pair.residual < 1e-8);
    // endpoint matches a fresh solve at the target eps
    ModalOperatorSpec t = s;
    t.eps = 0.95;
    const EigPair fresh = leading_eigs(t, 1)[0];
    CHECK(std::abs(c.pair.p - fresh.p) < 1e-12);
    CHECK(std::isfinite(c.max_lipschitz));
  }

  TEST_CASE("make_eigpair normalises and measures") {
    const ModalOperatorSpec s{abc(0.05), Vec3::Zero(), 1.0, 2};
    const ModalOperator L(s);
    const EigPair e = leading_eigs(s, 1)[0];
    const EigPair f = make_eigpair(L, e.p, cplx(0, 3) * e.H);
    CHECK(l2(f.H) == doctest::Approx(1.0));
    CHECK(f.residual < 1e-8);
    CHECK(testing::max_abs_diff(f.H, e.H) < 1e-10);
  }
}
