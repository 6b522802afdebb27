#include "alphadyn/linalg.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "alphadyn/error.hpp"

namespace alphadyn::linalg {

namespace {

lapack_complex_double* lc(cplx* p) { return reinterpret_cast<lapack_complex_double*>(p); }
const lapack_complex_double* lc(const cplx* p) {
  return reinterpret_cast<const lapack_complex_double*>(p);
}

}  // namespace

DenseLU::DenseLU(Mat A) : lu_(std::move(A)) {
  require(lu_.rows() == lu_.cols(), Errc::invalid_argument, "LU of a non-square matrix");
  const lapack_int n = static_cast<lapack_int>(lu_.rows());
  anorm_ = n > 0 ? lu_.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
  piv_.resize(n);
  const lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, lc(lu_.data()), n, piv_.data());
  require(info >= 0, Errc::solver_failure, "getrf argument error");
  require(info == 0, Errc::solver_failure, "exactly singular pivot at " + std::to_string(info));
}

Vec DenseLU::solve(const Vec& b) const {
  Vec x = b;
  const lapack_int n = static_cast<lapack_int>(lu_.rows());
  const lapack_int info =
      LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, 1, lc(lu_.data()), n, piv_.data(), lc(x.data()), n);
  require(info == 0, Errc::solver_failure, "getrs failed");
  return x;
}

Mat DenseLU::solve(const Mat& B) const {
  Mat X = B;
  const lapack_int n = static_cast<lapack_int>(lu_.rows());
  const lapack_int info = LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n,
                                         static_cast<lapack_int>(X.cols()), lc(lu_.data()), n,
                                         piv_.data(), lc(X.data()), n);
  require(info == 0, Errc::solver_failure, "getrs failed");
  return X;
}

Vec DenseLU::solve_adjoint(const Vec& b) const {
  Vec x = b;
  const lapack_int n = static_cast<lapack_int>(lu_.rows());
  const lapack_int info =
      LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'C', n, 1, lc(lu_.data()), n, piv_.data(), lc(x.data()), n);
  require(info == 0, Errc::solver_failure, "getrs failed");
  return x;
}

double DenseLU::rcond() const {
  const lapack_int n = static_cast<lapack_int>(lu_.rows());
  if (n == 0) return 1.0;
  double rc = 0.0;
  const lapack_int info = LAPACKE_zgecon(LAPACK_COL_MAJOR, '1', n, lc(lu_.data()), n, anorm_, &rc);
  require(info == 0, Errc::solver_failure, "gecon failed");
  return rc;
}

EigResult eig(const Mat& A, bool want_vectors) {
  require(A.rows() == A.cols(), Errc::invalid_argument, "eig of a non-square matrix");
  const lapack_int n = static_cast<lapack_int>(A.rows());
  Mat work = A;
  EigResult r;
  r.values.resize(n);
  if (want_vectors) r.vectors.resize(n, n);
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n,
                                        lc(work.data()), n, lc(r.values.data()), nullptr, 1,
                                        want_vectors ? lc(r.vectors.data()) : nullptr, n);
  require(info == 0, Errc::eigs_failed, "geev did not converge (info " + std::to_string(info) + ")");
  return r;
}

Eigen::VectorXd singular_values(const Mat& A) {
  Mat work = A;
  const lapack_int m = static_cast<lapack_int>(A.rows()), n = static_cast<lapack_int>(A.cols());
  Eigen::VectorXd s(std::min(m, n));
  const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, lc(work.data()), m, s.data(),
                                         nullptr, 1, nullptr, 1);
  require(info == 0, Errc::solver_failure, "gesdd failed");
  return s;
}

Vec random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = {nd(gen), nd(gen)};
  return v;
}

NormEstimate op_norm(const LinOp& A, const LinOp& AH, Eigen::Index n, std::uint64_t seed,
                     int max_iter, double tol) {
  NormEstimate r;
  Vec x = random_vector(n, seed);
  x.normalize();
  Vec y(n), z(n);
  double prev = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    A(x, y);
    const double est = y.norm();
    r.value = std::max(r.value, est);
    r.iterations = it;
    if (est == 0.0) {
      r.converged = true;
      return r;
    }
    if (prev >= 0.0 && std::abs(est - prev) <= tol * est) {
      r.converged = true;
      return r;
    }
    prev = est;
    AH(y, z);
    const double nz = z.norm();
    if (nz == 0.0) {
      r.converged = true;
      return r;
    }
    x = z / nz;
  }
  return r;
}

namespace {

// orthogonalize w against the first k columns of V, twice
void orthogonalize(const Mat& V, Eigen::Index k, Vec& w, Eigen::Ref<Vec> h) {
  h.setZero();
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index i = 0; i < k; ++i) {
      const cplx c = V.col(i).dot(w);
      h[i] += c;
      w -= c * V.col(i);
    }
}

void givens(cplx a, cplx b, double& c, cplx& s) {
  if (b == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (a == 0.0) {
    c = 0.0;
    s = std::conj(b) / std::abs(b);
    return;
  }
  const double rho = std::hypot(std::abs(a), std::abs(b));
  c = std::abs(a) / rho;
  s = (a / std::abs(a)) * std::conj(b) / rho;
}

}  // namespace

GmresResult gmres(const LinOp& A, const Vec& b, const LinOp& prec, const GmresOptions& opt,
                  const Vec* x0) {
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = x0 ? *x0 : Vec::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x.setZero();
    res.converged = true;
    return res;
  }
  const int m = opt.restart;
  Mat V(n, m + 1);
  Mat H = Mat::Zero(m + 1, m);
  Vec g(m + 1), w(n), z(n), Ax(n);
  std::vector<double> cs(m);
  std::vector<cplx> sn(m);

  auto residual = [&]() {
    A(res.x, Ax);
    return Vec(b - Ax);
  };
  Vec r = residual();
  double beta = r.norm();
  res.rel_residual = beta / bnorm;
  while (res.rel_residual > opt.tol && res.iterations < opt.max_iter) {
    V.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    H.setZero();
    int k = 0;
    for (; k < m && res.iterations < opt.max_iter; ++k) {
      if (prec) prec(V.col(k), z); else z = V.col(k);
      A(z, w);
      orthogonalize(V, k + 1, w, H.col(k).head(k + 1));
      const double hn = w.norm();
      H(k + 1, k) = hn;
      if (hn > 0.0) V.col(k + 1) = w / hn;
      for (int i = 0; i < k; ++i) {
        const cplx t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -std::conj(sn[i]) * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      givens(H(k, k), H(k + 1, k), cs[k], sn[k]);
      H(k, k) = cs[k] * H(k, k) + sn[k] * H(k + 1, k);
      H(k + 1, k) = 0.0;
      g[k + 1] = -std::conj(sn[k]) * g[k];
      g[k] = cs[k] * g[k];
      ++res.iterations;
      if (std::abs(g[k + 1]) <= opt.tol * bnorm || hn == 0.0) {
        ++k;
        break;
      }
    }
    const Vec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    const Vec upd = V.leftCols(k) * y;
    if (prec) {
      prec(upd, z);
      res.x += z;
    } else {
      res.x += upd;
    }
    r = residual();
    beta = r.norm();
    res.rel_residual = beta / bnorm;
    if (beta == 0.0) break;
  }
  res.converged = res.rel_residual <= opt.tol;
  return res;
}

ArnoldiResult arnoldi_largest(const LinOp& op, Eigen::Index n, int count,
                              const ArnoldiOptions& opt, const Vec* start) {
  require(count >= 1, Errc::invalid_argument, "eigenvalue count must be positive");
  const int m = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, n));
  require(count <= m, Errc::invalid_argument, "Krylov dimension smaller than requested count");
  Mat V(n, m + 1);
  Mat H(m + 1, m);
  Vec v0 = start ? *start : random_vector(n, opt.seed);
  v0.normalize();
  Vec w(n);
  ArnoldiResult out;
  for (int restart = 0;; ++restart) {
    H.setZero();
    V.col(0) = v0;
    int meff = m;
    for (int j = 0; j < m; ++j) {
      op(V.col(j), w);
      orthogonalize(V, j + 1, w, H.col(j).head(j + 1));
      const double hn = w.norm();
      H(j + 1, j) = hn;
      if (hn <= 1e-14 * H.col(j).head(j + 1).norm()) {
        meff = j + 1;
        H(j + 1, j) = 0.0;
        break;
      }
      V.col(j + 1) = w / hn;
    }
    Eigen::ComplexEigenSolver<Mat> es(H.topLeftCorner(meff, meff));
    require(es.info() == Eigen::Success, Errc::eigs_failed, "Hessenberg eigensolve failed");
    std::vector<int> order(meff);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
    });
    const int c = std::min(count, meff);
    out.values.resize(c);
    out.residual_estimates.resize(c);
    Mat Y(meff, c);
    bool ok = true;
    for (int i = 0; i < c; ++i) {
      out.values[i] = es.eigenvalues()[order[i]];
      Y.col(i) = es.eigenvectors().col(order[i]).normalized();
      out.residual_estimates[i] = std::abs(H(meff, meff - 1) * Y(meff - 1, i));
      if (meff == m && out.residual_estimates[i] > opt.tol * std::abs(out.values[i])) ok = false;
    }
    out.restarts = restart;
    if (ok || restart >= opt.max_restarts) {
      out.converged = ok;
      out.vectors = V.leftCols(meff) * Y;
      for (int i = 0; i < c; ++i) out.vectors.col(i).normalize();
      return out;
    }
    v0 = V.leftCols(meff) * Y.rowwise().sum();
    v0.normalize();
  }
}

}  // namespace alphadyn::linalg
