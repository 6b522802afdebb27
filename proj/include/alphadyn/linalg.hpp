#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace alphadyn::linalg {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using LinOp = std::function<void(const Vec& x, Vec& y)>;

// LU with partial pivoting (LAPACK getrf)
class DenseLU {
 public:
  DenseLU() = default;
  explicit DenseLU(Mat A);

  Eigen::Index n() const { return lu_.rows(); }
  Vec solve(const Vec& b) const;
  Mat solve(const Mat& B) const;
  // A^H x = b
  Vec solve_adjoint(const Vec& b) const;
  // reciprocal 1-norm condition number estimate
  double rcond() const;

 private:
  Mat lu_;
  std::vector<int> piv_;
  double anorm_ = 0.0;
};

struct EigResult {
  Vec values;
  Mat vectors;  // empty unless requested
};
// general complex eigenproblem; throws eigs-failed on LAPACK failure
EigResult eig(const Mat& A, bool want_vectors);
Eigen::VectorXd singular_values(const Mat& A);

Vec random_vector(Eigen::Index n, std::uint64_t seed);

// power iteration on A^H A
struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};
NormEstimate op_norm(const LinOp& A, const LinOp& AH, Eigen::Index n, std::uint64_t seed,
                     int max_iter = 300, double tol = 1e-10);

struct GmresOptions {
  int restart = 60;
  int max_iter = 2000;
  double tol = 1e-12;
};
struct GmresResult {
  Vec x;
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};
// right-preconditioned restarted GMRES; prec may be empty
GmresResult gmres(const LinOp& A, const Vec& b, const LinOp& prec, const GmresOptions& opt,
                  const Vec* x0 = nullptr);

struct ArnoldiOptions {
  int krylov_dim = 40;
  int max_restarts = 30;
  double tol = 1e-12;
  std::uint64_t seed = 1;
};
struct ArnoldiResult {
  Vec values;            // Ritz values of the operator, largest modulus first
  Mat vectors;           // unit Ritz vectors
  Eigen::VectorXd residual_estimates;
  int restarts = 0;
  bool converged = false;
};
// largest-modulus eigenvalues of op by explicitly restarted Arnoldi
ArnoldiResult arnoldi_largest(const LinOp& op, Eigen::Index n, int count,
                              const ArnoldiOptions& opt, const Vec* start = nullptr);

}  // namespace alphadyn::linalg
