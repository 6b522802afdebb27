#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alphadyn/alpha.hpp"
#include "alphadyn/modal_op.hpp"
#include "alphadyn/riesz.hpp"

namespace alphadyn {

struct EigPair {
  cplx p = 0.0;
  SpectralField H;
  double residual = 0.0;            // |L H - p H| with |H| = 1
  double modal_div_residual = 0.0;  // max_k |(k/s + j) . H(k)|
};

// unit norm, phase from the mean's largest-modulus component (or the
// largest coefficient when the mean vanishes), residuals filled in
EigPair make_eigpair(const ModalOperator& L, cplx p, SpectralField H);

enum class EigMethod { automatic, dense, krylov };
enum class InnerSolver { automatic, dense_lu, gmres };

struct EigOptions {
  EigMethod method = EigMethod::automatic;
  // automatic picks dense up to this order
  std::size_t dense_max_dim = 400;
  InnerSolver inner = InnerSolver::automatic;
  // automatic inner solver uses LU up to this truncation
  int dense_lu_max_N = 4;
  // real shift for shift-invert; default 0.5 |grad U| + 1e-3
  std::optional<cplx> shift;
  linalg::ArnoldiOptions arnoldi;
  linalg::GmresOptions gmres;
  // pairs with a larger residual raise eigs-failed
  double accept_residual = 1e-8;
};

// the `count` eigenvalues of largest real part, descending
std::vector<EigPair> leading_eigs(const ModalOperatorSpec& spec, int count,
                                  const EigOptions& opt = {});
// the `count` eigenvalues closest to `target`, nearest first (shift-invert)
std::vector<EigPair> nearest_eigs(const ModalOperatorSpec& spec, cplx target, int count,
                                  const EigOptions& opt = {});

struct KatoRow {
  double jmag = 0.0;
  std::array<cplx, 3> p{};           // matched to the predictions below
  std::array<double, 3> residual{};  // eigenpair residuals
  std::array<cplx, 3> prediction{};  // mu_l |j|
  std::array<double, 3> remainder{};
  double max_remainder = 0.0;
};
struct KatoReport {
  Vec3 direction = Vec3::Zero();
  std::array<cplx, 3> mu{};
  std::vector<KatoRow> rows;
  double slope = 0.0;  // fit of log max remainder against log |j|
  std::array<double, 3> slopes{};
};
struct KatoOptions {
  double eps = 1.0;
  int N = 3;
  CellOptions cell;
  EigOptions eig;
};
KatoReport kato_first_order_check(const SpectralField& U, const Vec3& j_direction,
                                  const std::vector<double>& magnitudes,
                                  const KatoOptions& opt = {});

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ContinuationOptions {
  double d_eps = 0.05;
  int max_halvings = 8;
  RieszOptions riesz;
  EigOptions eig;
  double residual_tol = 1e-8;
  // number of neighbouring eigenvalues examined for the gap
  int neighbours = 4;
};
struct ContinuationStep {
  double eps = 1.0;
  cplx p = 0.0;
  double increment = 0.0;  // |H(eps') - H(eps)|
  double lipschitz = 0.0;  // increment / |eps' - eps|
  double radius = 0.0;
  int nodes = 0;
};
struct ContinuationResult {
  EigPair pair;
  double achieved_eps = 1.0;
  bool reached = false;
  std::string stall_reason;
  std::vector<ContinuationStep> steps;
  double min_re_p = 0.0;
  double max_lipschitz = 0.0;
  double eta() const { return 1.0 - achieved_eps; }
};
// homotopy from start (an eigenpair of spec) down to target_eps; never
// throws on collision, reports the achieved window instead
ContinuationResult continue_eigpair(const ModalOperatorSpec& spec, const EigPair& start,
                                    double target_eps, const ContinuationOptions& opt = {});

}  // namespace alphadyn
