#include "alphadyn/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "alphadyn/error.hpp"

namespace alphadyn {

namespace {

constexpr double kPi = std::numbers::pi;

int truncation_from_dim(Eigen::Index n) {
  const int side = static_cast<int>(std::lround(std::cbrt(static_cast<double>(n) / 3.0)));
  return (side - 1) / 2;
}

}  // namespace

linalg::Vec RieszProjector::apply(const linalg::Vec& f) const {
  linalg::Vec out = linalg::Vec::Zero(f.size());
  for (std::size_t m = 0; m < lu_.size(); ++m) out += w_[m] * lu_[m].solve(f);
  return out;
}

linalg::Mat RieszProjector::apply(const linalg::Mat& F) const {
  linalg::Mat out = linalg::Mat::Zero(F.rows(), F.cols());
  for (std::size_t m = 0; m < lu_.size(); ++m) out += w_[m] * lu_[m].solve(F);
  return out;
}

linalg::Vec RieszProjector::apply_adjoint(const linalg::Vec& f) const {
  linalg::Vec out = linalg::Vec::Zero(f.size());
  for (std::size_t m = 0; m < lu_.size(); ++m) out += std::conj(w_[m]) * lu_[m].solve_adjoint(f);
  return out;
}

SpectralField RieszProjector::apply(const SpectralField& f) const {
  require(static_cast<Eigen::Index>(f.size()) == dim_, Errc::invalid_truncation,
          "field truncation does not match the projector");
  const linalg::Vec y = apply(linalg::Vec(f.vec()));
  return field_from_vector(y, N_, FieldKind::complex_valued, period_scale_);
}

RieszProjector riesz_projector(const linalg::Mat& L, const Contour& contour,
                               const RieszOptions& opt, double period_scale) {
  require(L.rows() == L.cols(), Errc::invalid_argument, "operator matrix must be square");
  require(contour.nodes >= 8, Errc::invalid_argument, "contour needs at least 8 nodes");
  require(contour.radius > 0.0 && std::isfinite(contour.radius), Errc::invalid_argument,
          "contour radius must be positive");
  require(opt.probes >= 1, Errc::invalid_argument, "need at least one probe");
  const Eigen::Index n = L.rows();
  linalg::Mat X(n, opt.probes);
  for (int p = 0; p < opt.probes; ++p) X.col(p) = linalg::random_vector(n, opt.seed + 7919 * p);

  int M = contour.nodes;
  for (;;) {
    RieszProjector P;
    P.contour_ = contour;
    P.contour_.nodes = M;
    P.dim_ = n;
    P.period_scale_ = period_scale;
    P.N_ = truncation_from_dim(n);
    for (int m = 0; m < M; ++m) {
      const double th = 2.0 * kPi * (m + 0.5) / M;
      const cplx e(std::cos(th), std::sin(th));
      const cplx mu = contour.center + contour.radius * e;
      linalg::Mat R = -L;
      R.diagonal().array() += mu;
      linalg::DenseLU lu;
      double rc = 0.0;
      try {
        lu = linalg::DenseLU(std::move(R));
        rc = lu.rcond();
      } catch (const Error&) {
        rc = 0.0;
      }
      if (rc < opt.rcond_min) {
        std::ostringstream os;
        os << "node " << m << " at mu = (" << mu.real() << ", " << mu.imag()
           << ") has reciprocal condition " << rc;
        fail(Errc::contour_touches_spectrum, os.str());
      }
      P.mu_.push_back(mu);
      P.w_.push_back(contour.radius * e / static_cast<double>(M));
      P.lu_.push_back(std::move(lu));
    }
    const linalg::Mat Y = P.apply(X);
    const linalg::Mat Z = P.apply(Y);
    double defect = 0.0;
    for (int p = 0; p < opt.probes; ++p)
      defect = std::max(defect, (Z.col(p) - Y.col(p)).norm() / X.col(p).norm());
    P.defect_ = defect;
    if (defect <= opt.idempotency_tol || !opt.adapt || 2 * M > opt.max_nodes) {
      P.sv_ = linalg::singular_values(Y);
      const double top = P.sv_.size() ? P.sv_.maxCoeff() : 0.0;
      P.rank_ = 0;
      if (top > 0.0)
        for (Eigen::Index i = 0; i < P.sv_.size(); ++i)
          if (P.sv_[i] > opt.rank_tol * top) ++P.rank_;
      return P;
    }
    M *= 2;
  }
}

RieszProjector riesz_projector(const ModalOperatorSpec& spec, const Contour& contour,
                               const RieszOptions& opt) {
  return riesz_projector(assemble_dense(spec), contour, opt, spec.U.period_scale());
}

DistanceReport projector_distance_bound(const ModalOperatorSpec& spec0,
                                        const ModalOperatorSpec& spec1, const Contour& contour,
                                        const RieszOptions& opt) {
  require(spec0.N == spec1.N, Errc::invalid_truncation, "specs must share the truncation");
  const linalg::Mat T0 = assemble_dense(spec0);
  const linalg::Mat T1 = assemble_dense(spec1);
  const linalg::Mat D = T1 - T0;
  const linalg::Mat DH = D.adjoint();
  const RieszProjector P0 = riesz_projector(T0, contour, opt, spec0.U.period_scale());
  RieszOptions fixed = opt;
  Contour c1 = contour;
  c1.nodes = P0.contour().nodes;
  fixed.adapt = false;
  const RieszProjector P1 = riesz_projector(T1, c1, fixed, spec1.U.period_scale());
  const Eigen::Index n = T0.rows();

  DistanceReport rep;
  rep.nodes = P0.contour().nodes;
  rep.contour_length = 2.0 * kPi * contour.radius;
  rep.rank0 = P0.rank_estimate();
  rep.rank1 = P1.rank_estimate();
  const bool zero = D.cwiseAbs().maxCoeff() == 0.0;
  const linalg::Mat I = linalg::Mat::Identity(n, n);
  // dense 2-norms: the operators are assembled anyway
  for (std::size_t m = 0; m < P0.nodes().size(); ++m) {
    // (T0 - mu)^-1 = -(mu - T0)^-1; signs do not change norms
    const linalg::Mat R = P0.resolvent_lu(m).solve(I);
    rep.resolvent_sup = std::max(rep.resolvent_sup, linalg::singular_values(R)[0]);
    if (!zero) rep.M = std::max(rep.M, linalg::singular_values(D * R)[0]);
  }
  require(rep.M < 1.0, Errc::bound_inapplicable,
          "perturbation relative to the resolvent is " + std::to_string(rep.M) + " >= 1");
  rep.bound = rep.contour_length / (2.0 * kPi) * rep.M / (1.0 - rep.M) * rep.resolvent_sup;
  if (!zero) rep.measured = linalg::singular_values(P0.apply(I) - P1.apply(I))[0];
  rep.holds = rep.measured <= rep.bound;
  return rep;
}

}  // namespace alphadyn
