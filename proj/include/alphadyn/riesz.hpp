#pragma once

// Spectral projectors (1/2 pi i) \oint (mu - L)^-1 dmu on circles, by the
// trapezoid rule at nodes mu_m = c + r exp(i theta_m), theta_m = 2 pi (m + 1/2) / M.

#include <cstdint>
#include <vector>

#include "alphadyn/linalg.hpp"
#include "alphadyn/modal_op.hpp"

namespace alphadyn {

struct Contour {
  cplx center = 0.0;
  double radius = 0.5;
  int nodes = 16;
};

struct RieszOptions {
  // double the node count until the defect is below this
  double idempotency_tol = 1e-8;
  bool adapt = true;
  int max_nodes = 512;
  // smallest acceptable reciprocal condition number of mu - L at a node
  double rcond_min = 1e-13;
  int probes = 8;
  std::uint64_t seed = 7;
  // singular values above rank_tol * largest count toward the rank
  double rank_tol = 1e-6;
};

class RieszProjector {
 public:
  const Contour& contour() const { return contour_; }
  int rank_estimate() const { return rank_; }
  double idempotency_defect() const { return defect_; }
  const Eigen::VectorXd& probe_singular_values() const { return sv_; }
  Eigen::Index dim() const { return dim_; }

  linalg::Vec apply(const linalg::Vec& f) const;
  linalg::Mat apply(const linalg::Mat& F) const;
  linalg::Vec apply_adjoint(const linalg::Vec& f) const;
  SpectralField apply(const SpectralField& f) const;

  // node data, for resolvent estimates
  const std::vector<cplx>& nodes() const { return mu_; }
  const linalg::DenseLU& resolvent_lu(std::size_t m) const { return lu_[m]; }

 private:
  friend RieszProjector riesz_projector(const linalg::Mat&, const Contour&, const RieszOptions&,
                                        double);
  Contour contour_;
  Eigen::Index dim_ = 0;
  std::vector<cplx> mu_;
  std::vector<cplx> w_;
  std::vector<linalg::DenseLU> lu_;
  int rank_ = 0;
  double defect_ = 0.0;
  Eigen::VectorXd sv_;
  double period_scale_ = 1.0;
  int N_ = 0;
};

// contour-touches-spectrum when a node resolvent is numerically singular
RieszProjector riesz_projector(const linalg::Mat& L, const Contour& contour,
                               const RieszOptions& opt = {}, double period_scale = 1.0);
RieszProjector riesz_projector(const ModalOperatorSpec& spec, const Contour& contour,
                               const RieszOptions& opt = {});

struct DistanceReport {
  double M = 0.0;              // max over nodes of |(T1 - T0)(T0 - mu)^-1|
  double resolvent_sup = 0.0;  // max over nodes of |(T0 - mu)^-1|
  double contour_length = 0.0;
  double bound = 0.0;
  double measured = 0.0;  // |P0 - P1|
  int rank0 = 0, rank1 = 0;
  int nodes = 0;
  bool holds = false;
};
// bound-inapplicable when M >= 1
DistanceReport projector_distance_bound(const ModalOperatorSpec& spec0,
                                        const ModalOperatorSpec& spec1, const Contour& contour,
                                        const RieszOptions& opt = {});

}  // namespace alphadyn
