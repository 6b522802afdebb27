#include "alphadyn/eigensolve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "alphadyn/error.hpp"

namespace alphadyn {

namespace {

struct RawPair {
  cplx p;
  linalg::Vec v;
};

bool right_first(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

std::vector<RawPair> dense_pairs(const ModalOperatorSpec& spec) {
  const linalg::EigResult r = linalg::eig(assemble_dense(spec), true);
  std::vector<RawPair> out;
  for (Eigen::Index i = 0; i < r.values.size(); ++i) out.push_back({r.values[i], r.vectors.col(i)});
  return out;
}

// eigenpairs of L nearest to sigma via Arnoldi on (L - sigma)^-1
std::vector<RawPair> shift_invert(const ModalOperator& L, cplx sigma, int count,
                                  const EigOptions& opt) {
  const ModalOperatorSpec& spec = L.spec();
  const auto n = static_cast<Eigen::Index>(L.dim());
  const bool use_lu = opt.inner == InnerSolver::dense_lu ||
                      (opt.inner == InnerSolver::automatic && spec.N <= opt.dense_lu_max_N);
  linalg::LinOp op;
  linalg::DenseLU lu;
  std::vector<double> pre;
  const linalg::LinOp Lop = L.linop();
  if (use_lu) {
    linalg::Mat A = assemble_dense(spec);
    A.diagonal().array() -= sigma;
    lu = linalg::DenseLU(std::move(A));
    op = [&lu](const linalg::Vec& x, linalg::Vec& y) { y = lu.solve(x); };
  } else {
    const auto& d = L.diffusion();
    pre.resize(L.dim());
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < L.modes(); ++i) {
        const cplx den = d[i] - sigma;
        pre[c * L.modes() + i] = 1.0 / std::max(std::abs(den), 1e-12);
      }
    op = [&](const linalg::Vec& x, linalg::Vec& y) {
      const linalg::LinOp shifted = [&](const linalg::Vec& a, linalg::Vec& b) {
        Lop(a, b);
        b -= sigma * a;
      };
      const linalg::LinOp prec = [&](const linalg::Vec& a, linalg::Vec& b) {
        b.resize(a.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) b[i] = -pre[i] * a[i];
      };
      const linalg::GmresResult g = linalg::gmres(shifted, x, prec, opt.gmres);
      require(g.converged, Errc::eigs_failed,
              "inner GMRES stalled at relative residual " + std::to_string(g.rel_residual));
      y = g.x;
    };
  }
  linalg::ArnoldiOptions ao = opt.arnoldi;
  ao.krylov_dim = std::max(ao.krylov_dim, 2 * count + 10);
  const linalg::ArnoldiResult ar = linalg::arnoldi_largest(op, n, count, ao);
  if (!ar.converged) {
    std::ostringstream os;
    os << "shift-invert Arnoldi did not converge after " << ar.restarts
       << " restarts; largest residual estimate " << ar.residual_estimates.maxCoeff();
    fail(Errc::eigs_failed, os.str());
  }
  std::vector<RawPair> out;
  for (Eigen::Index i = 0; i < ar.values.size(); ++i)
    out.push_back({sigma + 1.0 / ar.values[i], ar.vectors.col(i)});
  return out;
}

double default_shift(const SpectralField& U) {
  if (U.is_zero()) return 1e-3;
  return 0.5 * norms(U).sup_grad_spectral * kSupSafety + 1e-3;
}

std::vector<EigPair> finish(const ModalOperator& L, std::vector<RawPair> raw, std::size_t count,
                            const EigOptions& opt) {
  std::vector<EigPair> out;
  for (std::size_t i = 0; i < std::min(count, raw.size()); ++i) {
    SpectralField H = field_from_vector(raw[i].v, L.N(), FieldKind::complex_valued,
                                        L.spec().U.period_scale());
    EigPair e = make_eigpair(L, raw[i].p, std::move(H));
    if (!(e.residual <= opt.accept_residual)) {
      std::ostringstream os;
      os << "eigenpair " << i << " at p = (" << e.p.real() << ", " << e.p.imag()
         << ") has residual " << e.residual;
      fail(Errc::eigs_failed, os.str());
    }
    out.push_back(std::move(e));
  }
  return out;
}

bool use_dense(const ModalOperator& L, const EigOptions& opt) {
  return opt.method == EigMethod::dense ||
         (opt.method == EigMethod::automatic && L.dim() <= opt.dense_max_dim);
}

}  // namespace

EigPair make_eigpair(const ModalOperator& L, cplx p, SpectralField H) {
  const double n = l2(H);
  require(n > 0.0, Errc::eigs_failed, "zero eigenvector");
  H *= 1.0 / n;
  CVec3 m = mean(H);
  cplx ref = 0.0;
  if (m.cwiseAbs().maxCoeff() > 1e-8) {
    // near-ties resolve to the lowest index
    const double top = m.cwiseAbs().maxCoeff();
    for (int c = 0; c < 3; ++c)
      if (std::abs(m[c]) >= (1.0 - 1e-3) * top) {
        ref = m[c];
        break;
      }
  } else {
    Eigen::Index imax = 0;
    H.vec().cwiseAbs().maxCoeff(&imax);
    ref = H.data()[imax];
  }
  H *= std::conj(ref) / std::abs(ref);
  EigPair e;
  e.p = p;
  SpectralField r = L.apply(H);
  r.axpy(-p, H);
  e.residual = l2(r);
  e.modal_div_residual = max_divergence(H, L.spec().j);
  e.H = std::move(H);
  return e;
}

std::vector<EigPair> leading_eigs(const ModalOperatorSpec& spec, int count, const EigOptions& opt) {
  require(count >= 1, Errc::invalid_argument, "count must be >= 1");
  const ModalOperator L(spec);
  require(static_cast<std::size_t>(count) <= L.dim(), Errc::invalid_argument,
          "count exceeds the discretized dimension");
  std::vector<RawPair> raw;
  if (use_dense(L, opt)) {
    raw = dense_pairs(spec);
  } else {
    const cplx sigma = opt.shift.value_or(cplx(default_shift(spec.U)));
    raw = shift_invert(L, sigma, count, opt);
  }
  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawPair& a, const RawPair& b) { return right_first(a.p, b.p); });
  return finish(L, std::move(raw), static_cast<std::size_t>(count), opt);
}

std::vector<EigPair> nearest_eigs(const ModalOperatorSpec& spec, cplx target, int count,
                                  const EigOptions& opt) {
  require(count >= 1, Errc::invalid_argument, "count must be >= 1");
  const ModalOperator L(spec);
  std::vector<RawPair> raw = use_dense(L, opt) ? dense_pairs(spec) : shift_invert(L, target, count, opt);
  std::stable_sort(raw.begin(), raw.end(), [target](const RawPair& a, const RawPair& b) {
    return std::abs(a.p - target) < std::abs(b.p - target);
  });
  return finish(L, std::move(raw), static_cast<std::size_t>(count), opt);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, Errc::invalid_argument,
          "slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, Errc::invalid_argument, "log-log fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

KatoReport kato_first_order_check(const SpectralField& U, const Vec3& j_direction,
                                  const std::vector<double>& magnitudes, const KatoOptions& opt) {
  require(!magnitudes.empty(), Errc::invalid_argument, "no magnitudes");
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    require(magnitudes[i] > 0.0, Errc::invalid_argument, "magnitudes must be positive");
    require(i == 0 || magnitudes[i] < magnitudes[i - 1], Errc::invalid_argument,
            "magnitudes must decrease");
  }
  KatoReport rep;
  const AlphaMatrix a = alpha_matrix(U, j_direction, opt.cell);
  rep.direction = a.j_direction;
  rep.mu = a.eigenvalues;
  std::array<std::vector<double>, 3> rem;
  std::vector<double> maxrem;
  for (double m : magnitudes) {
    ModalOperatorSpec spec;
    spec.U = U;
    spec.j = m * rep.direction;
    spec.eps = opt.eps;
    spec.N = opt.N;
    const std::vector<EigPair> top = leading_eigs(spec, 3, opt.eig);
    KatoRow row;
    row.jmag = m;
    std::array<int, 3> perm{0, 1, 2}, best{0, 1, 2};
    double best_cost = INFINITY;
    do {
      double cost = 0.0;
      for (int l = 0; l < 3; ++l) cost += std::abs(top[perm[l]].p - rep.mu[l] * m);
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (int l = 0; l < 3; ++l) {
      row.p[l] = top[best[l]].p;
      row.residual[l] = top[best[l]].residual;
      row.prediction[l] = rep.mu[l] * m;
      row.remainder[l] = std::abs(row.p[l] - row.prediction[l]);
      row.max_remainder = std::max(row.max_remainder, row.remainder[l]);
      rem[l].push_back(row.remainder[l]);
    }
    maxrem.push_back(row.max_remainder);
    rep.rows.push_back(row);
  }
  if (magnitudes.size() >= 2) {
    rep.slope = loglog_slope(magnitudes, maxrem);
    for (int l = 0; l < 3; ++l) {
      const bool positive = std::all_of(rem[l].begin(), rem[l].end(), [](double r) { return r > 0.0; });
      rep.slopes[l] = positive ? loglog_slope(magnitudes, rem[l]) : 0.0;
    }
  }
  return rep;
}

ContinuationResult continue_eigpair(const ModalOperatorSpec& spec, const EigPair& start,
                                    double target_eps, const ContinuationOptions& opt) {
  require(target_eps > 0.0 && target_eps <= spec.eps, Errc::invalid_argument,
          "target diffusivity must lie in (0, start eps]");
  require(opt.d_eps > 0.0, Errc::invalid_argument, "step must be positive");
  require(start.H.N() == spec.N, Errc::invalid_truncation, "start eigenvector truncation mismatch");
  ContinuationResult res;
  res.pair = start;
  res.achieved_eps = spec.eps;
  res.min_re_p = start.p.real();
  const double floor = 0.5 * start.p.real();
  double step = opt.d_eps;
  int halvings = 0;
  ModalOperatorSpec cur_spec = spec;
  while (res.achieved_eps > target_eps) {
    const double e_next = std::max(target_eps, res.achieved_eps - step);
    std::string why;
    try {
      // gap to the nearest other eigenvalue at the current diffusivity
      const cplx p = res.pair.p;
      const cplx sigma = p + cplx(0.0, 1e-10 + 1e-8 * std::abs(p));
      const std::vector<EigPair> near = nearest_eigs(cur_spec, sigma, opt.neighbours, opt.eig);
      double gap = INFINITY;
      for (std::size_t i = 1; i < near.size(); ++i) gap = std::min(gap, std::abs(near[i].p - near[0].p));
      require(std::abs(near[0].p - p) < 0.25 * gap, Errc::continuation_stalled,
              "tracked eigenvalue lost");
      ModalOperatorSpec next_spec = cur_spec;
      next_spec.eps = e_next;
      const Contour c{p, 0.5 * gap, 16};
      const RieszProjector P = riesz_projector(next_spec, c, opt.riesz);
      if (P.rank_estimate() != 1) {
        why = "contour encloses " + std::to_string(P.rank_estimate()) + " eigenvalues at eps " +
              std::to_string(e_next);
      } else {
        SpectralField Hn = P.apply(res.pair.H);
        require(l2(Hn) > 1e-3, Errc::continuation_stalled, "projection lost the eigenvector");
        const ModalOperator L(next_spec);
        const cplx pn = inner(Hn, L.apply(Hn)) / inner(Hn, Hn);
        EigPair e = make_eigpair(L, pn, std::move(Hn));
        if (e.residual > opt.residual_tol) {
          why = "projected vector residual " + std::to_string(e.residual);
        } else if (e.p.real() < floor) {
          res.stall_reason = "Re p fell below half its starting value at eps " + std::to_string(e_next);
          return res;
        } else {
          ContinuationStep s;
          s.eps = e_next;
          s.p = e.p;
          s.increment = l2(e.H - res.pair.H);
          s.lipschitz = s.increment / (res.achieved_eps - e_next);
          s.radius = c.radius;
          s.nodes = P.contour().nodes;
          res.steps.push_back(s);
          res.max_lipschitz = std::max(res.max_lipschitz, s.lipschitz);
          res.min_re_p = std::min(res.min_re_p, e.p.real());
          res.pair = std::move(e);
          res.achieved_eps = e_next;
          cur_spec = next_spec;
          continue;
        }
      }
    } catch (const Error& err) {
      if (err.code() != Errc::contour_touches_spectrum && err.code() != Errc::continuation_stalled &&
          err.code() != Errc::eigs_failed)
        throw;
      why = err.what();
    }
    if (++halvings > opt.max_halvings) {
      res.stall_reason = why;
      return res;
    }
    step *= 0.5;
  }
  res.reached = true;
  return res;
}

}  // namespace alphadyn
