#include "alphadyn/evolve.hpp"

#include <algorithm>
#include <cmath>

#include "alphadyn/error.hpp"
#include "alphadyn/simd.hpp"

namespace alphadyn {

double default_dt(const ModalOperatorSpec& spec) {
  const double u = spec.U.is_zero() ? 0.0 : norms(spec.U).sup_estimate;
  return 0.05 / (spec.N * u + 1.0);
}

Stepper::Stepper(const ModalOperatorSpec& spec, double dt) : L_(spec), dt_(dt) {
  require(dt > 0.0 && std::isfinite(dt), Errc::invalid_argument, "time step must be positive");
  E_.resize(L_.modes());
  for (std::size_t i = 0; i < E_.size(); ++i) E_[i] = std::exp(L_.diffusion()[i] * dt);
  a_.resize(L_.dim());
  b_.resize(L_.dim());
  c_.resize(L_.dim());
}

void Stepper::step(SpectralField& H) const {
  require(H.N() == L_.N(), Errc::invalid_truncation, "state truncation does not match operator");
  const auto& K = simd::active();
  const std::size_t n = L_.dim(), m = L_.modes();
  cplx* h = H.data();
  // a = A H, b = E (H + dt a)
  L_.apply_advection(h, a_.data());
  std::copy(h, h + n, c_.begin());
  K.axpy(dt_, a_.data(), c_.data(), n);
  for (int c = 0; c < 3; ++c) K.mul_real(E_.data(), c_.data() + c * m, b_.data() + c * m, m);
  // c = A b
  L_.apply_advection(b_.data(), c_.data());
  // H <- E (H + dt/2 a) + dt/2 c
  K.axpy(0.5 * dt_, a_.data(), h, n);
  for (int c = 0; c < 3; ++c) K.mul_real(E_.data(), h + c * m, h + c * m, m);
  K.axpy(0.5 * dt_, c_.data(), h, n);
  const double nn = K.norm2(h, n);
  require(std::isfinite(nn), Errc::blow_up_detected, "non-finite state after time step");
}

SpectralField step(const SpectralField& H, const ModalOperatorSpec& spec, double dt) {
  SpectralField out = H;
  out.set_kind(FieldKind::complex_valued);
  Stepper(spec, dt).step(out);
  return out;
}

namespace {

double h1_squared(const ModalOperator& L, const SpectralField& H) {
  const auto& d = L.diffusion();
  double s = 0.0;
  const double eps = L.spec().eps;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < L.modes(); ++i) s += -d[i] / eps * std::norm(H.component(c)[i]);
  return s;
}

}  // namespace

void evolve(EvolutionRun& run, const EvolveOptions& opt) {
  require(run.t_end > 0.0, Errc::invalid_argument, "t_end must be positive");
  require(opt.samples >= 2, Errc::invalid_argument, "need at least two samples");
  require(run.H0.N() == run.spec.N, Errc::invalid_truncation, "initial field truncation mismatch");
  if (run.dt <= 0.0) run.dt = default_dt(run.spec);
  const long nsteps = std::max(1L, std::lround(std::ceil(run.t_end / run.dt - 1e-9)));
  const double dt = run.t_end / static_cast<double>(nsteps);
  require(run.t_end > 10.0 * dt, Errc::invalid_argument, "t_end must exceed ten time steps");
  run.dt = dt;
  const Stepper st(run.spec, dt);
  const ModalOperator& L = st.op();
  if (run.spec.U.is_zero()) {
    run.grad_bound = run.sup_bound = 0.0;
  } else {
    const Norms nu = norms(run.spec.U, opt.norms);
    run.grad_bound = nu.sup_grad_spectral * kSupSafety;
    run.sup_bound = nu.sup_estimate * kSupSafety;
  }
  const double eps = run.spec.eps;
  SpectralField H = run.H0;
  H.set_kind(FieldKind::complex_valued);
  const double n0 = l2(H);
  const long every = std::max(1L, nsteps / opt.samples);
  run.trace.clear();
  double integral = 0.0;
  double h1_prev = h1_squared(L, H);
  auto record = [&](double t) {
    TraceSample s;
    s.t = t;
    s.norm = l2(H);
    s.div_drift = s.norm > 0.0 ? max_divergence(H, run.spec.j) / s.norm : 0.0;
    if (n0 > 0.0) {
      s.slack_growth = 1.0 - s.norm / (n0 * std::exp(run.grad_bound * t));
      const double lhs = s.norm * s.norm + 0.5 * eps * integral;
      s.slack_energy = 1.0 - lhs / (n0 * n0 * std::exp(run.sup_bound * run.sup_bound * t / eps));
    }
    run.trace.push_back(s);
  };
  record(0.0);
  for (long i = 1; i <= nsteps; ++i) {
    st.step(H);
    if (opt.project_divergence && max_divergence(H, run.spec.j) > opt.div_threshold * l2(H))
      H = project_divergence_free(H, run.spec.j);
    const double h1 = h1_squared(L, H);
    integral += 0.5 * dt * (h1 + h1_prev);
    h1_prev = h1;
    if (i % every == 0 || i == nsteps) record(static_cast<double>(i) * dt);
  }
  run.steps = nsteps;
  run.final_state = std::move(H);
}

GrowthFit fit_growth(const EvolutionRun& run, double fraction, double r2_threshold) {
  require(fraction > 0.0 && fraction <= 1.0, Errc::invalid_argument, "fit fraction must be in (0, 1]");
  require(run.trace.size() >= 3, Errc::invalid_argument, "trace too short to fit");
  const double t_start = run.trace.back().t * (1.0 - fraction);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int n = 0;
  GrowthFit f;
  f.t1 = run.trace.back().t;
  f.t0 = f.t1;
  for (const TraceSample& s : run.trace) {
    if (s.t < t_start - 1e-12) continue;
    require(s.norm > 0.0, Errc::invalid_argument, "cannot fit a vanishing trace");
    const double y = std::log(s.norm);
    f.t0 = std::min(f.t0, s.t);
    sx += s.t;
    sy += y;
    sxx += s.t * s.t;
    sxy += s.t * y;
    syy += y * y;
    ++n;
  }
  require(n >= 2, Errc::invalid_argument, "fit window holds fewer than two samples");
  const double dn = n;
  const double cxx = sxx - sx * sx / dn, cxy = sxy - sx * sy / dn, cyy = syy - sy * sy / dn;
  f.gamma = cxy / cxx;
  f.r2 = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  f.reliable = f.r2 >= r2_threshold;
  return f;
}

GrowthFit evolve_and_fit(EvolutionRun& run, const EvolveOptions& opt, double fraction) {
  if (run.trace.empty()) evolve(run, opt);
  return fit_growth(run, fraction);
}

EnergyReport energy_monitor(const EvolutionRun& run, double tol) {
  EnergyReport r;
  require(!run.trace.empty(), Errc::invalid_argument, "empty trace");
  r.min_slack_growth = r.min_slack_energy = INFINITY;
  for (const TraceSample& s : run.trace) {
    r.min_slack_growth = std::min(r.min_slack_growth, s.slack_growth);
    r.min_slack_energy = std::min(r.min_slack_energy, s.slack_energy);
    if (s.slack_growth < -tol || s.slack_energy < -tol) ++r.violations;
  }
  r.ok = r.violations == 0;
  return r;
}

double divergence_drift(const EvolutionRun& run) {
  double d = 0.0;
  for (const TraceSample& s : run.trace) d = std::max(d, s.div_drift);
  return d;
}

}  // namespace alphadyn
