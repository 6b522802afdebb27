#pragma once

// Time stepping of dH/dt = L(j, eps) H with an integrating factor for the
// shifted diffusion and Heun for the advective part:
//
//   H*      = E (H + dt A H)
//   H_{n+1} = E H + dt/2 (E A H + A H*),   E = exp(-eps |k/s + j|^2 dt)

#include <vector>

#include "alphadyn/modal_op.hpp"

namespace alphadyn {

// 0.05 / (N |U|_inf + 1)
double default_dt(const ModalOperatorSpec& spec);

class Stepper {
 public:
  Stepper(const ModalOperatorSpec& spec, double dt);
  double dt() const { return dt_; }
  const ModalOperator& op() const { return L_; }
  // in place; blow-up-detected on non-finite output
  void step(SpectralField& H) const;

 private:
  ModalOperator L_;
  double dt_;
  std::vector<double> E_;
  mutable std::vector<cplx> a_, b_, c_;
};

SpectralField step(const SpectralField& H, const ModalOperatorSpec& spec, double dt);

struct TraceSample {
  double t = 0.0;
  double norm = 0.0;
  double slack_growth = 0.0;  // 1 - |H| / (|H0| exp(G t))
  double slack_energy = 0.0;  // 1 - (|H|^2 + eps/2 int |H|_{H1}^2) / (|H0|^2 exp(S^2 t / eps))
  double div_drift = 0.0;     // max_k |(k/s + j) . H(k)| / |H|
};

struct EvolveOptions {
  int samples = 200;
  bool project_divergence = false;
  double div_threshold = 1e-8;
  NormOptions norms;
};

struct EvolutionRun {
  ModalOperatorSpec spec;
  SpectralField H0;
  double dt = 0.0;  // 0 picks default_dt
  double t_end = 20.0;
  std::vector<TraceSample> trace;
  SpectralField final_state;
  double grad_bound = 0.0;  // G: sampled |grad U|_inf times the safety factor
  double sup_bound = 0.0;   // S: sampled |U|_inf times the safety factor
  long steps = 0;
};

// fills trace, final_state and the bounds
void evolve(EvolutionRun& run, const EvolveOptions& opt = {});

struct GrowthFit {
  double gamma = 0.0;
  double t0 = 0.0, t1 = 0.0;
  double r2 = 0.0;
  bool reliable = false;
};
GrowthFit fit_growth(const EvolutionRun& run, double fraction = 0.5, double r2_threshold = 0.99);
// evolves first when the trace is empty
GrowthFit evolve_and_fit(EvolutionRun& run, const EvolveOptions& opt = {}, double fraction = 0.5);

struct EnergyReport {
  double min_slack_growth = 0.0;
  double min_slack_energy = 0.0;
  int violations = 0;
  bool ok = true;
};
EnergyReport energy_monitor(const EvolutionRun& run, double tol = 1e-6);

double divergence_drift(const EvolutionRun& run);

}  // namespace alphadyn
