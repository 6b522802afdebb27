// Acceptance suite: one line per criterion, exit status 1 if any fails.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "alphadyn/alpha.hpp"
#include "alphadyn/bloch.hpp"
#include "alphadyn/eigensolve.hpp"
#include "alphadyn/evolve.hpp"
#include "alphadyn/glue.hpp"
#include "alphadyn/modal_op.hpp"
#include "alphadyn/riesz.hpp"

using namespace alphadyn;

namespace {

constexpr double kDelta = 0.05;
const Vec3 kJStar(0.001, 0.00075, 0.0);

SpectralField abc_flow() { return kDelta * make_abc({1, 1, 1}, 1); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// every evolution run feeds the energy-bound criterion
std::vector<EnergyReport> g_energy;

Eigen::Matrix3cd cross_matrix(const Vec3& j) {
  Eigen::Matrix3cd X;
  X << 0, -j[2], j[1], j[2], 0, -j[0], -j[1], j[0], 0;
  return X;
}

Outcome abc_closed_form_check() {
  std::mt19937_64 g(20240601);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst_I = 0.0, worst_mu = 0.0;
  for (int t = 0; t < 5; ++t) {
    const AbcParams p{u(g), u(g), u(g)};
    const Eigen::Matrix3d I = first_order_matrix(make_abc(p, 2));
    const Eigen::Vector3d d(p.b * p.b, p.c * p.c, p.a * p.a);
    worst_I = std::max(worst_I, (I - Eigen::Matrix3d(d.asDiagonal())).cwiseAbs().maxCoeff());
    const Vec3 j(u(g), u(g), u(g));
    const Eigen::Matrix3cd L = cplx(0, 1) * cross_matrix(j.normalized()) * d.cast<cplx>().asDiagonal();
    Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(L);
    std::array<cplx, 3> ev{es.eigenvalues()[0], es.eigenvalues()[1], es.eigenvalues()[2]};
    sort_eigenvalues(ev);
    const std::array<cplx, 3> cf = abc_closed_form(p, j);
    for (int l = 0; l < 3; ++l) worst_mu = std::max(worst_mu, std::abs(ev[l] - cf[l]));
  }
  return {worst_I <= 1e-13 && worst_mu <= 1e-12,
          "max |I_U - diag(b^2,c^2,a^2)| = " + fmt("%.2e", worst_I) + " (tol 1e-13), max eigenvalue error " +
              fmt("%.2e", worst_mu) + " (tol 1e-12)"};
}

Outcome kernel_dimension() {
  const linalg::Mat L0 = assemble_dense({abc_flow(), Vec3::Zero(), 1.0, 3});
  const linalg::EigResult e = linalg::eig(L0, false);
  int small = 0;
  double worst_re = -INFINITY, largest_small = 0.0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const cplx p = e.values[i];
    if (std::abs(p) < 1e-6) {
      ++small;
      largest_small = std::max(largest_small, std::abs(p));
    } else {
      worst_re = std::max(worst_re, p.real());
    }
  }
  return {small == 3 && worst_re <= -0.5,
          std::to_string(small) + " eigenvalues with |p| < 1e-6 (largest " + fmt("%.1e", largest_small) +
              "), rest max Re p = " + fmt("%.4f", worst_re) + " (need <= -0.5), dim " +
              std::to_string(L0.rows())};
}

Outcome kato_slope() {
  KatoOptions o;
  o.N = 3;
  const KatoReport k = kato_first_order_check(abc_flow(), Vec3(1, 0, 0), {0.01, 0.005, 0.0025}, o);
  std::ostringstream os;
  os << "remainder slope " << fmt("%.4f", k.slope) << " (need >= 1.8), branch slopes "
     << fmt("%.3f", k.slopes[0]) << "/" << fmt("%.3f", k.slopes[1]) << "/" << fmt("%.3f", k.slopes[2]);
  return {k.slope >= 1.8, os.str()};
}

Outcome positive_growth() {
  const Vec3 dir = kJStar.normalized();
  double best_re = -INFINITY, best_mag = 0.0;
  EigPair best;
  for (double m : {0.0005, 0.00125, 0.0025, 0.005}) {
    const EigPair e = leading_eigs({abc_flow(), m * dir, 1.0, 3}, 1)[0];
    if (e.p.real() > best_re) {
      best_re = e.p.real();
      best_mag = m;
      best = e;
    }
  }
  if (!(best_re > 0)) return {false, "no scanned |j| gives Re p > 0 (best " + fmt("%.3e", best_re) + ")"};
  EvolutionRun run;
  run.spec = {abc_flow(), best_mag * dir, 1.0, 3};
  run.H0 = best.H;
  run.t_end = 20.0;
  const GrowthFit fit = evolve_and_fit(run);
  g_energy.push_back(energy_monitor(run));
  const double rel = std::abs(fit.gamma - best_re) / best_re;
  return {fit.reliable && rel <= 0.01,
          "|j| = " + fmt("%g", best_mag) + ": Re p = " + fmt("%.6e", best_re) + ", gamma = " +
              fmt("%.6e", fit.gamma) + ", rel. diff " + fmt("%.2e", rel) + " (tol 1e-2), r2 " +
              fmt("%.8f", fit.r2)};
}

Outcome eps_continuation() {
  const ModalOperatorSpec s{abc_flow(), kJStar, 1.0, 2};
  const EigPair start = leading_eigs(s, 1)[0];
  const double half = 0.5 * start.p.real();
  std::vector<ContinuationResult> runs;
  for (double d : {0.01, 0.005}) {
    ContinuationOptions o;
    o.d_eps = d;
    o.max_halvings = 0;
    runs.push_back(continue_eigpair(s, start, 0.95, o));
  }
  const ContinuationResult& a = runs[0];
  const ContinuationResult& b = runs[1];
  const double eta = std::min(a.eta(), b.eta());
  const double minre = std::min(a.min_re_p, b.min_re_p);
  const double cdrift = std::abs(a.max_lipschitz - b.max_lipschitz) / b.max_lipschitz;
  const bool ok = eta >= 0.02 && minre >= half && cdrift <= 0.2 && std::isfinite(cdrift);
  return {ok, "eta = " + fmt("%.3f", eta) + " (need >= 0.02), min Re p = " + fmt("%.4e", minre) +
                  " vs half Re p* = " + fmt("%.4e", half) + ", C = " + fmt("%.4f", a.max_lipschitz) +
                  " / " + fmt("%.4f", b.max_lipschitz) + " at d_eps 0.01 / 0.005, drift " +
                  fmt("%.3f", cdrift) + " (tol 0.2)"};
}

Outcome riesz_machinery() {
  const Contour c{0.0, 0.25, 32};
  struct Case {
    const char* name;
    ModalOperatorSpec s0, s1;
  };
  const SpectralField U = abc_flow();
  std::vector<Case> cases{
      {"eps 1 -> 0.95", {U, kJStar, 1.0, 2}, {U, kJStar, 0.95, 2}},
      {"j 0 -> j*", {U, Vec3::Zero(), 1.0, 2}, {U, kJStar, 1.0, 2}},
      {"delta0 0.05 -> 0.055", {U, kJStar, 1.0, 2}, {1.1 * U, kJStar, 1.0, 2}},
  };
  bool ok = true;
  std::ostringstream os;
  for (const Case& k : cases) {
    const RieszProjector P0 = riesz_projector(k.s0, c);
    const RieszProjector P1 = riesz_projector(k.s1, c);
    const DistanceReport d = projector_distance_bound(k.s0, k.s1, c);
    const double defect = std::max(P0.idempotency_defect(), P1.idempotency_defect());
    const bool pass = defect <= 1e-8 && d.rank0 == d.rank1 && d.measured <= d.bound;
    ok = ok && pass;
    os << k.name << ": defect " << fmt("%.1e", defect) << ", rank " << d.rank0 << "->" << d.rank1
       << ", |P0-P1| " << fmt("%.2e", d.measured) << " <= bound " << fmt("%.2e", d.bound) << "; ";
  }
  std::string s = os.str();
  s.resize(s.size() - 2);
  return {ok, s};
}

Outcome bloch_parseval() {
  const ModalOperatorSpec s{abc_flow(), kJStar, 1.0, 2};
  const EigPair e = leading_eigs(s, 1)[0];
  const BlochFamily f = constant_band(e.H, kJStar, 0.1);
  const ParsevalReport p = parseval_check(f, {50, 100, 200, 400});
  const double last = p.rows.back().rel_err;
  std::vector<double> radii;
  for (double eps : {1.0, 0.95, 0.9}) {
    const BandDatum d = build_band_datum(abc_flow(), kJStar, 4e-4, eps, 0.9, scale_index(eps, 0.9));
    radii.push_back(concentration_radius(d.family, 0.1));
  }
  const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
  const double spread = (*hi - *lo) / *lo;
  std::ostringstream os;
  os << "J = 0.1 rel. err";
  for (const ParsevalRow& r : p.rows) os << " " << fmt("%.4f", r.rel_err) << "@R" << fmt("%g", r.R);
  os << " (need <= 0.05 at R = 400, decreasing); concentration R at eps 1/0.95/0.9 = " << fmt("%.0f", radii[0])
     << "/" << fmt("%.0f", radii[1]) << "/" << fmt("%.0f", radii[2]) << ", spread " << fmt("%.3f", spread)
     << " (tol 0.1)";
  return {p.decreasing && last <= 0.05 && spread <= 0.1, os.str()};
}

Outcome energy_bounds() {
  // further runs besides the growth run of criterion 4
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_start = [&](int N, const Vec3& j) {
    SpectralField H(N);
    for (std::size_t i = 0; i < H.size(); ++i) H.data()[i] = cplx(u(g), u(g));
    return project_divergence_free(H, j);
  };
  for (const auto& [delta, eps] : std::vector<std::pair<double, double>>{{0.05, 1.0}, {0.5, 1.0}, {1.0, 0.2}}) {
    EvolutionRun run;
    run.spec = {delta * make_abc({1, 1, 1}, 1), kJStar, eps, 2};
    run.H0 = random_start(2, kJStar);
    run.t_end = 10.0;
    evolve(run);
    g_energy.push_back(energy_monitor(run));
  }
  double worst = INFINITY;
  int violations = 0;
  for (const EnergyReport& r : g_energy) {
    worst = std::min(worst, r.min_slack_growth);
    violations += r.violations;
  }
  return {!g_energy.empty() && worst >= -1e-6,
          std::to_string(g_energy.size()) + " runs, min relative slack " + fmt("%.3e", worst) +
              " (need >= -1e-6), " + std::to_string(violations) + " flagged samples"};
}

Outcome glue_statics() {
  const std::vector<double> eps{0.9, 0.81, 0.729};
  std::vector<TailLaw> laws;
  for (double e : eps) {
    const BandDatum d = build_band_datum(abc_flow(), kJStar, 4e-4, e, 0.9, scale_index(e, 0.9));
    std::vector<double> radii;
    for (int k = 1; k <= 8; ++k) radii.push_back(2.0 * k / d.J);
    laws.push_back(measure_tail_law(d.family, radii));
  }
  const TailLaw law = envelope(laws);
  const SpectralField psi = streamfunction(abc_flow());
  const BlockCatalog c = plan_catalog(psi, 0.9, 10.0, 3, 3, law);
  const CatalogReport rep = check_catalog(c, eps);
  // rows realizing the radius condition and the cutoff properties
  const std::vector<std::string> sized{"tail_radius", "cutoff_plateau", "cutoff_range", "separation",
                                       "cutoff_derivatives"};
  double min_margin = INFINITY;
  std::string min_row;
  bool margins = true;
  int n_sized = 0;
  for (const CheckRow& r : rep.rows) {
    if (std::find(sized.begin(), sized.end(), r.check) == sized.end()) continue;
    ++n_sized;
    // 0 <= phi <= 1 is attained with equality: phi = 1 on the plateau, 0 outside
    const bool ok = r.check == "cutoff_range" ? r.margin >= 0.0 : r.margin > 0.0;
    margins = margins && ok && r.pass;
    if (r.check != "cutoff_range" && r.margin < min_margin) {
      min_margin = r.margin;
      min_row = r.check;
    }
  }
  double lo = INFINITY, hi = 0.0;
  bool norms = true;
  for (double e : eps) {
    const DatumReport d = build_datum(c, e);
    lo = std::min(lo, d.norm_lower);
    hi = std::max(hi, d.norm_upper);
    norms = norms && d.in_range;
  }
  const CatalogReport neg = check_catalog(plan_catalog(psi, 0.9, 1.0, 3, 3, law), eps);
  int neg_fail = 0;
  for (const CheckRow& r : neg.rows)
    if (!r.pass && r.check != "hypothesis_U_ge_10") ++neg_fail;
  std::ostringstream os;
  os << rep.rows.size() << " checks, " << rep.failures() << " failed; " << n_sized
     << " sized rows, min positive margin " << fmt("%.3e", min_margin) << " (" << min_row
     << "), cutoff_range margin 0 by construction; |B_in| in [" << fmt("%.4f", lo) << ", " << fmt("%.4f", hi)
     << "]; tail C " << fmt("%.2f", law.C) << "; U = 1 control: " << neg_fail << " failed checks";
  return {rep.all_pass() && margins && norms && neg_fail > 0, os.str()};
}

Outcome oracle_equivalence() {
  const ModalOperatorSpec s{abc_flow(), kJStar, 1.0, 3};
  const linalg::Mat A = assemble_dense(s);
  const ModalOperator L(s);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const linalg::Vec x = linalg::random_vector(A.cols(), 100 + t);
    linalg::Vec y(A.rows());
    L.apply(x.data(), y.data());
    worst = std::max(worst, (y - A * x).cwiseAbs().maxCoeff());
  }
  CellOptions direct, neumann;
  neumann.method = CellMethod::neumann;
  const CVec3 v(0.3, -0.4, 0.8);
  const CellSolution a = solve_cell_problem(s.U, v, direct);
  const CellSolution b = solve_cell_problem(s.U, v, neumann);
  const double diff = l2(a.field - b.field) / l2(a.field);
  const bool cell_ok = b.contraction < 0.5 && diff <= 10 * neumann.tol;
  return {worst <= 1e-12 && cell_ok,
          "max |apply_L - dense| = " + fmt("%.2e", worst) + " over 10 probes (tol 1e-12); contraction " +
              fmt("%.4f", b.contraction) + ", Neumann vs direct " + fmt("%.2e", diff) + " (tol " +
              fmt("%.0e", 10 * neumann.tol) + ")"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // runtime limit, 0 when none is stated
  };
  const std::vector<Criterion> list{
      {1, "ABC closed form", abc_closed_form_check, 1.0},
      {2, "kernel dimension", kernel_dimension, 30.0},
      {3, "Kato slope", kato_slope, 120.0},
      {4, "positive growth", positive_growth, 120.0},
      {5, "eps-continuation", eps_continuation, 0.0},
      {6, "Riesz machinery", riesz_machinery, 0.0},
      {7, "Bloch Parseval", bloch_parseval, 0.0},
      {8, "energy bounds", energy_bounds, 0.0},
      {9, "glue statics", glue_statics, 0.0},
      {10, "oracle equivalence", oracle_equivalence, 0.0},
  };
  int failed = 0;
  for (const Criterion& c : list) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string timing = fmt("%.2f s", s);
    if (c.budget_s > 0) {
      timing += fmt(", budget %.0f s", c.budget_s);
      pass = pass && s <= c.budget_s;
    }
    if (!pass) ++failed;
    std::printf("criterion %2d %s  %s: %s [%s]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(list.size()) - failed, list.size());
  return failed == 0 ? 0 : 1;
}
