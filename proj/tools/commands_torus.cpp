// field make-abc, alpha scan|matrix, spectrum eigs|kato, evolve

#include <iostream>
#include <memory>

#include "alphadyn/alpha.hpp"
#include "alphadyn/eigensolve.hpp"
#include "alphadyn/error.hpp"
#include "alphadyn/evolve.hpp"
#include "alphadyn/field_io.hpp"
#include "commands.hpp"
#include "context.hpp"

namespace cli {
namespace {

namespace ad = alphadyn;

json cplx_json(ad::cplx z) { return json::array({z.real(), z.imag()}); }

ad::CellOptions cell_options(const std::string& method, double tol, int N) {
  ad::CellOptions o;
  ad::require(method == "direct" || method == "neumann", ad::Errc::invalid_argument,
              "cell method must be direct or neumann");
  o.method = method == "direct" ? ad::CellMethod::direct : ad::CellMethod::neumann;
  require_positive(tol, "cell tolerance");
  o.tol = tol;
  o.N = N;
  return o;
}

ad::EigMethod eig_method(const std::string& m) {
  if (m == "auto") return ad::EigMethod::automatic;
  if (m == "dense") return ad::EigMethod::dense;
  if (m == "krylov") return ad::EigMethod::krylov;
  ad::fail(ad::Errc::invalid_argument, "eigen method must be auto, dense or krylov");
}

void register_make_abc(CLI::App* parent, int& status) {
  struct Opt {
    Common c;
    std::vector<double> abc{1.0, 1.0, 1.0};
    int N = 1;
    double scale = 1.0;
    std::string name = "abc.field";
  };
  auto o = std::make_shared<Opt>();
  CLI::App* s = parent->add_subcommand("make-abc", "write an ABC flow snapshot");
  add_common(s, o->c);
  s->add_option("--abc", o->abc, "amplitudes a,b,c")->delimiter(',')->expected(3);
  s->add_option("--N", o->N, "truncation")->check(CLI::PositiveNumber);
  s->add_option("--scale", o->scale, "amplitude factor");
  s->add_option("--name", o->name, "snapshot file name");
  s->callback([o, &status] {
    json cfg = {{"abc", o->abc}, {"N", o->N}, {"scale", o->scale}, {"name", o->name}};
    status = guarded("field make-abc", o->c, cfg, [&](Run& run) {
      ad::require(o->abc.size() == 3, ad::Errc::invalid_argument, "--abc needs three amplitudes");
      ad::require(std::isfinite(o->scale), ad::Errc::invalid_argument, "scale must be finite");
      ad::SpectralField U = ad::make_abc({o->abc[0], o->abc[1], o->abc[2]}, o->N);
      U *= o->scale;
      ad::save_field(run.output(o->name), U);
      const ad::Norms n = ad::norms(U);
      run.results() = {{"l2", n.l2},
                       {"sup_estimate", n.sup_estimate},
                       {"sup_grad_estimate", n.sup_grad_estimate},
                       {"max_divergence", ad::max_divergence(U)},
                       {"reality_defect", ad::reality_defect(U)}};
    });
  });
}

void register_alpha(CLI::App* parent, int& status) {
  struct Opt {
    Common c;
    FlowOptions flow;
    std::vector<double> j{1.0, 0.0, 0.0};
    std::string directions = "default";
    std::string method = "direct";
    double tol = 1e-12;
    int cell_N = 0;
    double threshold = 0.0;
  };
  auto add_cell = [](CLI::App* s, Opt& o) {
    add_common(s, o.c);
    add_flow(s, o.flow);
    s->add_option("--cell-method", o.method, "direct or neumann");
    s->add_option("--cell-tol", o.tol, "cell-problem tolerance");
    s->add_option("--cell-N", o.cell_N, "cell truncation (0: flow N + 2)");
  };

  auto m = std::make_shared<Opt>();
  CLI::App* sm = parent->add_subcommand("matrix", "alpha-matrix and its eigenvalues for one direction");
  add_cell(sm, *m);
  sm->add_option("--j", m->j, "direction j")->delimiter(',')->expected(3);
  sm->callback([m, &status] {
    json cfg = {{"j", m->j}, {"cell_method", m->method}, {"cell_tol", m->tol}, {"cell_N", m->cell_N}};
    status = guarded("alpha matrix", m->c, cfg, [&](Run& run) {
      json echo;
      const ad::SpectralField U = load_flow(m->flow, echo);
      const ad::CellOptions co = cell_options(m->method, m->tol, m->cell_N);
      const ad::Vec3 j = to_vec3(m->j, "--j");
      const ad::CellResponse resp = ad::cell_response(U, co);
      const ad::AlphaMatrix A = ad::alpha_matrix(resp, j);
      Csv ev(run.output("alpha_eigenvalues.csv"), {"index", "re", "im"});
      for (int l = 0; l < 3; ++l) {
        ev << l << A.eigenvalues[l].real() << A.eigenvalues[l].imag();
        ev.end_row();
      }
      Csv ent(run.output("alpha_matrix.csv"), {"row", "col", "re", "im"});
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          ent << r << c << A.A(r, c).real() << A.A(r, c).imag();
          ent.end_row();
        }
      json res = echo;
      res["eigenvalues"] = json::array();
      for (ad::cplx z : A.eigenvalues) res["eigenvalues"].push_back(cplx_json(z));
      double resid = 0.0, contraction = 0.0;
      for (const auto& cs : resp.cells) {
        resid = std::max(resid, cs.residual);
        if (std::isfinite(cs.contraction)) contraction = std::max(contraction, cs.contraction);
      }
      res["max_cell_residual"] = resid;
      if (co.method == ad::CellMethod::neumann) res["contraction"] = contraction;
      run.results() = res;
      for (ad::cplx z : A.eigenvalues) std::cout << ad::cplx(z) << '\n';
    });
  });

  auto sc = std::make_shared<Opt>();
  CLI::App* ss = parent->add_subcommand("scan", "instability scan over a direction set");
  add_cell(ss, *sc);
  ss->add_option("--directions", sc->directions, "default, icosphere, axes or cube");
  ss->add_option("--threshold", sc->threshold, "certification threshold on Re mu");
  ss->callback([sc, &status] {
    json cfg = {{"directions", sc->directions}, {"threshold", sc->threshold}, {"cell_method", sc->method},
                {"cell_tol", sc->tol}, {"cell_N", sc->cell_N}};
    status = guarded("alpha scan", sc->c, cfg, [&](Run& run) {
      json echo;
      const ad::SpectralField U = load_flow(sc->flow, echo);
      std::vector<ad::Vec3> dirs;
      if (sc->directions == "default") dirs = ad::default_scan_directions();
      else if (sc->directions == "icosphere") dirs = ad::icosphere_directions();
      else if (sc->directions == "axes") dirs = ad::axis_directions();
      else if (sc->directions == "cube") dirs = ad::cube_directions();
      else ad::fail(ad::Errc::invalid_argument, "unknown direction set " + sc->directions);
      ad::ScanOptions so;
      so.threshold = sc->threshold;
      const ad::ScanReport rep = ad::instability_scan(U, dirs, so, cell_options(sc->method, sc->tol, sc->cell_N));
      Csv csv(run.output("alpha_scan.csv"), {"jx", "jy", "jz", "mu1_re", "mu1_im", "mu2_re", "mu2_im", "mu3_re",
                                             "mu3_im", "margin", "certified"});
      for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const ad::ScanRow& r = rep.rows[i];
        csv << r.direction[0] << r.direction[1] << r.direction[2];
        for (ad::cplx z : r.eigenvalues) csv << z.real() << z.imag();
        csv << r.margin << static_cast<long>(rep.certified && i == rep.best);
        csv.end_row();
      }
      json res = echo;
      const ad::Vec3& b = rep.rows[rep.best].direction;
      res["best_direction"] = {b[0], b[1], b[2]};
      res["best_re"] = rep.best_re;
      res["best_margin"] = rep.best_margin;
      res["certified"] = rep.certified;
      run.results() = res;
      std::cout << (rep.certified ? "certified" : "not certified") << " best Re mu " << rep.best_re << '\n';
    });
  });
}

struct OperatorOpt {
  Common c;
  FlowOptions flow;
  std::vector<double> j{0.001, 0.00075, 0.0};
  double eps = 1.0;
  int N = 3;
  std::string method = "auto";
};

void add_operator(CLI::App* s, OperatorOpt& o) {
  add_common(s, o.c);
  add_flow(s, o.flow);
  s->add_option("--j", o.j, "Bloch wave vector j")->delimiter(',')->expected(3);
  s->add_option("--eps", o.eps, "diffusivity");
  s->add_option("--N", o.N, "operator truncation")->check(CLI::PositiveNumber);
  s->add_option("--eig-method", o.method, "auto, dense or krylov");
}

json operator_config(const OperatorOpt& o) {
  return {{"j", o.j}, {"eps", o.eps}, {"N", o.N}, {"eig_method", o.method}};
}

ad::ModalOperatorSpec operator_spec(const OperatorOpt& o, json& echo) {
  ad::ModalOperatorSpec s;
  s.U = load_flow(o.flow, echo);
  s.j = to_vec3(o.j, "--j");
  require_positive(o.eps, "eps");
  s.eps = o.eps;
  s.N = o.N;
  return s;
}

void register_spectrum(CLI::App* parent, int& status) {
  struct EigOpt : OperatorOpt {
    int count = 4;
    bool save_vector = false;
  };
  auto e = std::make_shared<EigOpt>();
  CLI::App* se = parent->add_subcommand("eigs", "leading eigenvalues of the modal operator");
  add_operator(se, *e);
  se->add_option("--count", e->count, "number of eigenvalues")->check(CLI::PositiveNumber);
  se->add_flag("--save-vector", e->save_vector, "write the leading eigenvector snapshot");
  se->callback([e, &status] {
    json cfg = operator_config(*e);
    cfg["count"] = e->count;
    cfg["save_vector"] = e->save_vector;
    status = guarded("spectrum eigs", e->c, cfg, [&](Run& run) {
      json echo;
      const ad::ModalOperatorSpec spec = operator_spec(*e, echo);
      ad::EigOptions eo;
      eo.method = eig_method(e->method);
      eo.arnoldi.seed = e->c.seed;
      const std::vector<ad::EigPair> pairs = ad::leading_eigs(spec, e->count, eo);
      Csv csv(run.output("eigs.csv"), {"index", "jmag", "eps", "p_re", "p_im", "residual", "div_residual"});
      json res = echo;
      res["eigenvalues"] = json::array();
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        csv << static_cast<long>(i) << spec.j.norm() << spec.eps << pairs[i].p.real() << pairs[i].p.imag()
            << pairs[i].residual << pairs[i].modal_div_residual;
        csv.end_row();
        res["eigenvalues"].push_back(cplx_json(pairs[i].p));
      }
      if (e->save_vector) ad::save_field(run.output("eigenvector.field"), pairs.at(0).H);
      run.results() = res;
      std::cout << "leading p " << pairs.at(0).p << '\n';
    });
  });

  struct KatoOpt : OperatorOpt {
    std::vector<double> dir{1.0, 0.0, 0.0};
    std::vector<double> mags{0.01, 0.005, 0.0025};
  };
  auto k = std::make_shared<KatoOpt>();
  CLI::App* sk = parent->add_subcommand("kato", "first-order eigenvalue expansion check");
  add_operator(sk, *k);
  sk->add_option("--direction", k->dir, "direction of j")->delimiter(',')->expected(3);
  sk->add_option("--jmags", k->mags, "magnitudes |j|")->delimiter(',');
  sk->callback([k, &status] {
    json cfg = operator_config(*k);
    cfg.erase("j");
    cfg["direction"] = k->dir;
    cfg["jmags"] = k->mags;
    status = guarded("spectrum kato", k->c, cfg, [&](Run& run) {
      json echo;
      const ad::SpectralField U = load_flow(k->flow, echo);
      require_positive(k->eps, "eps");
      ad::require(k->mags.size() >= 2, ad::Errc::invalid_argument, "need at least two magnitudes");
      for (double m : k->mags) require_positive(m, "|j|");
      ad::KatoOptions ko;
      ko.eps = k->eps;
      ko.N = k->N;
      ko.eig.method = eig_method(k->method);
      ko.eig.arnoldi.seed = k->c.seed;
      const ad::KatoReport rep = ad::kato_first_order_check(U, to_vec3(k->dir, "--direction"), k->mags, ko);
      Csv csv(run.output("kato.csv"), {"jmag", "eps", "branch", "p_re", "p_im", "residual", "prediction_re",
                                       "prediction_im", "remainder"});
      for (const ad::KatoRow& r : rep.rows)
        for (int l = 0; l < 3; ++l) {
          csv << r.jmag << k->eps << l << r.p[l].real() << r.p[l].imag() << r.residual[l]
              << r.prediction[l].real() << r.prediction[l].imag() << r.remainder[l];
          csv.end_row();
        }
      json res = echo;
      res["slope"] = rep.slope;
      res["branch_slopes"] = rep.slopes;
      res["mu"] = json::array();
      for (ad::cplx z : rep.mu) res["mu"].push_back(cplx_json(z));
      run.results() = res;
      std::cout << "remainder slope " << rep.slope << '\n';
    });
  });
}

void register_evolve(CLI::App& app, int& status) {
  struct EvOpt : OperatorOpt {
    double t_end = 20.0;
    double dt = 0.0;
    int samples = 200;
    std::string init = "eigen";
    std::string init_field;
    bool project = false;
    double fit_fraction = 0.5;
  };
  auto o = std::make_shared<EvOpt>();
  CLI::App* s = app.add_subcommand("evolve", "time evolution of a Bloch mode");
  add_operator(s, *o);
  s->add_option("--t-end", o->t_end, "final time");
  s->add_option("--dt", o->dt, "time step (0: automatic)");
  s->add_option("--samples", o->samples, "trace samples");
  s->add_option("--init", o->init, "eigen (leading eigenvector), random, or file");
  s->add_option("--init-field", o->init_field, "initial snapshot for --init file");
  s->add_flag("--project", o->project, "re-project onto the modal divergence-free subspace");
  s->add_option("--fit-fraction", o->fit_fraction, "trailing fraction of the trace used for the growth fit");
  s->callback([o, &status] {
    json cfg = operator_config(*o);
    cfg.update({{"t_end", o->t_end}, {"dt", o->dt}, {"samples", o->samples}, {"init", o->init},
                {"init_field", o->init_field}, {"project", o->project}, {"fit_fraction", o->fit_fraction}});
    status = guarded("evolve", o->c, cfg, [&](Run& run) {
      json echo;
      ad::EvolutionRun er;
      er.spec = operator_spec(*o, echo);
      require_positive(o->t_end, "t_end");
      ad::require(o->dt >= 0.0, ad::Errc::invalid_argument, "dt must be non-negative");
      er.t_end = o->t_end;
      er.dt = o->dt;
      json res = echo;
      if (o->init == "eigen") {
        ad::EigOptions eo;
        eo.method = eig_method(o->method);
        eo.arnoldi.seed = o->c.seed;
        const ad::EigPair p = ad::leading_eigs(er.spec, 1, eo).at(0);
        er.H0 = p.H;
        res["p"] = cplx_json(p.p);
      } else if (o->init == "random") {
        const std::size_t n = 3 * static_cast<std::size_t>(2 * o->N + 1) * (2 * o->N + 1) * (2 * o->N + 1);
        er.H0 = ad::project_divergence_free(
            ad::field_from_vector(ad::linalg::random_vector(static_cast<Eigen::Index>(n), o->c.seed), o->N),
            er.spec.j);
      } else if (o->init == "file") {
        er.H0 = ad::resized(ad::load_field(o->init_field), o->N);
      } else {
        ad::fail(ad::Errc::invalid_argument, "init must be eigen, random or file");
      }
      ad::EvolveOptions eo;
      eo.samples = o->samples;
      eo.project_divergence = o->project;
      ad::evolve(er, eo);
      Csv csv(run.output("trace.csv"), {"t", "norm", "slack_growth_bound", "slack_energy_estimate", "div_drift"});
      for (const ad::TraceSample& t : er.trace) {
        csv << t.t << t.norm << t.slack_growth << t.slack_energy << t.div_drift;
        csv.end_row();
      }
      ad::save_field(run.output("final.field"), er.final_state);
      const ad::GrowthFit fit = ad::fit_growth(er, o->fit_fraction);
      const ad::EnergyReport en = ad::energy_monitor(er);
      res.update({{"dt", er.dt},
                  {"steps", er.steps},
                  {"gamma", fit.gamma},
                  {"r2", fit.r2},
                  {"fit_reliable", fit.reliable},
                  {"grad_bound", er.grad_bound},
                  {"min_slack_growth", en.min_slack_growth},
                  {"min_slack_energy", en.min_slack_energy},
                  {"bound_violations", en.violations},
                  {"divergence_drift", ad::divergence_drift(er)}});
      run.results() = res;
      std::cout << "gamma " << fit.gamma << " (r2 " << fit.r2 << "), bound violations " << en.violations << '\n';
    });
  });
}

}  // namespace

void register_torus(CLI::App& app, int& status) {
  CLI::App* field = app.add_subcommand("field", "flow snapshots");
  field->require_subcommand(1);
  register_make_abc(field, status);

  CLI::App* alpha = app.add_subcommand("alpha", "alpha-matrix and instability scan");
  alpha->require_subcommand(1);
  register_alpha(alpha, status);

  CLI::App* spectrum = app.add_subcommand("spectrum", "modal operator eigenvalues");
  spectrum->require_subcommand(1);
  register_spectrum(spectrum, status);

  register_evolve(app, status);
}

}  // namespace cli
