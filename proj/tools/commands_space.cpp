// bloch synth|parseval, glue build|check

#include <iostream>
#include <memory>

#include "alphadyn/bloch.hpp"
#include "alphadyn/error.hpp"
#include "alphadyn/glue.hpp"
#include "commands.hpp"
#include "context.hpp"

namespace cli {
namespace {

namespace ad = alphadyn;

struct FamilyOpt {
  Common c;
  FlowOptions flow;
  std::string family = "band";
  std::vector<double> jstar{0.001, 0.00075, 0.0};
  std::optional<double> J;  // band: 4e-4 (<= 0 searches), constant: 0.1
  double eps = 1.0;
  double zeta = 0.9;
  int N = 2;
  int order = 5;
};

void add_family(CLI::App* s, FamilyOpt& o) {
  add_common(s, o.c);
  add_flow(s, o.flow);
  s->add_option("--family", o.family, "band (eigenvector band) or constant (flow on one box)");
  s->add_option("--jstar", o.jstar, "band center")->delimiter(',')->expected(3);
  s->add_option("--J", o.J, "band half-width");
  s->add_option("--eps", o.eps, "diffusivity");
  s->add_option("--zeta", o.zeta, "scale ratio");
  s->add_option("--N", o.N, "operator truncation")->check(CLI::PositiveNumber);
  s->add_option("--order", o.order, "interpolation nodes per axis")->check(CLI::PositiveNumber);
}

json family_config(const FamilyOpt& o) {
  json j = {{"family", o.family}, {"jstar", o.jstar}, {"eps", o.eps}, {"zeta", o.zeta},
            {"N", o.N},           {"order", o.order}};
  j["J"] = o.J ? json(*o.J) : json(nullptr);
  return j;
}

ad::BlochFamily make_family(const FamilyOpt& o, json& echo) {
  const ad::SpectralField U = load_flow(o.flow, echo);
  const ad::Vec3 js = to_vec3(o.jstar, "--jstar");
  if (o.family == "constant") {
    const double J = o.J.value_or(0.1);
    require_positive(J, "J");
    echo["J"] = J;
    return ad::constant_band(U, js, J);
  }
  ad::require(o.family == "band", ad::Errc::invalid_argument, "family must be band or constant");
  require_positive(o.eps, "eps");
  ad::require(o.eps <= 1.0, ad::Errc::invalid_argument, "eps must lie in (0, 1]");
  ad::BandOptions bo;
  bo.N = o.N;
  bo.order = o.order;
  bo.eig.arnoldi.seed = o.c.seed;
  const int n = ad::scale_index(o.eps, o.zeta);
  const ad::BandDatum d = ad::build_band_datum(U, js, o.J.value_or(4e-4), o.eps, o.zeta, n, bo);
  echo.update({{"J", d.J},
               {"n", d.n},
               {"eps_modal", d.eps_modal},
               {"p_star", {d.p_star.real(), d.p_star.imag()}},
               {"p_center", {d.p_center.real(), d.p_center.imag()}},
               {"min_re_p", d.min_re_p},
               {"raw_mass", d.raw_mass}});
  return d.family;
}

double half_width(const ad::BlochFamily& f) {
  double J = INFINITY;
  for (const auto& b : f.boxes)
    if (b.half_width > 0.0) J = std::min(J, b.half_width);
  return J;
}

void register_bloch(CLI::App* parent, int& status) {
  struct SynthOpt : FamilyOpt {
    double R = 10.0;
    double h = 0.0;
  };
  auto s = std::make_shared<SynthOpt>();
  CLI::App* ss = parent->add_subcommand("synth", "sample the synthesized field on a cube");
  add_family(ss, *s);
  ss->add_option("--R", s->R, "cube half-side");
  ss->add_option("--spacing", s->h, "grid spacing (0: automatic)");
  ss->callback([s, &status] {
    json cfg = family_config(*s);
    cfg.update({{"R", s->R}, {"h", s->h}});
    status = guarded("bloch synth", s->c, cfg, [&](Run& run) {
      require_positive(s->R, "R");
      ad::require(s->h >= 0.0, ad::Errc::invalid_argument, "h must be non-negative");
      json res;
      const ad::BlochFamily f = make_family(*s, res);
      const ad::SampledVolume v = ad::synthesize(f, {s->R, s->h});
      ad::save_volume(run.output("volume.avol"), v);
      res.update({{"points_per_axis", v.n}, {"h", v.h}, {"max_imag_ratio", v.max_imag_ratio()},
                  {"family_mass", ad::family_mass(f)}});
      run.results() = res;
      std::cout << v.n << "^3 samples, h " << v.h << '\n';
    });
  });

  struct ParsevalOpt : FamilyOpt {
    std::vector<double> radii;
    double h = 0.0;
    double tol = 0.05;
    double delta = 0.0;
  };
  auto p = std::make_shared<ParsevalOpt>();
  CLI::App* sp = parent->add_subcommand("parseval", "box mass against the coefficient-space mass");
  add_family(sp, *p);
  sp->add_option("--radii", p->radii, "cube half-sides (default 5, 10, 20, 40 over J)")->delimiter(',');
  sp->add_option("--spacing", p->h, "grid spacing (0: automatic)");
  sp->add_option("--tol", p->tol, "relative error accepted at the largest radius");
  sp->add_option("--concentration-delta", p->delta, "also report the (1 - delta) concentration radius");
  sp->callback([p, &status] {
    json cfg = family_config(*p);
    cfg.update({{"radii", p->radii}, {"h", p->h}, {"tol", p->tol}, {"concentration_delta", p->delta}});
    status = guarded("bloch parseval", p->c, cfg, [&](Run& run) {
      require_positive(p->tol, "tol");
      ad::require(p->h >= 0.0 && p->delta >= 0.0 && p->delta < 1.0, ad::Errc::invalid_argument,
                  "h must be non-negative and delta in [0, 1)");
      json res;
      const ad::BlochFamily f = make_family(*p, res);
      std::vector<double> radii = p->radii;
      if (radii.empty())
        for (double k : {5.0, 10.0, 20.0, 40.0}) radii.push_back(k / half_width(f));
      const ad::ParsevalReport rep = ad::parseval_check(f, radii, p->h, p->tol);
      Csv csv(run.output("parseval.csv"), {"R", "mass", "rhs", "rel_err"});
      for (const ad::ParsevalRow& r : rep.rows) {
        csv << r.R << r.lhs << rep.rhs << r.rel_err;
        csv.end_row();
      }
      res.update({{"rhs", rep.rhs}, {"decreasing", rep.decreasing}, {"converged", rep.converged}});
      if (p->delta > 0.0) {
        ad::ConcentrationOptions co;
        co.h = p->h;
        res["concentration_radius"] = ad::concentration_radius(f, p->delta, co);
      }
      run.results() = res;
      std::cout << "rel_err at R = " << rep.rows.back().R << ": " << rep.rows.back().rel_err
                << (rep.converged ? " (converged)" : " (not converged)") << '\n';
    });
  });
}

void register_glue(CLI::App* parent, int& status) {
  struct BuildOpt : FamilyOpt {
    double U = 10.0;
    int n_max = 3, l_max = 3;
    double margin = 0.01;
    double tail_C = 0.0;
    std::vector<double> tail_radii;
    double safety = 1.25;
  };
  auto b = std::make_shared<BuildOpt>();
  CLI::App* sb = parent->add_subcommand("build", "plan a block catalog");
  add_family(sb, *b);
  sb->add_option("--U", b->U, "separation and size constant");
  sb->add_option("--n-max", b->n_max, "largest scale index")->check(CLI::PositiveNumber);
  sb->add_option("--l-max", b->l_max, "copies per scale")->check(CLI::PositiveNumber);
  sb->add_option("--margin", b->margin, "relative slack in the sized inequalities");
  sb->add_option("--tail-C", b->tail_C, "tail constant C in tail(R) <= C / R (0: measure from the band)");
  sb->add_option("--tail-radii", b->tail_radii, "radii for measuring C (default 2, 4, .., 16 over J)")
      ->delimiter(',');
  sb->add_option("--tail-safety", b->safety, "factor applied to the measured constant");
  sb->callback([b, &status] {
    json cfg = family_config(*b);
    cfg.update({{"U", b->U}, {"n_max", b->n_max}, {"l_max", b->l_max}, {"margin", b->margin}, {"tail_C", b->tail_C},
                {"tail_radii", b->tail_radii}, {"tail_safety", b->safety}});
    status = guarded("glue build", b->c, cfg, [&](Run& run) {
      require_positive(b->U, "U");
      require_positive(b->margin, "margin");
      require_positive(b->safety, "tail safety");
      ad::require(b->tail_C >= 0.0, ad::Errc::invalid_argument, "tail constant must be non-negative");
      json res;
      const ad::SpectralField psi = ad::streamfunction(load_flow(b->flow, res));
      ad::TailLaw law;
      if (b->tail_C > 0.0) {
        law.C = b->tail_C;
      } else {
        const ad::BlochFamily f = make_family(*b, res);
        std::vector<double> radii = b->tail_radii;
        if (radii.empty())
          for (int k = 1; k <= 8; ++k) radii.push_back(2.0 * k / half_width(f));
        law = ad::measure_tail_law(f, radii, b->safety);
        Csv csv(run.output("tail.csv"), {"R", "tail", "R_times_tail"});
        for (const auto& [R, t] : law.samples) {
          csv << R << t << R * t;
          csv.end_row();
        }
      }
      ad::CatalogOptions co;
      co.margin = b->margin;
      const ad::BlockCatalog c = ad::plan_catalog(psi, b->zeta, b->U, b->n_max, b->l_max, law, co);
      ad::save_catalog(run.output("catalog.json"), c);
      res.update({{"tail_C", law.C}, {"spacing", c.spacing}, {"blocks", c.blocks.size()}});
      run.results() = res;
      std::cout << c.blocks.size() << " blocks, lattice spacing " << c.spacing << ", tail C " << law.C << '\n';
    });
  });

  struct CheckOpt {
    Common c;
    std::string catalog;
    std::vector<double> eps{0.9, 0.81, 0.729};
    double lipschitz_C = 10.0;
    double sweep_max = 0.0;
    bool strict = false;
  };
  auto k = std::make_shared<CheckOpt>();
  CLI::App* sk = parent->add_subcommand("check", "re-measure every catalog inequality");
  add_common(sk, k->c);
  sk->add_option("--catalog", k->catalog, "catalog file from glue build")->required();
  sk->add_option("--eps-samples", k->eps, "diffusivities for the datum checks")->delimiter(',');
  sk->add_option("--lipschitz-C", k->lipschitz_C, "constant C of the norm comparisons");
  sk->add_option("--sweep-max", k->sweep_max, "also sweep U = 1, 2, 4, .. up to this value");
  sk->add_flag("--strict", k->strict, "exit 3 when a check fails");
  sk->callback([k, &status] {
    json cfg = {{"catalog", k->catalog}, {"eps_samples", k->eps}, {"lipschitz_C", k->lipschitz_C},
                {"sweep_max", k->sweep_max}, {"strict", k->strict}};
    status = guarded("glue check", k->c, cfg, [&](Run& run) {
      for (double e : k->eps)
        ad::require(e > 0.0 && e <= 1.0, ad::Errc::invalid_argument, "eps samples must lie in (0, 1]");
      require_positive(k->lipschitz_C, "lipschitz-C");
      const ad::BlockCatalog c = ad::load_catalog(k->catalog);
      ad::CheckOptions co;
      co.lipschitz_C = k->lipschitz_C;
      const ad::CatalogReport rep = ad::check_catalog(c, k->eps, co);
      Csv csv(run.output("checks.csv"), {"check", "n", "l", "measured", "bound", "margin", "pass"});
      for (const ad::CheckRow& r : rep.rows) {
        csv << r.check << r.n << r.l << r.measured << r.bound << r.margin << static_cast<long>(r.pass);
        csv.end_row();
      }
      json res = {{"U", c.U}, {"zeta", c.zeta}, {"rows", rep.rows.size()}, {"failures", rep.failures()}};
      if (k->sweep_max > 0.0) {
        ad::TailLaw law;
        law.C = c.tail_C;
        std::vector<ad::SweepRow> rows;
        const double best = ad::dyadic_sweep(c.psi, c.zeta, c.n_max, c.l_max, law, k->eps, k->sweep_max, &rows);
        Csv sw(run.output("sweep.csv"), {"U", "failures"});
        for (const ad::SweepRow& r : rows) {
          sw << r.U << r.failures;
          sw.end_row();
        }
        res["sweep_best_U"] = best;
      }
      run.results() = res;
      std::cout << rep.rows.size() << " checks, " << rep.failures() << " failed\n";
      if (k->strict && !rep.all_pass())
        ad::fail(ad::Errc::catalog_infeasible, std::to_string(rep.failures()) + " catalog checks failed");
    });
  });
}

}  // namespace

void register_space(CLI::App& app, int& status) {
  CLI::App* bloch = app.add_subcommand("bloch", "Bloch synthesis on R^3");
  bloch->require_subcommand(1);
  register_bloch(bloch, status);

  CLI::App* glue = app.add_subcommand("glue", "block catalog of the glued flow");
  glue->require_subcommand(1);
  register_glue(glue, status);
}

}  // namespace cli
