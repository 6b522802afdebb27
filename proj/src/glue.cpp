#include "alphadyn/glue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "alphadyn/error.hpp"
#include "alphadyn/parallel.hpp"
#include "json.hpp"

namespace alphadyn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kS1 = 1.875;                 // max |S'|
constexpr double kS2 = 5.773502691896258;     // max |S''| = 10 / sqrt(3)
constexpr double kCubeToBall = 1.7320508075688772;

bool representable(double v) { return std::isfinite(v) && v > 0.0 && v < 1e300; }

}  // namespace

double block_tolerance(double U, int n, int l) {
  require(U > 0.0, Errc::invalid_argument, "separation constant must be positive");
  return std::exp(-(n + 1.0) - U * (l + 1.0)) / U;
}

TailLaw measure_tail_law(const BlochFamily& f, const std::vector<double>& radii, double safety) {
  require(safety >= 1.0, Errc::invalid_argument, "tail safety factor must be >= 1");
  BoxMass bm(f, radii);
  require(bm.rhs() > 0.0, Errc::invalid_argument, "family has zero mass");
  TailLaw t;
  t.safety = safety;
  double c = 0.0;
  for (std::size_t i = 0; i < bm.count(); ++i) {
    const double tail = std::max(0.0, 1.0 - bm.mass(i) / bm.rhs());
    t.samples.emplace_back(bm.R(i), tail);
    c = std::max(c, bm.R(i) * tail);
  }
  // R tail(R) ~ C - D / R: extrapolate from the two largest radii
  if (t.samples.size() >= 2) {
    const auto& [R1, t1] = t.samples[t.samples.size() - 2];
    const auto& [R2, t2] = t.samples.back();
    if (R2 != R1) {
      const double D = (R2 * t2 - R1 * t1) / (1.0 / R1 - 1.0 / R2);
      c = std::max(c, R2 * t2 + D / R2);
    }
  }
  t.C = safety * c;
  return t;
}

TailLaw envelope(const std::vector<TailLaw>& laws) {
  require(!laws.empty(), Errc::invalid_argument, "no tail laws");
  TailLaw out;
  out.safety = 0.0;
  for (const TailLaw& t : laws) {
    out.C = std::max(out.C, t.C);
    out.safety = std::max(out.safety, t.safety);
    out.samples.insert(out.samples.end(), t.samples.begin(), t.samples.end());
  }
  return out;
}

double CutoffSpec::value(double r, double dr) const {
  const double t = ((r - r_in) + dr) / width;
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double u = 1.0 - t;
  return u * u * u * (1.0 + 3.0 * t + 6.0 * t * t);
}

double CutoffSpec::d1(double r, double dr) const {
  const double t = ((r - r_in) + dr) / width;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return -30.0 * t * t * (1.0 - t) * (1.0 - t) / width;
}

double CutoffSpec::d2(double r, double dr) const {
  const double t = ((r - r_in) + dr) / width;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (width * width);
}

double CutoffSpec::grad_bound() const { return kS1 / width; }

double CutoffSpec::hess_bound() const {
  return std::max(kS2 / (width * width), kS1 / (width * r_in));
}

int BlockCatalog::find(int n, int l) const {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].n == n && blocks[i].l == l) return static_cast<int>(i);
  return -1;
}

SpectralField BlockCatalog::psi_n(int n) const {
  SpectralField p = rescale_flow(psi, zeta, n);
  p *= std::pow(zeta, 0.5 * n);
  return p;
}

namespace {

std::vector<Eigen::Vector3i> lattice_sites(std::size_t count) {
  std::vector<Eigen::Vector3i> out;
  for (int k = 0; out.size() < count; ++k)
    for (int x = -k; x <= k && out.size() < count; ++x)
      for (int y = -k; y <= k && out.size() < count; ++y)
        for (int z = -k; z <= k && out.size() < count; ++z)
          if (std::max({std::abs(x), std::abs(y), std::abs(z)}) == k) out.emplace_back(x, y, z);
  return out;
}

}  // namespace

BlockCatalog plan_catalog(const SpectralField& psi, double zeta, double U, int n_max, int l_max,
                          const TailLaw& tail, const CatalogOptions& opt) {
  require(zeta > 0.5 && zeta < 1.0, Errc::invalid_scale, "zeta must lie in (1/2, 1)");
  require(U > 0.0 && std::isfinite(U), Errc::invalid_argument, "separation constant must be positive");
  require(opt.n_min >= 0 && n_max >= opt.n_min && l_max >= 1, Errc::invalid_argument,
          "need n_max >= n_min >= 0 and l_max >= 1");
  require(tail.C >= 0.0 && std::isfinite(tail.C), Errc::invalid_argument, "tail constant must be finite");
  require(opt.margin >= 0.0, Errc::invalid_argument, "margin must be non-negative");
  require(reality_defect(psi) <= 1e-12 * (1.0 + l2(psi)), Errc::invalid_argument,
          "streamfunction must be real");
  BlockCatalog c;
  c.U = U;
  c.zeta = zeta;
  c.n_max = n_max;
  c.l_max = l_max;
  c.tail_C = tail.C;
  c.psi = psi;
  for (int n = opt.n_min; n <= n_max; ++n)
    for (int l = 1; l <= l_max; ++l) {
      Block b;
      b.n = n;
      b.l = l;
      b.tol = block_tolerance(U, n, l);
      const double t = b.tol / (1.0 + opt.margin);
      b.R = std::max((1.0 + tail.C) / t, 1.0 + opt.margin);
      if (!representable(b.tol) || !representable(b.R)) {
        std::ostringstream os;
        os << "block (n, l) = (" << n << ", " << l << ") needs a radius beyond double range";
        fail(Errc::catalog_infeasible, os.str());
      }
      CutoffSpec& cs = b.cutoff;
      cs.r_in = 2.0 * kCubeToBall * b.R * (1.0 + opt.margin);
      const double w1 = (kS1 + std::sqrt(kS1 * kS1 + 4.0 * kS2 * t)) / (2.0 * t);
      const double w2 = kS1 * (1.0 + 1.0 / cs.r_in) / t;
      cs.width = std::max(w1, w2);
      if (!representable(cs.r_out())) {
        std::ostringstream os;
        os << "ramp of block (n, l) = (" << n << ", " << l << ") is not representable";
        fail(Errc::catalog_infeasible, os.str());
      }
      c.blocks.push_back(b);
    }
  double r_out = 0.0, R = 0.0;
  for (const Block& b : c.blocks) {
    r_out = std::max(r_out, b.cutoff.r_out());
    R = std::max(R, b.R);
  }
  // centers sit on the period lattice of Psi_n; the rounding shift is below 4 pi
  c.spacing = (2.0 * r_out + 2.0 * R) * (1.0 + opt.margin) + 8.0 * kPi;
  const std::vector<Eigen::Vector3i> sites = lattice_sites(c.blocks.size());
  int shell = 0;
  for (std::size_t i = 0; i < c.blocks.size(); ++i) {
    c.blocks[i].cell = sites[i];
    c.blocks[i].cutoff.center = c.spacing * sites[i].cast<double>();
    shell = std::max(shell, sites[i].cwiseAbs().maxCoeff());
  }
  const double extent = c.spacing * (shell + 0.5);
  if (!representable(extent) || extent > opt.max_extent) {
    std::ostringstream os;
    os << "catalog extent " << extent << " exceeds the separation budget " << opt.max_extent;
    fail(Errc::catalog_infeasible, os.str());
  }
  return c;
}

// ---------------------------------------------------------------------------
// persistence

void save_catalog(const std::filesystem::path& path, const BlockCatalog& c) {
  nlohmann::json j;
  j["format"] = "alphadyn-catalog";
  j["version"] = 1;
  j["U"] = c.U;
  j["zeta"] = c.zeta;
  j["n_max"] = c.n_max;
  j["l_max"] = c.l_max;
  j["spacing"] = c.spacing;
  j["tail_C"] = c.tail_C;
  j["ramp_degree"] = 5;
  nlohmann::json p;
  p["N"] = c.psi.N();
  p["period_scale"] = c.psi.period_scale();
  std::vector<double> re, im;
  for (std::size_t i = 0; i < c.psi.size(); ++i) {
    re.push_back(c.psi.data()[i].real());
    im.push_back(c.psi.data()[i].imag());
  }
  p["re"] = re;
  p["im"] = im;
  j["psi"] = p;
  for (const Block& b : c.blocks)
    j["blocks"].push_back({{"n", b.n},
                           {"l", b.l},
                           {"R", b.R},
                           {"tol", b.tol},
                           {"cell", {b.cell[0], b.cell[1], b.cell[2]}},
                           {"center", {b.cutoff.center[0], b.cutoff.center[1], b.cutoff.center[2]}},
                           {"r_in", b.cutoff.r_in},
                           {"width", b.cutoff.width}});
  std::ofstream os(path);
  require(bool(os), Errc::io_error, "cannot open " + path.string());
  os << j.dump(1) << '\n';
  require(bool(os), Errc::io_error, "write failed for " + path.string());
}

BlockCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(bool(is), Errc::io_error, "cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
    require(j.at("format") == "alphadyn-catalog", Errc::io_error, "not a catalog document");
    BlockCatalog c;
    c.U = j.at("U");
    c.zeta = j.at("zeta");
    c.n_max = j.at("n_max");
    c.l_max = j.at("l_max");
    c.spacing = j.at("spacing");
    c.tail_C = j.at("tail_C");
    const auto& p = j.at("psi");
    c.psi = SpectralField(p.at("N").get<int>(), FieldKind::real_valued, p.at("period_scale").get<double>());
    const std::vector<double> re = p.at("re"), im = p.at("im");
    require(re.size() == c.psi.size() && im.size() == c.psi.size(), Errc::io_error,
            "streamfunction size mismatch");
    for (std::size_t i = 0; i < re.size(); ++i) c.psi.data()[i] = cplx(re[i], im[i]);
    for (const auto& b : j.at("blocks")) {
      Block x;
      x.n = b.at("n");
      x.l = b.at("l");
      x.R = b.at("R");
      x.tol = b.at("tol");
      x.cell = Eigen::Vector3i(b.at("cell")[0], b.at("cell")[1], b.at("cell")[2]);
      x.cutoff.center = c.spacing * x.cell.cast<double>();
      x.cutoff.r_in = b.at("r_in");
      x.cutoff.width = b.at("width");
      c.blocks.push_back(x);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, std::string("malformed catalog: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

struct BlockJet {
  double phi = 0.0;
  std::array<double, 3> value{};                                 // Psi_n phi
  std::array<std::array<double, 3>, 3> grad{};                    // [d][c]
  std::array<std::array<std::array<double, 3>, 3>, 3> hess{};     // [d][b][c]
};

BlockJet product_jet(const SpectralField& psi_n, const CutoffSpec& cs, const Vec3& offset,
                     const Vec3& local) {
  BlockJet J;
  const Vec3 y = offset + local;
  // |offset + local| - |offset| without cancellation
  const double r0 = offset.norm();
  const double r = y.norm();
  const double dr = r0 > 0.0 ? (2.0 * offset.dot(local) + local.squaredNorm()) / (r + r0) : r;
  J.phi = cs.value(r0, dr);
  if (J.phi == 0.0) return J;
  const double P = 2.0 * kPi * psi_n.period_scale();
  Vec3 red;
  for (int i = 0; i < 3; ++i) red[i] = std::fmod(offset[i], P) + local[i];
  const FieldJet f = evaluate_jet(psi_n, red, 2);
  const double d1 = cs.d1(r0, dr), d2 = cs.d2(r0, dr);
  Vec3 gphi = Vec3::Zero();
  Eigen::Matrix3d hphi = Eigen::Matrix3d::Zero();
  if (d1 != 0.0 || d2 != 0.0) {
    const Vec3 e = y / r;
    gphi = d1 * e;
    hphi = d2 * e * e.transpose() + (d1 / r) * (Eigen::Matrix3d::Identity() - e * e.transpose());
  }
  for (int d = 0; d < 3; ++d) {
    const double p = f.value[d].real();
    J.value[d] = p * J.phi;
    for (int c = 0; c < 3; ++c) J.grad[d][c] = f.grad[d][c].real() * J.phi + p * gphi[c];
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        J.hess[d][b][c] = f.hess[d][b][c].real() * J.phi + f.grad[d][b].real() * gphi[c] +
                          f.grad[d][c].real() * gphi[b] + p * hphi(b, c);
  }
  return J;
}

GluedSample curl_of(const BlockJet& J, int block) {
  GluedSample s;
  s.block = block;
  const auto& G = J.grad;
  s.u = Vec3(G[2][1] - G[1][2], G[0][2] - G[2][0], G[1][0] - G[0][1]);
  for (int b = 0; b < 3; ++b) {
    s.grad_u(0, b) = J.hess[2][b][1] - J.hess[1][b][2];
    s.grad_u(1, b) = J.hess[0][b][2] - J.hess[2][b][0];
    s.grad_u(2, b) = J.hess[1][b][0] - J.hess[0][b][1];
  }
  s.divergence = s.grad_u.trace();
  return s;
}

int block_at(const BlockCatalog& c, const Eigen::Vector3i& cell) {
  for (std::size_t i = 0; i < c.blocks.size(); ++i)
    if (c.blocks[i].cell == cell) return static_cast<int>(i);
  return -1;
}

}  // namespace

GluedSample evaluate_u(const BlockCatalog& c, const BlockPoint& p) {
  const int b = block_at(c, p.cell);
  if (b < 0) return GluedSample{};
  const Block& blk = c.blocks[b];
  GluedSample s = curl_of(product_jet(c.psi_n(blk.n), blk.cutoff, p.offset, p.local), b);
  return s;
}

GluedEvaluation evaluate_u(const BlockCatalog& c, const std::vector<BlockPoint>& points) {
  GluedEvaluation e;
  e.points = points;
  std::vector<SpectralField> psi(c.blocks.size());
  for (std::size_t i = 0; i < c.blocks.size(); ++i) psi[i] = c.psi_n(c.blocks[i].n);
  e.samples.resize(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const BlockPoint& p = points[i];
    const int b = block_at(c, p.cell);
    if (b >= 0) e.samples[i] = curl_of(product_jet(psi[b], c.blocks[b].cutoff, p.offset, p.local), b);
  });
  for (const GluedSample& s : e.samples) {
    const double g = s.grad_u.norm();
    if (g > 0.0) e.max_relative_divergence = std::max(e.max_relative_divergence, std::abs(s.divergence) / g);
  }
  return e;
}

GluedSample evaluate_u(const BlockCatalog& c, const Vec3& x) {
  require(c.spacing > 0.0, Errc::invalid_argument, "catalog has no lattice");
  BlockPoint p;
  for (int i = 0; i < 3; ++i) p.cell[i] = static_cast<int>(std::lround(x[i] / c.spacing));
  p.offset = x - c.spacing * p.cell.cast<double>();
  return evaluate_u(c, p);
}

// ---------------------------------------------------------------------------
// datum

DatumReport build_datum(const BlockCatalog& c, double eps) {
  require(eps > 0.0 && eps <= 1.0, Errc::invalid_argument, "eps must lie in (0, 1]");
  DatumReport d;
  d.eps = eps;
  d.n_eps = scale_index(eps, c.zeta);
  double upper = 0.0, rest = 0.0;
  for (int l = 1; l <= c.l_max; ++l) {
    const int b = c.find(d.n_eps, l);
    require(b >= 0, Errc::invalid_argument,
            "catalog has no block for scale " + std::to_string(d.n_eps) + " at l = " + std::to_string(l));
    const double w = 1.0 / (static_cast<double>(l) * l);
    d.terms.push_back({l, w, b});
    upper += w;
    if (l >= 2) rest += w;
  }
  const Block& b1 = c.blocks[d.terms[0].block];
  // Q_{n,1} is the cube of half-width 2 R_{n,1}
  d.f1_in_plateau = std::sqrt(std::max(0.0, 1.0 - c.tail_C / (2.0 * b1.R)));
  d.leak = std::sqrt(c.tail_C / b1.R);
  d.norm_lower = d.f1_in_plateau - d.leak * rest;
  d.norm_upper = upper;
  d.in_range = d.norm_lower >= 0.5 && d.norm_upper <= 2.0;
  return d;
}

CVec3 evaluate_datum(const BlockCatalog& c, const DatumReport& d, const BlochFamily& F,
                     const BlockPoint& p) {
  CVec3 out = CVec3::Zero();
  for (const DatumTerm& t : d.terms) {
    const Block& b = c.blocks[t.block];
    const Vec3 rel = c.spacing * (p.cell - b.cell).cast<double>() + p.offset + p.local;
    out += t.weight * evaluate(F, rel);
  }
  return out;
}

// ---------------------------------------------------------------------------
// checks

int CatalogReport::failures() const {
  int n = 0;
  for (const CheckRow& r : rows) n += r.pass ? 0 : 1;
  return n;
}

double w2inf_norm(const SpectralField& f, int m) {
  require(m >= 2, Errc::invalid_argument, "need at least two samples per axis");
  const double P = 2.0 * kPi * f.period_scale();
  double v = 0.0, g = 0.0, h = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        const FieldJet J = evaluate_jet(f, Vec3(a, b, c) * (P / m), 2);
        double sv = 0.0, sg = 0.0, sh = 0.0;
        for (int d = 0; d < 3; ++d) {
          sv += std::norm(J.value[d]);
          for (int i = 0; i < 3; ++i) {
            sg += std::norm(J.grad[d][i]);
            for (int k = 0; k < 3; ++k) sh += std::norm(J.hess[d][i][k]);
          }
        }
        v = std::max(v, std::sqrt(sv));
        g = std::max(g, std::sqrt(sg));
        h = std::max(h, std::sqrt(sh));
      }
  return v + g + h;
}

namespace {

CheckRow row(std::string name, int n, int l, double measured, double bound, double margin, bool pass) {
  return CheckRow{std::move(name), n, l, measured, bound, margin, pass};
}

double fd_divergence(const BlockCatalog& c, const BlockPoint& p, double h) {
  double div = 0.0;
  for (int a = 0; a < 3; ++a) {
    BlockPoint q = p;
    q.local[a] += h;
    const double up = evaluate_u(c, q).u[a];
    q.local[a] -= 2.0 * h;
    const double dn = evaluate_u(c, q).u[a];
    div += (up - dn) / (2.0 * h);
  }
  return div;
}

}  // namespace

CatalogReport check_catalog(const BlockCatalog& c, const std::vector<double>& eps_samples,
                            const CheckOptions& opt) {
  require(opt.radial_samples >= 16 && opt.plateau_samples >= 2 && opt.fd_h > 0.0,
          Errc::invalid_argument, "check resolution too coarse");
  CatalogReport rep;
  rep.lipschitz_C = opt.lipschitz_C;
  const double Cl = opt.lipschitz_C;
  rep.rows.push_back(row("hypothesis_U_ge_10", 0, 0, c.U, 10.0, c.U / 10.0 - 1.0, c.U >= 10.0));
  const double psi_norm = w2inf_norm(c.psi);
  const Vec3 dir = Vec3(1.0, 2.0, 3.0).normalized();

  for (std::size_t i = 0; i < c.blocks.size(); ++i) {
    const Block& b = c.blocks[i];
    const CutoffSpec& cs = b.cutoff;
    const double tail = c.tail_C / b.R;
    const double lhs = 1.0 / b.R + tail;
    rep.rows.push_back(row("tail_radius", b.n, b.l, lhs, b.tol, 1.0 - lhs / b.tol, lhs < b.tol));

    // plateau contains the cube Q_{2R}; phi == 1 there
    double dev = 0.0;
    for (int k = 0; k <= 64; ++k) dev = std::max(dev, std::abs(1.0 - cs.value(cs.r_in * k / 64.0)));
    const double need = 2.0 * kCubeToBall * b.R;
    rep.rows.push_back(row("cutoff_plateau", b.n, b.l, cs.r_in, need, cs.r_in / need - 1.0,
                           dev == 0.0 && cs.r_in >= need));

    // radial grid plus the analytic extremal points of the ramp
    double g = 0.0, hs = 0.0, lo = 1.0, hi = 0.0;
    std::vector<double> ts;
    for (int k = 0; k <= opt.radial_samples; ++k) ts.push_back(static_cast<double>(k) / opt.radial_samples);
    ts.push_back(0.5);
    ts.push_back((3.0 - std::sqrt(3.0)) / 6.0);
    ts.push_back((3.0 + std::sqrt(3.0)) / 6.0);
    for (double t : ts) {
      const double r = cs.r_in + t * cs.width;
      const double d1 = cs.d1(r), d2 = cs.d2(r), v = cs.value(r);
      g = std::max(g, std::abs(d1));
      hs = std::max({hs, std::abs(d2), std::abs(d1) / r});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    rep.rows.push_back(row("cutoff_range", b.n, b.l, hi, 1.0, std::min(lo, 1.0 - hi), lo >= 0.0 && hi <= 1.0));
    rep.rows.push_back(row("cutoff_derivatives", b.n, b.l, g + hs, b.tol, 1.0 - (g + hs) / b.tol, g + hs < b.tol));

    // sampled W^{2,inf} of Psi_n phi, Lipschitz bound, solenoidality
    const SpectralField pn = c.psi_n(b.n);
    const double P = 2.0 * kPi * pn.period_scale();
    std::vector<BlockPoint> pts;
    const int m = opt.plateau_samples;
    auto add_cell = [&](const Vec3& offset, int k) {
      for (int a1 = 0; a1 < k; ++a1)
        for (int a2 = 0; a2 < k; ++a2)
          for (int a3 = 0; a3 < k; ++a3) {
            BlockPoint p;
            p.cell = b.cell;
            p.offset = offset;
            p.local = Vec3(a1, a2, a3) * (P / k);
            pts.push_back(p);
          }
    };
    add_cell(Vec3::Zero(), m);
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) add_cell((cs.r_in + t * cs.width) * dir, 3);
    double sv = 0.0, sg = 0.0, sh = 0.0, lip = 0.0, div = 0.0, plateau_dev = 0.0;
    for (const BlockPoint& p : pts) {
      const BlockJet J = product_jet(pn, cs, p.offset, p.local);
      double v = 0.0, gg = 0.0, hh = 0.0;
      for (int d = 0; d < 3; ++d) {
        v += J.value[d] * J.value[d];
        for (int k = 0; k < 3; ++k) {
          gg += J.grad[d][k] * J.grad[d][k];
          for (int l = 0; l < 3; ++l) hh += J.hess[d][k][l] * J.hess[d][k][l];
        }
      }
      sv = std::max(sv, std::sqrt(v));
      sg = std::max(sg, std::sqrt(gg));
      sh = std::max(sh, std::sqrt(hh));
      const GluedSample s = curl_of(J, static_cast<int>(i));
      const double gn = s.grad_u.norm();
      lip = std::max(lip, gn);
      if (gn > 0.0) div = std::max(div, std::abs(s.divergence) / gn);
      if (p.offset.isZero()) {
        // plateau: u must equal U_n = curl Psi_n
        const FieldJet f = evaluate_jet(pn, p.local, 1);
        const Vec3 Un(f.grad[2][1].real() - f.grad[1][2].real(), f.grad[0][2].real() - f.grad[2][0].real(),
                      f.grad[1][0].real() - f.grad[0][1].real());
        plateau_dev = std::max(plateau_dev, (s.u - Un).norm());
      }
    }
    const double ratio = (sv + sg + sh) / psi_norm;
    rep.rows.push_back(row("w2inf_ratio", b.n, b.l, ratio, Cl,
                           std::min(ratio * Cl - 1.0, 1.0 - ratio / Cl), ratio >= 1.0 / Cl && ratio <= Cl));
    rep.rows.push_back(row("lipschitz_grad_u", b.n, b.l, lip, Cl * psi_norm, 1.0 - lip / (Cl * psi_norm),
                           lip <= Cl * psi_norm));
    rep.rows.push_back(row("plateau_u_equals_Un", b.n, b.l, plateau_dev, 1e-12, 1.0 - plateau_dev / 1e-12,
                           plateau_dev <= 1e-12));
    rep.rows.push_back(row("solenoidal_analytic", b.n, b.l, div, opt.div_tol, 1.0 - div / opt.div_tol,
                           div <= opt.div_tol));
    // central differences converge at second order
    double worst = INFINITY;
    for (const BlockPoint& p : {pts[1], pts[pts.size() - 5]}) {
      const double gn = std::max(evaluate_u(c, p).grad_u.norm(), 1e-300);
      const double e1 = std::abs(fd_divergence(c, p, opt.fd_h)) / gn;
      const double e2 = std::abs(fd_divergence(c, p, 0.5 * opt.fd_h)) / gn;
      const double r = (e1 < 1e-10 && e2 < 1e-10) ? 4.0 : e1 / std::max(e2, 1e-300);
      worst = std::min(worst, r);
    }
    rep.rows.push_back(row("solenoidal_fd_order", b.n, b.l, worst, 3.0, worst / 3.0 - 1.0, worst >= 3.0 && worst <= 5.5));
  }

  // separation between supports
  double sep_margin = INFINITY, sep_measured = 0.0, sep_bound = 0.0;
  int overlaps = 0;
  for (std::size_t i = 0; i < c.blocks.size(); ++i)
    for (std::size_t k = i + 1; k < c.blocks.size(); ++k) {
      const Block &a = c.blocks[i], &b = c.blocks[k];
      const double dist = c.spacing * (a.cell - b.cell).cast<double>().norm() - a.cutoff.r_out() - b.cutoff.r_out();
      const double need = 2.0 * std::max(a.R, b.R);
      if (dist <= 0.0) ++overlaps;
      if (dist / need - 1.0 < sep_margin) {
        sep_margin = dist / need - 1.0;
        sep_measured = dist;
        sep_bound = need;
      }
    }
  if (c.blocks.size() > 1) {
    rep.rows.push_back(row("separation", 0, 0, sep_measured, sep_bound, sep_margin, sep_margin >= 0.0));
    rep.rows.push_back(row("supports_disjoint", 0, 0, overlaps, 0.0, -overlaps, overlaps == 0));
  }

  for (double eps : eps_samples) {
    const DatumReport d = build_datum(c, eps);
    const int n = d.n_eps;
    rep.rows.push_back(row("datum_norm_lower", n, 0, d.norm_lower, 0.5, d.norm_lower / 0.5 - 1.0, d.norm_lower >= 0.5));
    rep.rows.push_back(row("datum_norm_upper", n, 0, d.norm_upper, 2.0, 1.0 - d.norm_upper / 2.0, d.norm_upper <= 2.0));
    rep.rows.push_back(row("f1_in_plateau", n, 1, d.f1_in_plateau, 0.9, d.f1_in_plateau / 0.9 - 1.0, d.f1_in_plateau >= 0.9));
    rep.rows.push_back(row("leak_outside_R", n, 1, d.leak, 0.1, 1.0 - d.leak / 0.1, d.leak <= 0.1));
  }
  return rep;
}

double dyadic_sweep(const SpectralField& psi, double zeta, int n_max, int l_max, const TailLaw& tail,
                    const std::vector<double>& eps_samples, double U_max, std::vector<SweepRow>* rows) {
  require(U_max >= 1.0, Errc::invalid_argument, "U_max must be >= 1");
  for (double U = 1.0; U <= U_max; U *= 2.0) {
    SweepRow r;
    r.U = U;
    try {
      const BlockCatalog c = plan_catalog(psi, zeta, U, n_max, l_max, tail);
      for (const CheckRow& x : check_catalog(c, eps_samples).rows)
        if (!x.pass && x.check != "hypothesis_U_ge_10") ++r.failures;
    } catch (const Error& e) {
      if (e.code() != Errc::catalog_infeasible) throw;
      r.failures = -1;
    }
    if (rows) rows->push_back(r);
    if (r.failures == 0) return U;
  }
  return 0.0;
}

}  // namespace alphadyn
