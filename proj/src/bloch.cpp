#include "alphadyn/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "alphadyn/error.hpp"
#include "alphadyn/field_io.hpp"
#include "alphadyn/parallel.hpp"

namespace alphadyn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPiCubed = 8.0 * kPi * kPi * kPi;

double legendre(int l, double t) {
  double p0 = 1.0, p1 = t;
  if (l == 0) return p0;
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

const GaussRule& cached_rule(int q) {
  static std::map<int, GaussRule> cache;
  auto it = cache.find(q);
  if (it == cache.end()) it = cache.emplace(q, gauss_legendre(q)).first;
  return it->second;
}

// j_l(x) for any real x
double sph_j(int l, double x) {
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  const double ax = std::abs(x);
  double v;
  if (ax > l + 1.0) {
    // upward recurrence is stable past the turning point; libstdc++ throws for large x
    const double s = std::sin(ax), c = std::cos(ax);
    double jm = s / ax, j = s / (ax * ax) - c / ax;
    if (l == 0) j = jm;
    for (int n = 1; n < l; ++n) {
      const double jp = (2.0 * n + 1.0) / ax * j - jm;
      jm = j;
      j = jp;
    }
    v = j;
  } else {
    v = std::sph_bessel(static_cast<unsigned>(l), ax);
  }
  return (x < 0.0 && (l & 1)) ? -v : v;
}

cplx ipow(int l) {
  static const cplx t[4] = {1.0, cplx(0, 1), -1.0, cplx(0, -1)};
  return t[l & 3];
}

// Legendre expansion coefficients of every Lagrange basis polynomial
struct ProfileBasis {
  int q = 1;
  double J = 0.0;
  bool point = false;
  double point_amp = 1.0;
  std::vector<cplx> coef;  // coef[a * q + l] = J (2l + 1) w_a P_l(t_a) i^l

  ProfileBasis(const BlochBox& b) : q(b.order), J(b.half_width), point(b.half_width == 0.0) {
    if (point) {
      point_amp = std::cbrt(b.point_weight);
      return;
    }
    const GaussRule& r = cached_rule(q);
    coef.resize(static_cast<std::size_t>(q * q));
    for (int a = 0; a < q; ++a)
      for (int l = 0; l < q; ++l)
        coef[a * q + l] = J * (2.0 * l + 1.0) * r.w[a] * legendre(l, r.t[a]) * ipow(l);
  }

  void eval(double x, cplx* out) const {
    if (point) {
      out[0] = point_amp;
      return;
    }
    double jl[64];
    for (int l = 0; l < q; ++l) jl[l] = sph_j(l, J * x);
    for (int a = 0; a < q; ++a) {
      cplx s = 0.0;
      for (int l = 0; l < q; ++l) s += coef[a * q + l] * jl[l];
      out[a] = s;
    }
  }
};

// per box and component, coefficient tensor over ((a1,k1),(a2,k2),(a3,k3))
struct BoxTensor {
  int D = 0;
  std::array<std::vector<cplx>, 3> T;
};

BoxTensor box_tensor(const BlochFamily& f, std::size_t b) {
  const int q = f.boxes[b].order;
  const int N = f.N(), S = 2 * N + 1;
  BoxTensor bt;
  bt.D = q * S;
  const std::size_t D = static_cast<std::size_t>(bt.D);
  for (auto& t : bt.T) t.assign(D * D * D, 0.0);
  for (int a1 = 0; a1 < q; ++a1)
    for (int a2 = 0; a2 < q; ++a2)
      for (int a3 = 0; a3 < q; ++a3) {
        const SpectralField& G = f.fields[b][(a1 * q + a2) * q + a3];
        for (std::size_t i = 0; i < G.modes(); ++i) {
          const WaveVector k = G.wave(i);
          const std::size_t i1 = a1 * S + k.k1 + N, i2 = a2 * S + k.k2 + N, i3 = a3 * S + k.k3 + N;
          const std::size_t idx = (i1 * D + i2) * D + i3;
          for (int c = 0; c < 3; ++c) bt.T[c][idx] = G.component(c)[i];
        }
      }
  return bt;
}

using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out[i1,i2,i3] = sum A1[i1,a] A2[i2,b] A3[i3,c] T[a,b,c]
std::vector<cplx> contract3(const std::vector<cplx>& T, int d1, int d2, int d3, const RowMat& A1,
                            const RowMat& A2, const RowMat& A3) {
  const Eigen::Index n1 = A1.rows(), n2 = A2.rows(), n3 = A3.rows();
  Eigen::Map<const RowMat> T3(T.data(), static_cast<Eigen::Index>(d1) * d2, d3);
  const RowMat X1 = T3 * A3.transpose();  // (d1 d2) x n3
  RowMat X2(static_cast<Eigen::Index>(d1) * n2, n3);
  for (int a = 0; a < d1; ++a)
    X2.middleRows(a * n2, n2).noalias() = A2 * X1.middleRows(static_cast<Eigen::Index>(a) * d2, d2);
  Eigen::Map<const RowMat> X2v(X2.data(), d1, n2 * n3);
  std::vector<cplx> out(static_cast<std::size_t>(n1 * n2 * n3));
  Eigen::Map<RowMat> O(out.data(), n1, n2 * n3);
  O.noalias() = A1 * X2v;
  return out;
}

// axis matrix P[m, a S + k + N] = phi_a(x_m) exp(i (k / s + c) x_m)
RowMat axis_matrix(const BlochBox& box, const ProfileBasis& pb, int N, double s, double c,
                   const std::vector<double>& xs) {
  const int q = box.order, S = 2 * N + 1;
  RowMat P(static_cast<Eigen::Index>(xs.size()), q * S);
  std::vector<cplx> phi(q);
  for (std::size_t m = 0; m < xs.size(); ++m) {
    pb.eval(xs[m], phi.data());
    for (int k = -N; k <= N; ++k) {
      const cplx e = std::polar(1.0, (k / s + c) * xs[m]);
      for (int a = 0; a < q; ++a) P(static_cast<Eigen::Index>(m), a * S + k + N) = phi[a] * e;
    }
  }
  return P;
}

double default_h(const BlochFamily& f) { return kPi * f.period_scale() / (4.0 * (f.N() + 1)); }

}  // namespace

GaussRule gauss_legendre(int n) {
  require(n >= 1 && n <= 60, Errc::invalid_argument, "Gauss-Legendre order must be in [1, 60]");
  GaussRule r;
  r.t.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = t;
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    if (n == 1) {
      r.t[0] = 0.0;
      r.w[0] = 2.0;
      return r;
    }
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);
    r.t[i] = -t;
    r.t[n - 1 - i] = t;
    r.w[i] = r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.t[n / 2] = 0.0;
  return r;
}

cplx lagrange_profile(const GaussRule& rule, int a, double J, double x) {
  const int q = static_cast<int>(rule.t.size());
  require(a >= 0 && a < q, Errc::invalid_argument, "basis index out of range");
  cplx s = 0.0;
  for (int l = 0; l < q; ++l)
    s += (2.0 * l + 1.0) * rule.w[a] * legendre(l, rule.t[a]) * ipow(l) * sph_j(l, J * x);
  return J * s;
}

int BlochFamily::N() const {
  require(!fields.empty() && !fields[0].empty(), Errc::invalid_argument, "empty family");
  return fields[0][0].N();
}

double BlochFamily::period_scale() const {
  require(!fields.empty() && !fields[0].empty(), Errc::invalid_argument, "empty family");
  return fields[0][0].period_scale();
}

std::size_t BlochFamily::node_count() const {
  std::size_t n = 0;
  for (const auto& f : fields) n += f.size();
  return n;
}

Vec3 BlochFamily::node(std::size_t b, int a1, int a2, int a3) const {
  const BlochBox& box = boxes.at(b);
  if (box.half_width == 0.0) return box.center;
  const GaussRule& r = cached_rule(box.order);
  return box.center + box.half_width * Vec3(r.t[a1], r.t[a2], r.t[a3]);
}

double BlochFamily::weight(std::size_t b, int a1, int a2, int a3) const {
  const BlochBox& box = boxes.at(b);
  if (box.half_width == 0.0) return box.point_weight;
  const GaussRule& r = cached_rule(box.order);
  const double J = box.half_width;
  return J * J * J * r.w[a1] * r.w[a2] * r.w[a3];
}

void validate(const BlochFamily& f) {
  require(!f.boxes.empty(), Errc::invalid_argument, "family has no boxes");
  require(f.fields.size() == f.boxes.size(), Errc::invalid_argument, "one field set per box required");
  const int N = f.N();
  const double s = f.period_scale();
  const double half_cell = 0.5 / s;
  for (std::size_t b = 0; b < f.boxes.size(); ++b) {
    const BlochBox& box = f.boxes[b];
    const bool point = box.half_width == 0.0;
    require(box.half_width >= 0.0 && std::isfinite(box.half_width), Errc::invalid_argument,
            "box half-width must be finite and non-negative");
    require(box.order >= 1 && box.order <= 60, Errc::invalid_argument, "box order must be in [1, 60]");
    require(!point || (box.order == 1 && box.point_weight > 0.0), Errc::invalid_argument,
            "point nodes need order 1 and a positive weight");
    const std::size_t q = static_cast<std::size_t>(box.order);
    require(f.fields[b].size() == q * q * q, Errc::invalid_argument, "box needs order^3 fields");
    for (const SpectralField& g : f.fields[b]) {
      require(g.N() == N, Errc::invalid_truncation, "family fields must share the truncation");
      require(g.period_scale() == s, Errc::invalid_scale, "family fields must share the period scale");
    }
    for (int i = 0; i < 3; ++i)
      require(std::abs(box.center[i]) + box.half_width < half_cell, Errc::invalid_argument,
              "box leaves the fundamental j-cell");
    for (std::size_t b2 = 0; b2 < b; ++b2) {
      const BlochBox& o = f.boxes[b2];
      bool apart = false;
      for (int i = 0; i < 3; ++i)
        apart = apart || std::abs(box.center[i] - o.center[i]) >= box.half_width + o.half_width;
      if (point && o.half_width == 0.0) apart = (box.center - o.center).norm() > 0.0;
      require(apart, Errc::invalid_argument,
              "boxes " + std::to_string(b2) + " and " + std::to_string(b) + " overlap");
    }
  }
  if (f.conjugate_paired) {
    const std::size_t h = f.boxes.size() / 2;
    require(f.boxes.size() % 2 == 0, Errc::invalid_argument, "paired family needs an even box count");
    for (std::size_t b = 0; b < h; ++b) {
      const BlochBox &p = f.boxes[b], &m = f.boxes[b + h];
      require((p.center + m.center).norm() <= 1e-14 && p.half_width == m.half_width &&
                  p.order == m.order,
              Errc::invalid_argument, "mirror box does not match");
      const int q = p.order;
      for (int a = 0; a < q * q * q; ++a) {
        const int a1 = a / (q * q), a2 = (a / q) % q, a3 = a % q;
        const int r = ((q - 1 - a1) * q + (q - 1 - a2)) * q + (q - 1 - a3);
        const SpectralField d = f.fields[b + h][r] - conjugate(f.fields[b][a]);
        require(l2(d) <= 1e-12 * (1.0 + l2(f.fields[b][a])), Errc::invalid_argument,
                "mirror fields are not conjugate reflections");
      }
    }
  }
}

BlochFamily point_family(const SpectralField& G, const Vec3& j, double weight) {
  BlochFamily f;
  BlochBox b;
  b.center = j;
  b.half_width = 0.0;
  b.order = 1;
  b.point_weight = weight;
  f.boxes.push_back(b);
  f.fields.push_back({G});
  f.exponents.push_back({});
  validate(f);
  return f;
}

BlochFamily constant_band(const SpectralField& G, const Vec3& center, double J) {
  require(J > 0.0, Errc::invalid_argument, "band half-width must be positive");
  BlochFamily f;
  BlochBox b;
  b.center = center;
  b.half_width = J;
  b.order = 1;
  f.boxes.push_back(b);
  f.fields.push_back({G});
  f.exponents.push_back({});
  validate(f);
  return f;
}

namespace {

void add_mirrors(BlochFamily& f) {
  const std::size_t h = f.boxes.size();
  for (std::size_t b = 0; b < h; ++b) {
    BlochBox m = f.boxes[b];
    m.center = -m.center;
    const int q = m.order;
    std::vector<SpectralField> fs(f.fields[b].size());
    std::vector<cplx> ex(f.exponents[b].size());
    for (int a = 0; a < q * q * q; ++a) {
      const int a1 = a / (q * q), a2 = (a / q) % q, a3 = a % q;
      const int r = ((q - 1 - a1) * q + (q - 1 - a2)) * q + (q - 1 - a3);
      fs[r] = conjugate(f.fields[b][a]);
      if (!ex.empty()) ex[r] = std::conj(f.exponents[b][a]);
    }
    f.boxes.push_back(m);
    f.fields.push_back(std::move(fs));
    f.exponents.push_back(std::move(ex));
  }
  f.conjugate_paired = true;
}

}  // namespace

BlochFamily sample_family(const std::function<SpectralField(const Vec3&)>& G, const Vec3& center,
                          double J, int order, bool paired) {
  require(J > 0.0, Errc::invalid_argument, "band half-width must be positive");
  require(order >= 1, Errc::invalid_argument, "order must be positive");
  BlochFamily f;
  BlochBox b;
  b.center = center;
  b.half_width = J;
  b.order = order;
  f.boxes.push_back(b);
  f.fields.emplace_back();
  f.exponents.emplace_back();
  for (int a1 = 0; a1 < order; ++a1)
    for (int a2 = 0; a2 < order; ++a2)
      for (int a3 = 0; a3 < order; ++a3) f.fields[0].push_back(G(f.node(0, a1, a2, a3)));
  if (paired) add_mirrors(f);
  validate(f);
  return f;
}

double family_mass(const BlochFamily& f) {
  double m = 0.0;
  for (std::size_t b = 0; b < f.boxes.size(); ++b) {
    const int q = f.boxes[b].order;
    for (int a = 0; a < q * q * q; ++a) {
      const double n = l2(f.fields[b][a]);
      m += f.weight(b, a / (q * q), (a / q) % q, a % q) * n * n;
    }
  }
  return kTwoPiCubed * m;
}

void scale(BlochFamily& f, double c) {
  for (auto& fs : f.fields)
    for (SpectralField& g : fs) g *= c;
}

BlochFamily dilate(const BlochFamily& f, double s) {
  require(s > 0.0 && std::isfinite(s), Errc::invalid_scale, "dilation factor must be positive");
  BlochFamily out = f;
  const double amp = std::pow(s, 1.5);
  for (std::size_t b = 0; b < out.boxes.size(); ++b) {
    BlochBox& box = out.boxes[b];
    box.center /= s;
    const bool point = box.half_width == 0.0;
    box.half_width /= s;
    if (point) box.point_weight /= amp;
    for (SpectralField& g : out.fields[b]) {
      g.set_period_scale(g.period_scale() * s);
      if (!point) g *= amp;
    }
  }
  return out;
}

double SampledVolume::max_imag_ratio() const {
  double im = 0.0, mod = 0.0;
  for (const auto& v : values)
    for (const cplx& z : v) {
      im = std::max(im, std::abs(z.imag()));
      mod = std::max(mod, std::abs(z));
    }
  return mod > 0.0 ? im / mod : 0.0;
}

SampledVolume synthesize(const BlochFamily& f, const VolumeGeometry& g) {
  validate(f);
  require(g.R > 0.0 && std::isfinite(g.R), Errc::invalid_argument, "box half-width must be positive");
  SampledVolume v;
  v.R = g.R;
  v.h = g.h > 0.0 ? g.h : default_h(f);
  const long n = 2 * std::lround(std::ceil(g.R / v.h - 1e-9)) + 1;
  require(n <= 401, Errc::too_large, "sampled volume exceeds 401 points per axis");
  v.n = static_cast<int>(n);
  v.h = 2.0 * g.R / static_cast<double>(n - 1);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (long m = 0; m < n; ++m) xs[m] = -g.R + static_cast<double>(m) * v.h;
  const std::size_t total = static_cast<std::size_t>(n * n * n);
  for (auto& c : v.values) c.assign(total, 0.0);
  const int N = f.N();
  const double s = f.period_scale();
  for (std::size_t b = 0; b < f.boxes.size(); ++b) {
    const BoxTensor bt = box_tensor(f, b);
    const ProfileBasis pb(f.boxes[b]);
    std::array<RowMat, 3> P;
    for (int i = 0; i < 3; ++i) P[i] = axis_matrix(f.boxes[b], pb, N, s, f.boxes[b].center[i], xs);
    for (int c = 0; c < 3; ++c) {
      const std::vector<cplx> o = contract3(bt.T[c], bt.D, bt.D, bt.D, P[0], P[1], P[2]);
      for (std::size_t i = 0; i < total; ++i) v.values[c][i] += o[i];
    }
  }
  return v;
}

CVec3 evaluate(const BlochFamily& f, const Vec3& x) {
  CVec3 out = CVec3::Zero();
  const int N = f.N();
  const double s = f.period_scale();
  for (std::size_t b = 0; b < f.boxes.size(); ++b) {
    const BoxTensor bt = box_tensor(f, b);
    const ProfileBasis pb(f.boxes[b]);
    std::array<RowMat, 3> P;
    for (int i = 0; i < 3; ++i) P[i] = axis_matrix(f.boxes[b], pb, N, s, f.boxes[b].center[i], {x[i]});
    for (int c = 0; c < 3; ++c) out[c] += contract3(bt.T[c], bt.D, bt.D, bt.D, P[0], P[1], P[2])[0];
  }
  return out;
}

void save_volume(const std::filesystem::path& path, const SampledVolume& v) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), Errc::io_error, "cannot open " + path.string());
  std::vector<double> payload;
  payload.reserve(6 * v.values[0].size());
  for (const auto& c : v.values)
    for (const cplx& z : c) {
      payload.push_back(z.real());
      payload.push_back(z.imag());
    }
  nlohmann::json h = {{"R", v.R}, {"h", v.h}, {"n", v.n}, {"components", 3}};
  write_document(os, "ALPHADYN-VOLUME 1", h, payload);
  require(bool(os), Errc::io_error, "write failed for " + path.string());
}

SampledVolume load_volume(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), Errc::io_error, "cannot open " + path.string());
  const Document d = read_document(is, "ALPHADYN-VOLUME 1");
  SampledVolume v;
  v.R = d.header.at("R").get<double>();
  v.h = d.header.at("h").get<double>();
  v.n = d.header.at("n").get<int>();
  require(v.h > 0.0 && v.n > 0, Errc::io_error, "bad volume geometry");
  const std::size_t total = static_cast<std::size_t>(v.n) * v.n * v.n;
  require(d.payload.size() == 6 * total, Errc::io_error, "volume payload size mismatch");
  for (int c = 0; c < 3; ++c) {
    v.values[c].resize(total);
    for (std::size_t i = 0; i < total; ++i)
      v.values[c][i] = cplx(d.payload[2 * (c * total + i)], d.payload[2 * (c * total + i) + 1]);
    for (const cplx& z : v.values[c])
      require(std::isfinite(z.real()) && std::isfinite(z.imag()), Errc::io_error, "non-finite sample");
  }
  return v;
}

// ---------------------------------------------------------------------------
// box mass

BoxMass::BoxMass(const BlochFamily& f, const std::vector<double>& radii, double h) : f_(&f) {
  validate(f);
  require(!radii.empty(), Errc::invalid_argument, "no radii requested");
  h_ = h > 0.0 ? h : default_h(f);
  rhs_ = family_mass(f);
  for (double R : radii) {
    require(R > 0.0 && std::isfinite(R), Errc::invalid_argument, "radii must be positive");
    grid_idx_.push_back(std::max(1L, std::lround(R / h_)));
  }
  const long M = *std::max_element(grid_idx_.begin(), grid_idx_.end());
  require(M <= 20'000'000L, Errc::too_large, "box mass grid exceeds 2e7 points per axis");
  std::vector<std::size_t> order(grid_idx_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid_idx_[a] < grid_idx_[b]; });

  const int N = f.N();
  const double s = f.period_scale();
  const int nb = static_cast<int>(f.boxes.size());
  const int nd = 4 * N + 1;
  const std::size_t nr = radii.size();

  // profiles on x_m = m h, m = 0..M
  std::vector<std::vector<cplx>> prof(nb);
  for (int b = 0; b < nb; ++b) {
    const ProfileBasis pb(f.boxes[b]);
    const int q = f.boxes[b].order;
    prof[b].resize(static_cast<std::size_t>(M + 1) * q);
    for (long m = 0; m <= M; ++m) pb.eval(static_cast<double>(m) * h_, prof[b].data() + m * q);
  }

  K_.assign(static_cast<std::size_t>(nb * nb), {});
  std::vector<double> re1(M + 1), im1(M + 1), re2(M + 1), im2(M + 1);
  std::vector<double> zr(nd), zi(nd), cr(nd), ci(nd), om(nd), ar(nd), ai(nd), vr(nd), vi(nd);
  for (int b = 0; b < nb; ++b)
    for (int b2 = b; b2 < nb; ++b2) {
      const BlochBox &B1 = f.boxes[b], &B2 = f.boxes[b2];
      const int q = B1.order, q2 = B2.order;
      const Vec3 dc = B2.center - B1.center;
      // mirror pairs share profiles and center offsets
      bool reused = false;
      for (int e = 0; e < b && !reused; ++e)
        for (int e2 = e; e2 < nb && !reused; ++e2) {
          const BlochBox &E1 = f.boxes[e], &E2 = f.boxes[e2];
          if (E1.order == q && E2.order == q2 && E1.half_width == B1.half_width &&
              E2.half_width == B2.half_width && E1.point_weight == B1.point_weight &&
              E2.point_weight == B2.point_weight && (E2.center - E1.center - dc).norm() == 0.0) {
            K_[b * nb + b2] = K_[e * nb + e2];
            reused = true;
          }
        }
      if (reused) continue;
      auto& Kp = K_[b * nb + b2];
      Kp.assign(3, std::vector<cplx>(static_cast<std::size_t>(q * q2 * nd) * nr, 0.0));
      auto slot = [&](int i, int a, int a2, int d) {
        return Kp[i].data() + ((static_cast<std::size_t>(a) * q2 + a2) * nd + d) * nr;
      };
      const bool hermitian = b == b2;
      for (int a = 0; a < q; ++a)
        for (int a2 = hermitian ? a : 0; a2 < q2; ++a2) {
          // the reflected node indices give the profiles at -x
          const int ra = q - 1 - a, ra2 = q2 - 1 - a2;
          for (long m = 0; m <= M; ++m) {
            const cplx p1 = std::conj(prof[b][m * q + a]) * prof[b2][m * q2 + a2];
            const cplx p2 = std::conj(prof[b][m * q + ra]) * prof[b2][m * q2 + ra2];
            re1[m] = p1.real();
            im1[m] = p1.imag();
            re2[m] = p2.real();
            im2[m] = p2.imag();
          }
          for (int i = 0; i < 3; ++i) {
            for (int d = 0; d < nd; ++d) {
              om[d] = (d - 2 * N) / s + dc[i];
              cr[d] = std::cos(om[d] * h_);
              ci[d] = std::sin(om[d] * h_);
              zr[d] = 1.0;
              zi[d] = 0.0;
              ar[d] = re1[0];
              ai[d] = im1[0];
            }
            std::size_t next = 0;
            for (long m = 1; m <= M; ++m) {
              if ((m & 255) == 0) {
                for (int d = 0; d < nd; ++d) {
                  zr[d] = std::cos(om[d] * h_ * static_cast<double>(m));
                  zi[d] = std::sin(om[d] * h_ * static_cast<double>(m));
                }
              } else {
                for (int d = 0; d < nd; ++d) {
                  const double t = zr[d] * cr[d] - zi[d] * ci[d];
                  zi[d] = zr[d] * ci[d] + zi[d] * cr[d];
                  zr[d] = t;
                }
              }
              const double x1 = re1[m], y1 = im1[m], x2 = re2[m], y2 = im2[m];
              // p1 z + p2 conj(z)
              for (int d = 0; d < nd; ++d) {
                vr[d] = (x1 + x2) * zr[d] - (y1 - y2) * zi[d];
                vi[d] = (x1 - x2) * zi[d] + (y1 + y2) * zr[d];
                ar[d] += vr[d];
                ai[d] += vi[d];
              }
              while (next < nr && grid_idx_[order[next]] == m) {
                for (int d = 0; d < nd; ++d)
                  slot(i, a, a2, d)[order[next]] = h_ * cplx(ar[d] - 0.5 * vr[d], ai[d] - 0.5 * vi[d]);
                ++next;
              }
            }
            if (hermitian && a2 != a)
              for (int d = 0; d < nd; ++d)
                for (std::size_t r = 0; r < nr; ++r)
                  slot(i, a2, a, nd - 1 - d)[r] = std::conj(slot(i, a, a2, d)[r]);
          }
        }
    }
  tensors_.reserve(nb);
  for (int b = 0; b < nb; ++b) {
    BoxTensor bt = box_tensor(f, b);
    tensors_.push_back({bt.D, std::move(bt.T)});
  }
  cache_.assign(nr, -1.0);
}

double BoxMass::R(std::size_t i) const { return static_cast<double>(grid_idx_.at(i)) * h_; }

double BoxMass::mass(std::size_t i) {
  require(i < cache_.size(), Errc::invalid_argument, "radius index out of range");
  if (cache_[i] >= 0.0) return cache_[i];
  const BlochFamily& f = *f_;
  const int N = f.N(), S = 2 * N + 1, nd = 4 * N + 1;
  const int nb = static_cast<int>(f.boxes.size());
  const std::size_t nr = cache_.size();
  double total = 0.0;
  for (int b = 0; b < nb; ++b)
    for (int b2 = b; b2 < nb; ++b2) {
      const int q = f.boxes[b].order, q2 = f.boxes[b2].order;
      const auto& Kp = K_[b * nb + b2];
      std::array<RowMat, 3> A;
      for (int ax = 0; ax < 3; ++ax) {
        A[ax].resize(q * S, q2 * S);
        for (int a = 0; a < q; ++a)
          for (int a2 = 0; a2 < q2; ++a2)
            for (int k = 0; k < S; ++k)
              for (int k2 = 0; k2 < S; ++k2) {
                const int d = k2 - k + 2 * N;
                A[ax](a * S + k, a2 * S + k2) =
                    Kp[ax][((static_cast<std::size_t>(a) * q2 + a2) * nd + d) * nr + i];
              }
      }
      const Tensor& t1 = tensors_[b];
      const Tensor& t2 = tensors_[b2];
      double part = 0.0;
      for (int c = 0; c < 3; ++c) {
        const std::vector<cplx> y = contract3(t2.T[c], t2.D, t2.D, t2.D, A[0], A[1], A[2]);
        cplx acc = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) acc += std::conj(t1.T[c][k]) * y[k];
        part += acc.real();
      }
      total += (b == b2 ? 1.0 : 2.0) * part;
    }
  cache_[i] = total;
  return total;
}

ParsevalReport parseval_check(const BlochFamily& f, const std::vector<double>& radii, double h,
                              double tol) {
  require(!radii.empty(), Errc::invalid_argument, "no radii requested");
  for (std::size_t i = 1; i < radii.size(); ++i)
    require(radii[i] > radii[i - 1], Errc::invalid_argument, "radii must increase");
  BoxMass bm(f, radii, h);
  ParsevalReport rep;
  rep.rhs = bm.rhs();
  for (std::size_t i = 0; i < radii.size(); ++i) {
    ParsevalRow r;
    r.R = bm.R(i);
    r.lhs = bm.mass(i);
    r.rel_err = rep.rhs > 0.0 ? std::abs(r.lhs - rep.rhs) / rep.rhs : std::abs(r.lhs);
    rep.rows.push_back(r);
  }
  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    rep.decreasing = rep.decreasing && rep.rows[i].rel_err <= rep.rows[i - 1].rel_err * (1.0 + 1e-9) + 1e-14;
  rep.converged = rep.decreasing && rep.rows.back().rel_err <= tol;
  return rep;
}

double concentration_radius(const BlochFamily& f, double delta, const ConcentrationOptions& opt) {
  require(delta > 0.0 && delta < 1.0, Errc::invalid_argument, "delta must be in (0, 1)");
  require(opt.nR >= 2, Errc::invalid_argument, "need at least two radii");
  double R_max = opt.R_max;
  if (R_max <= 0.0) {
    double J = INFINITY;
    for (const BlochBox& b : f.boxes)
      if (b.half_width > 0.0) J = std::min(J, b.half_width);
    require(std::isfinite(J), Errc::not_concentrated, "point families carry infinite mass");
    R_max = 40.0 / J;
  }
  std::vector<double> radii(static_cast<std::size_t>(opt.nR));
  for (int i = 0; i < opt.nR; ++i) radii[i] = R_max * (i + 1) / opt.nR;
  BoxMass bm(f, radii, opt.h);
  const double target = (1.0 - delta) * bm.rhs();
  require(bm.rhs() > 0.0, Errc::invalid_argument, "family has zero mass");
  const std::size_t last = radii.size() - 1;
  if (bm.mass(last) < target) {
    std::ostringstream os;
    os << "mass fraction " << bm.mass(last) / bm.rhs() << " at R_max = " << bm.R(last)
       << " is below " << 1.0 - delta;
    fail(Errc::not_concentrated, os.str());
  }
  std::size_t lo = 0, hi = last;
  if (bm.mass(0) >= target) return bm.R(0);
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (bm.mass(mid) >= target ? hi : lo) = mid;
  }
  return bm.R(hi);
}

// ---------------------------------------------------------------------------
// band datum

int scale_index(double eps, double zeta) {
  require(zeta > 0.0 && zeta < 1.0, Errc::invalid_scale, "zeta must be in (0, 1)");
  require(eps > 0.0 && eps <= 1.0 + 1e-12, Errc::invalid_argument, "eps must be in (0, 1]");
  int n = static_cast<int>(std::floor(std::log(eps) / std::log(zeta) + 1e-12));
  n = std::max(n, 0);
  // guard against rounding at the interval ends
  while (n > 0 && eps > std::pow(zeta, n) * (1.0 + 1e-12)) --n;
  while (eps <= std::pow(zeta, n + 1) * (1.0 + 1e-12)) ++n;
  return n;
}

namespace {

struct NodeSweep {
  bool ok = false;
  std::string why;
  double min_re = INFINITY;
  BlochFamily fam;
};

NodeSweep sweep_nodes(const SpectralField& U, const Vec3& j_star, double J, double eps_modal,
                      cplx p_center, double re_floor, const BandOptions& opt) {
  NodeSweep r;
  BlochBox box;
  box.center = j_star;
  box.half_width = J;
  box.order = opt.order;
  r.fam.boxes.push_back(box);
  r.fam.fields.emplace_back();
  r.fam.exponents.emplace_back();
  EigOptions eo = opt.eig;
  eo.method = EigMethod::krylov;
  const cplx target = p_center + cplx(0.0, 1e-3 * std::abs(p_center) + 1e-14);
  const int q = opt.order;
  const std::size_t count = static_cast<std::size_t>(q) * q * q;
  std::vector<std::vector<EigPair>> near(count);
  parallel_for(count, [&](std::size_t i) {
    ModalOperatorSpec spec;
    spec.U = U;
    spec.j = r.fam.node(0, static_cast<int>(i) / (q * q), static_cast<int>(i) / q % q, static_cast<int>(i) % q);
    spec.eps = eps_modal;
    spec.N = opt.N;
    near[i] = nearest_eigs(spec, target, 2, eo);
  });
  for (std::size_t i = 0; i < count; ++i) {
    const double gap = std::abs(near[i][1].p - near[i][0].p);
    if (gap <= opt.simple_margin * std::abs(near[i][0].p)) {
      const Vec3 j = r.fam.node(0, static_cast<int>(i) / (q * q), static_cast<int>(i) / q % q, static_cast<int>(i) % q);
      std::ostringstream os;
      os << "eigenvalue at node j = (" << j[0] << ", " << j[1] << ", " << j[2] << ") is not simple (gap " << gap
         << ")";
      r.why = os.str();
      return r;
    }
    r.min_re = std::min(r.min_re, near[i][0].p.real());
    r.fam.fields[0].push_back(std::move(near[i][0].H));
    r.fam.exponents[0].push_back(near[i][0].p);
  }
  if (r.min_re < re_floor) {
    r.why = "Re p fell to " + std::to_string(r.min_re) + " inside the band";
    return r;
  }
  r.ok = true;
  return r;
}

}  // namespace

BandDatum build_band_datum(const SpectralField& U, const Vec3& j_star, double J, double eps,
                           double zeta, int n, const BandOptions& opt) {
  require(zeta > 0.0 && zeta < 1.0, Errc::invalid_scale, "zeta must be in (0, 1)");
  require(n >= 0, Errc::invalid_scale, "scale index must be non-negative");
  require(eps > 0.0, Errc::invalid_argument, "eps must be positive");
  require(j_star.norm() > 0.0, Errc::undefined_direction, "band center must be nonzero");
  require(opt.order >= 1, Errc::invalid_argument, "order must be positive");
  BandDatum d;
  d.eps = eps;
  d.n = n;
  d.eps_modal = eps / std::pow(zeta, n);
  require(d.eps_modal <= 1.0 + 1e-12 && d.eps_modal > zeta * (1.0 - 1e-12), Errc::invalid_scale,
          "eps / zeta^n must lie in (zeta, 1]");
  d.eps_modal = std::min(d.eps_modal, 1.0);

  ModalOperatorSpec base;
  base.U = U;
  base.j = j_star;
  base.eps = 1.0;
  base.N = opt.N;
  const EigPair start = leading_eigs(base, 1, opt.eig).at(0);
  d.p_star = start.p;
  require(start.p.real() > 0.0, Errc::invalid_argument, "no growing mode at the band center");
  d.p_center = start.p;
  if (d.eps_modal < 1.0) {
    const ContinuationResult c = continue_eigpair(base, start, d.eps_modal, opt.continuation);
    require(c.reached, Errc::continuation_stalled, "band center continuation stalled: " + c.stall_reason);
    d.p_center = c.pair.p;
  }
  const double floor = 0.5 * d.p_star.real();

  NodeSweep sw;
  if (J > 0.0) {
    sw = sweep_nodes(U, j_star, J, d.eps_modal, d.p_center, -INFINITY, opt);
    require(sw.ok, Errc::band_broken, sw.why);
  } else {
    J = 0.5 * j_star.norm();
    for (int tries = 0;; ++tries) {
      sw = sweep_nodes(U, j_star, J, d.eps_modal, d.p_center, floor, opt);
      if (sw.ok) break;
      require(tries < 6, Errc::band_broken, "no band half-width works: " + sw.why);
      J *= 0.5;
    }
  }
  d.J = J;
  d.min_re_p = sw.min_re;
  add_mirrors(sw.fam);
  validate(sw.fam);
  d.raw_mass = family_mass(sw.fam);
  require(d.raw_mass > 0.0, Errc::band_broken, "band carries no mass");
  scale(sw.fam, 1.0 / std::sqrt(d.raw_mass));
  d.family = n == 0 ? std::move(sw.fam) : dilate(sw.fam, std::pow(zeta, 0.5 * n));
  return d;
}

}  // namespace alphadyn
