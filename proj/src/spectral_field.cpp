#include "alphadyn/spectral_field.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "alphadyn/error.hpp"
#include "alphadyn/fft.hpp"
#include "alphadyn/simd.hpp"

namespace alphadyn {

namespace {

constexpr cplx I(0.0, 1.0);

// physical wave vectors of every mode, split by axis
struct WaveTable {
  std::vector<double> q[3];
};

WaveTable wave_table(const SpectralField& f, const Vec3& shift = Vec3::Zero()) {
  WaveTable t;
  for (auto& a : t.q) a.resize(f.modes());
  const int N = f.N();
  const double inv = 1.0 / f.period_scale();
  std::size_t idx = 0;
  for (int k1 = -N; k1 <= N; ++k1)
    for (int k2 = -N; k2 <= N; ++k2)
      for (int k3 = -N; k3 <= N; ++k3, ++idx) {
        t.q[0][idx] = k1 * inv + shift[0];
        t.q[1][idx] = k2 * inv + shift[1];
        t.q[2][idx] = k3 * inv + shift[2];
      }
  return t;
}

}  // namespace

SpectralField::SpectralField(int N, FieldKind kind, double period_scale)
    : N_(N), kind_(kind), scale_(period_scale) {
  require(N >= 0, Errc::invalid_truncation, "truncation must be non-negative");
  require(period_scale > 0.0 && std::isfinite(period_scale), Errc::invalid_argument,
          "period scale must be positive");
  c_.assign(size(), cplx(0.0));
}

void SpectralField::set_period_scale(double s) {
  require(s > 0.0 && std::isfinite(s), Errc::invalid_argument, "period scale must be positive");
  scale_ = s;
}

bool SpectralField::contains(const WaveVector& k) const {
  return std::abs(k.k1) <= N_ && std::abs(k.k2) <= N_ && std::abs(k.k3) <= N_;
}

std::size_t SpectralField::index(const WaveVector& k) const {
  require(contains(k), Errc::invalid_argument, "wave vector outside truncation");
  const std::size_t s = side();
  return (static_cast<std::size_t>(k.k1 + N_) * s + (k.k2 + N_)) * s + (k.k3 + N_);
}

WaveVector SpectralField::wave(std::size_t idx) const {
  const int s = side();
  const int i3 = static_cast<int>(idx % s);
  const int i2 = static_cast<int>((idx / s) % s);
  const int i1 = static_cast<int>(idx / (static_cast<std::size_t>(s) * s));
  return {i1 - N_, i2 - N_, i3 - N_};
}

Vec3 SpectralField::wavenumber(const WaveVector& k) const {
  return Vec3(k.k1, k.k2, k.k3) / scale_;
}

CVec3 SpectralField::coeff(const WaveVector& k) const {
  const std::size_t i = index(k);
  return CVec3(c_[i], c_[modes() + i], c_[2 * modes() + i]);
}

void SpectralField::set_coeff(const WaveVector& k, const CVec3& v) {
  const std::size_t i = index(k);
  c_[i] = v[0];
  c_[modes() + i] = v[1];
  c_[2 * modes() + i] = v[2];
}

void SpectralField::set_zero() { std::fill(c_.begin(), c_.end(), cplx(0.0)); }

bool SpectralField::is_zero() const {
  return std::all_of(c_.begin(), c_.end(), [](cplx z) { return z == cplx(0.0); });
}

void SpectralField::check_compatible(const SpectralField& o) const {
  require(o.N_ == N_, Errc::invalid_argument, "truncation mismatch");
  require(o.scale_ == scale_, Errc::invalid_argument, "period scale mismatch");
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  check_compatible(o);
  simd::active().axpy(1.0, o.data(), data(), size());
  if (o.kind_ == FieldKind::complex_valued) kind_ = FieldKind::complex_valued;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  check_compatible(o);
  simd::active().axpy(-1.0, o.data(), data(), size());
  if (o.kind_ == FieldKind::complex_valued) kind_ = FieldKind::complex_valued;
  return *this;
}

SpectralField& SpectralField::operator*=(cplx a) {
  for (auto& z : c_) z *= a;
  if (a.imag() != 0.0) kind_ = FieldKind::complex_valued;
  return *this;
}

void SpectralField::axpy(cplx a, const SpectralField& x) {
  check_compatible(x);
  simd::active().axpy(a, x.data(), data(), size());
  if (x.kind_ == FieldKind::complex_valued || a.imag() != 0.0) kind_ = FieldKind::complex_valued;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(cplx a, SpectralField f) { return f *= a; }

SpectralField field_from_vector(const Eigen::VectorXcd& v, int N, FieldKind kind,
                                double period_scale) {
  SpectralField f(N, kind, period_scale);
  require(static_cast<std::size_t>(v.size()) == f.size(), Errc::invalid_argument,
          "vector length does not match truncation");
  std::copy(v.data(), v.data() + v.size(), f.data());
  return f;
}

SpectralField constant_field(int N, const CVec3& v) {
  const bool real = v.imag().isZero(0.0);
  SpectralField f(N, real ? FieldKind::real_valued : FieldKind::complex_valued);
  f.set_coeff({0, 0, 0}, v);
  return f;
}

SpectralField make_abc(const AbcParams& p, int N) {
  require(N >= 1, Errc::invalid_truncation, "ABC flow needs N >= 1");
  SpectralField f(N, FieldKind::real_valued);
  const double a = p.a, b = p.b, c = p.c;
  // tabulated coefficients; real space: -a sin z + c cos y, -b sin x + a cos z, -c sin y + b cos x
  f.set_coeff({0, 0, 1}, CVec3(0.5 * I * a, 0.5 * a, 0.0));
  f.set_coeff({0, 0, -1}, CVec3(-0.5 * I * a, 0.5 * a, 0.0));
  f.set_coeff({1, 0, 0}, CVec3(0.0, 0.5 * I * b, 0.5 * b));
  f.set_coeff({-1, 0, 0}, CVec3(0.0, -0.5 * I * b, 0.5 * b));
  f.set_coeff({0, 1, 0}, CVec3(0.5 * c, 0.0, 0.5 * I * c));
  f.set_coeff({0, -1, 0}, CVec3(0.5 * c, 0.0, -0.5 * I * c));
  return f;
}

SpectralField curl(const SpectralField& f) {
  SpectralField out(f.N(), f.kind(), f.period_scale());
  const WaveTable t = wave_table(f);
  simd::active().shifted_curl(t.q[0].data(), t.q[1].data(), t.q[2].data(), f.component(0),
                              f.component(1), f.component(2), out.component(0),
                              out.component(1), out.component(2), f.modes());
  return out;
}

SpectralField laplacian(const SpectralField& f) {
  SpectralField out(f.N(), f.kind(), f.period_scale());
  const WaveTable t = wave_table(f);
  std::vector<double> d(f.modes());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = -(t.q[0][i] * t.q[0][i] + t.q[1][i] * t.q[1][i] + t.q[2][i] * t.q[2][i]);
  for (int c = 0; c < 3; ++c) simd::active().mul_real(d.data(), f.component(c), out.component(c), d.size());
  return out;
}

SpectralField inv_laplacian(const SpectralField& f) {
  const CVec3 m = mean(f);
  require(m.cwiseAbs().maxCoeff() <= 1e-13 * l2(f), Errc::not_mean_free,
          "inverse Laplacian of a field with nonzero mean");
  SpectralField out(f.N(), f.kind(), f.period_scale());
  const WaveTable t = wave_table(f);
  std::vector<double> d(f.modes());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double q2 = t.q[0][i] * t.q[0][i] + t.q[1][i] * t.q[1][i] + t.q[2][i] * t.q[2][i];
    d[i] = q2 > 0.0 ? -1.0 / q2 : 0.0;
  }
  for (int c = 0; c < 3; ++c) simd::active().mul_real(d.data(), f.component(c), out.component(c), d.size());
  return out;
}

CVec3 mean(const SpectralField& f) { return f.coeff({0, 0, 0}); }

SpectralField without_mean(SpectralField f) {
  f.set_coeff({0, 0, 0}, CVec3::Zero());
  return f;
}

SpectralField cross(const SpectralField& f, const SpectralField& g, std::optional<int> cap) {
  require(f.period_scale() == g.period_scale(), Errc::invalid_argument,
          "cross product of fields with different periods");
  const int Nout = cap.value_or(f.N() + g.N());
  require(Nout >= 0, Errc::invalid_truncation, "negative result cap");
  const int need = std::max({f.N() + g.N() + Nout + 1, 2 * std::max({f.N(), g.N(), Nout}) + 1});
  const int M = fft_size_at_least(need);
  Grid3 gf(M), gg(M), go(M);
  gf.load(f);
  gg.load(g);
  gf.to_physical();
  gg.to_physical();
  simd::active().cross_pointwise(gf.comp(0), gf.comp(1), gf.comp(2), gg.comp(0), gg.comp(1),
                                 gg.comp(2), go.comp(0), go.comp(1), go.comp(2), go.points());
  go.to_spectral();
  const bool real = f.kind() == FieldKind::real_valued && g.kind() == FieldKind::real_valued;
  SpectralField out(Nout, real ? FieldKind::real_valued : FieldKind::complex_valued,
                    f.period_scale());
  go.store(out);
  return out;
}

CVec3 mean_cross(const SpectralField& f, const SpectralField& g) {
  const int N = std::min(f.N(), g.N());
  CVec3 s = CVec3::Zero();
  for (int k1 = -N; k1 <= N; ++k1)
    for (int k2 = -N; k2 <= N; ++k2)
      for (int k3 = -N; k3 <= N; ++k3) {
        const CVec3 a = f.coeff({k1, k2, k3});
        const CVec3 b = g.coeff({-k1, -k2, -k3});
        // Eigen's cross conjugates complex operands
        s[0] += a[1] * b[2] - a[2] * b[1];
        s[1] += a[2] * b[0] - a[0] * b[2];
        s[2] += a[0] * b[1] - a[1] * b[0];
      }
  return s;
}

cplx inner(const SpectralField& f, const SpectralField& g) {
  require(f.N() == g.N(), Errc::invalid_argument, "truncation mismatch");
  return simd::active().dot(f.data(), g.data(), f.size());
}

double l2(const SpectralField& f) { return std::sqrt(simd::active().norm2(f.data(), f.size())); }

SpectralField resized(const SpectralField& f, int N) {
  SpectralField out(N, f.kind(), f.period_scale());
  const int n = std::min(N, f.N());
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2)
      for (int k3 = -n; k3 <= n; ++k3) out.set_coeff({k1, k2, k3}, f.coeff({k1, k2, k3}));
  return out;
}

SpectralField conjugate(const SpectralField& f) {
  SpectralField out(f.N(), f.kind(), f.period_scale());
  const std::size_t m = f.modes();
  // k -> -k reverses the lexicographic order
  for (int c = 0; c < 3; ++c) {
    const cplx* src = f.component(c);
    cplx* dst = out.component(c);
    for (std::size_t i = 0; i < m; ++i) dst[i] = std::conj(src[m - 1 - i]);
  }
  return out;
}

double max_divergence(const SpectralField& f, const Vec3& j) {
  const WaveTable t = wave_table(f, j);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.modes(); ++i) {
    const cplx d = t.q[0][i] * f.component(0)[i] + t.q[1][i] * f.component(1)[i] +
                   t.q[2][i] * f.component(2)[i];
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

SpectralField project_divergence_free(const SpectralField& f, const Vec3& j) {
  SpectralField out = f;
  const WaveTable t = wave_table(f, j);
  for (std::size_t i = 0; i < f.modes(); ++i) {
    const double q2 = t.q[0][i] * t.q[0][i] + t.q[1][i] * t.q[1][i] + t.q[2][i] * t.q[2][i];
    if (q2 == 0.0) continue;
    const cplx d = (t.q[0][i] * f.component(0)[i] + t.q[1][i] * f.component(1)[i] +
                    t.q[2][i] * f.component(2)[i]) / q2;
    for (int c = 0; c < 3; ++c) out.component(c)[i] -= t.q[c][i] * d;
  }
  return out;
}

double reality_defect(const SpectralField& f) {
  const std::size_t m = f.modes();
  double worst = 0.0, big = 0.0;
  for (int c = 0; c < 3; ++c) {
    const cplx* p = f.component(c);
    for (std::size_t i = 0; i < m; ++i) {
      worst = std::max(worst, std::abs(p[m - 1 - i] - std::conj(p[i])));
      big = std::max(big, std::abs(p[i]));
    }
  }
  return big > 0.0 ? worst / big : 0.0;
}

SpectralField streamfunction(const SpectralField& U) {
  require(mean(U).norm() <= 1e-12 * (1.0 + l2(U)), Errc::not_mean_free,
          "streamfunction needs a mean-free field");
  SpectralField psi = inv_laplacian(curl(U));
  psi *= -1.0;
  return psi;
}

Norms norms(const SpectralField& f, const NormOptions& opt) {
  require(opt.oversample >= 1, Errc::invalid_argument, "oversampling factor must be >= 1");
  Norms r;
  r.l2 = l2(f);
  r.cell_l2 = r.l2 * std::pow(2.0 * std::numbers::pi * f.period_scale(), 1.5);
  if (f.is_zero()) return r;

  const int M = opt.oversample * f.side();
  Grid3 val(M);
  val.load(f);
  val.to_physical();
  std::vector<std::unique_ptr<Grid3>> der;
  for (int b = 0; b < 3; ++b) {
    SpectralField d(f.N(), f.kind(), f.period_scale());
    for (std::size_t i = 0; i < f.modes(); ++i) {
      const Vec3 q = f.wavenumber(f.wave(i));
      for (int a = 0; a < 3; ++a) d.component(a)[i] = I * q[b] * f.component(a)[i];
    }
    der.push_back(std::make_unique<Grid3>(M));
    der.back()->load(d);
    der.back()->to_physical();
  }
  const bool real = f.kind() == FieldKind::real_valued;
  for (std::size_t p = 0; p < val.points(); ++p) {
    double v2 = 0.0;
    for (int a = 0; a < 3; ++a) v2 += std::norm(val.comp(a)[p]);
    r.sup_estimate = std::max(r.sup_estimate, std::sqrt(v2));
    Eigen::Matrix3cd J;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) J(a, b) = der[b]->comp(a)[p];
    r.sup_grad_estimate = std::max(r.sup_grad_estimate, J.cwiseAbs().rowwise().sum().maxCoeff());
    double s2;
    if (real) {
      const Eigen::Matrix3d Jr = J.real();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
      es.computeDirect(Jr.transpose() * Jr, Eigen::EigenvaluesOnly);
      s2 = es.eigenvalues().maxCoeff();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(J.adjoint() * J, Eigen::EigenvaluesOnly);
      s2 = es.eigenvalues().maxCoeff();
    }
    r.sup_grad_spectral = std::max(r.sup_grad_spectral, std::sqrt(std::max(s2, 0.0)));
  }
  return r;
}

SpectralField rescale_flow(const SpectralField& f, double zeta, int n) {
  require(n >= 0, Errc::invalid_scale, "scale index must be non-negative");
  require(zeta > 0.0 && zeta < 1.0, Errc::invalid_argument, "zeta must lie in (0, 1)");
  const double s = std::pow(zeta, 0.5 * n);
  SpectralField out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
  out.set_period_scale(f.period_scale() * s);
  return out;
}

PhysicalSamples to_physical(const SpectralField& f, int M) {
  Grid3 g(M);
  g.load(f);
  g.to_physical();
  PhysicalSamples s;
  s.M = M;
  for (int c = 0; c < 3; ++c) s.comp[c].assign(g.comp(c), g.comp(c) + g.points());
  return s;
}

FieldJet evaluate_jet(const SpectralField& f, const Vec3& x, int order) {
  FieldJet jet;
  for (std::size_t i = 0; i < f.modes(); ++i) {
    const cplx c0 = f.component(0)[i], c1 = f.component(1)[i], c2 = f.component(2)[i];
    if (c0 == 0.0 && c1 == 0.0 && c2 == 0.0) continue;
    const Vec3 q = f.wavenumber(f.wave(i));
    const double th = q.dot(x);
    const cplx e(std::cos(th), std::sin(th));
    const cplx c[3] = {c0 * e, c1 * e, c2 * e};
    for (int a = 0; a < 3; ++a) {
      jet.value[a] += c[a];
      if (order < 1) continue;
      for (int b = 0; b < 3; ++b) {
        jet.grad[a][b] += I * q[b] * c[a];
        if (order < 2) continue;
        for (int d = 0; d < 3; ++d) jet.hess[a][b][d] -= q[b] * q[d] * c[a];
      }
    }
  }
  return jet;
}

}  // namespace alphadyn
