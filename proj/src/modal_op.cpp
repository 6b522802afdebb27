#include "alphadyn/modal_op.hpp"

#include <algorithm>
#include <cmath>

#include "alphadyn/alpha.hpp"
#include "alphadyn/error.hpp"
#include "alphadyn/fft.hpp"
#include "alphadyn/simd.hpp"

namespace alphadyn {

namespace {

constexpr cplx I(0.0, 1.0);
constexpr std::size_t kSparseModeLimit = 64;

Eigen::Matrix3cd skew(const CVec3& v) {
  Eigen::Matrix3cd m;
  m << 0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0;
  return m;
}

}  // namespace

void validate(const ModalOperatorSpec& spec) {
  require(spec.N >= 1, Errc::invalid_truncation, "operator truncation must be >= 1");
  require(spec.eps > 0.0 && std::isfinite(spec.eps), Errc::invalid_argument,
          "diffusivity must be positive");
  require(spec.j.allFinite(), Errc::invalid_argument, "non-finite j");
  const double n = l2(spec.U);
  require(mean(spec.U).norm() <= 1e-12 * std::max(n, 1e-300) || spec.U.is_zero(),
          Errc::not_mean_free, "flow must be mean-free");
  require(max_divergence(spec.U) <= 1e-10 * std::max(n, 1e-300) || spec.U.is_zero(),
          Errc::invalid_argument, "flow must be divergence-free");
}

ModalOperator::ModalOperator(const ModalOperatorSpec& spec) : spec_(spec) {
  validate(spec_);
  SpectralField probe(spec_.N, FieldKind::complex_valued, spec_.U.period_scale());
  modes_ = probe.modes();
  for (auto& a : q_) a.resize(modes_);
  diff_.resize(modes_);
  for (std::size_t i = 0; i < modes_; ++i) {
    const Vec3 q = probe.wavenumber(probe.wave(i)) + spec_.j;
    for (int c = 0; c < 3; ++c) q_[c][i] = q[c];
    diff_[i] = -spec_.eps * q.squaredNorm();
  }
  const SpectralField& U = spec_.U;
  for (std::size_t i = 0; i < U.modes(); ++i) {
    const cplx u0 = U.component(0)[i], u1 = U.component(1)[i], u2 = U.component(2)[i];
    if (u0 == 0.0 && u1 == 0.0 && u2 == 0.0) continue;
    umodes_.push_back({U.wave(i), {u0, u1, u2}});
  }
  conv_.assign(dim(), cplx(0.0));
  if (umodes_.size() > kSparseModeLimit) {
    const int M = fft_size_at_least(std::max(2 * spec_.N + U.N() + 1, 2 * U.N() + 1));
    grid_ = std::make_unique<Grid3>(M);
    grid_->load(U);
    grid_->to_physical();
    for (int c = 0; c < 3; ++c) uphys_[c].assign(grid_->comp(c), grid_->comp(c) + grid_->points());
  }
}

ModalOperator::~ModalOperator() = default;
ModalOperator::ModalOperator(ModalOperator&&) noexcept = default;
ModalOperator& ModalOperator::operator=(ModalOperator&&) noexcept = default;

void ModalOperator::convolve(const cplx* in, cplx* out) const {
  const auto& K = simd::active();
  const int N = spec_.N, side = 2 * N + 1;
  std::fill(out, out + dim(), cplx(0.0));
  if (!grid_) {
    const cplx* hx = in;
    const cplx* hy = in + modes_;
    const cplx* hz = in + 2 * modes_;
    cplx* ox = out;
    cplx* oy = out + modes_;
    cplx* oz = out + 2 * modes_;
    for (const UMode& m : umodes_) {
      const int d1 = m.k.k1, d2 = m.k.k2, d3 = m.k.k3;
      if (std::abs(d1) > 2 * N || std::abs(d2) > 2 * N || std::abs(d3) > 2 * N) continue;
      const int k3lo = std::max(-N, -N + d3), k3hi = std::min(N, N + d3);
      const std::size_t len = static_cast<std::size_t>(k3hi - k3lo + 1);
      for (int k1 = std::max(-N, -N + d1); k1 <= std::min(N, N + d1); ++k1)
        for (int k2 = std::max(-N, -N + d2); k2 <= std::min(N, N + d2); ++k2) {
          const std::size_t o =
              (static_cast<std::size_t>(k1 + N) * side + (k2 + N)) * side + (k3lo + N);
          const std::size_t s =
              (static_cast<std::size_t>(k1 - d1 + N) * side + (k2 - d2 + N)) * side +
              (k3lo - d3 + N);
          K.cross_const_acc(m.u, hx + s, hy + s, hz + s, ox + o, oy + o, oz + o, len);
        }
    }
    return;
  }
  SpectralField H(N, FieldKind::complex_valued, spec_.U.period_scale());
  std::copy(in, in + dim(), H.data());
  Grid3& g = *grid_;
  g.load(H);
  g.to_physical();
  std::vector<cplx> t0(g.points()), t1(g.points()), t2(g.points());
  K.cross_pointwise(uphys_[0].data(), uphys_[1].data(), uphys_[2].data(), g.comp(0), g.comp(1),
                    g.comp(2), t0.data(), t1.data(), t2.data(), g.points());
  std::copy(t0.begin(), t0.end(), g.comp(0));
  std::copy(t1.begin(), t1.end(), g.comp(1));
  std::copy(t2.begin(), t2.end(), g.comp(2));
  g.to_spectral();
  g.store(H);
  std::copy(H.data(), H.data() + dim(), out);
}

void ModalOperator::apply_advection(const cplx* in, cplx* out) const {
  convolve(in, conv_.data());
  simd::active().shifted_curl(q_[0].data(), q_[1].data(), q_[2].data(), conv_.data(),
                              conv_.data() + modes_, conv_.data() + 2 * modes_, out,
                              out + modes_, out + 2 * modes_, modes_);
}

void ModalOperator::apply(const cplx* in, cplx* out) const {
  apply_advection(in, out);
  const auto& K = simd::active();
  for (int c = 0; c < 3; ++c) K.mul_real_acc(diff_.data(), in + c * modes_, out + c * modes_, modes_);
}

SpectralField ModalOperator::apply(const SpectralField& H) const {
  require(H.N() == spec_.N, Errc::invalid_truncation, "field truncation does not match operator");
  SpectralField out(spec_.N, FieldKind::complex_valued, spec_.U.period_scale());
  apply(H.data(), out.data());
  return out;
}

linalg::LinOp ModalOperator::linop() const {
  return [this](const linalg::Vec& x, linalg::Vec& y) {
    y.resize(x.size());
    apply(x.data(), y.data());
  };
}

SpectralField apply_L(const ModalOperatorSpec& spec, const SpectralField& H) {
  return ModalOperator(spec).apply(H);
}

namespace {

// i [q(k)]x [u(k - k')]x blocks of the convolution part, scaled by `scale`,
// with q = k/s + shift
void add_convolution_blocks(linalg::Mat& A, const SpectralField& U, int N, const Vec3& shift,
                            cplx scale) {
  SpectralField probe(N, FieldKind::complex_valued, U.period_scale());
  const std::size_t modes = probe.modes();
  for (std::size_t iu = 0; iu < U.modes(); ++iu) {
    const CVec3 u(U.component(0)[iu], U.component(1)[iu], U.component(2)[iu]);
    if (u.isZero(0.0)) continue;
    const WaveVector d = U.wave(iu);
    const Eigen::Matrix3cd Su = skew(u);
    for (std::size_t col = 0; col < modes; ++col) {
      const WaveVector kp = probe.wave(col);
      const WaveVector k{kp.k1 + d.k1, kp.k2 + d.k2, kp.k3 + d.k3};
      if (!probe.contains(k)) continue;
      const std::size_t row = probe.index(k);
      const Vec3 q = probe.wavenumber(k) + shift;
      const Eigen::Matrix3cd B = scale * I * skew(q.cast<cplx>()) * Su;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          A(static_cast<Eigen::Index>(a * modes + row), static_cast<Eigen::Index>(b * modes + col)) += B(a, b);
    }
  }
}

linalg::Mat zero_matrix(int N, const DenseOptions& opt) {
  const std::size_t side = static_cast<std::size_t>(2 * N + 1);
  const std::size_t n = 3 * side * side * side;
  const double bytes = static_cast<double>(n) * static_cast<double>(n) * sizeof(cplx);
  require(bytes <= static_cast<double>(opt.max_bytes), Errc::too_large,
          "dense matrix of order " + std::to_string(n) + " exceeds the memory cap");
  return linalg::Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

}  // namespace

linalg::Mat assemble_dense(const ModalOperatorSpec& spec, const DenseOptions& opt) {
  validate(spec);
  linalg::Mat A = zero_matrix(spec.N, opt);
  add_convolution_blocks(A, spec.U, spec.N, spec.j, 1.0);
  SpectralField probe(spec.N, FieldKind::complex_valued, spec.U.period_scale());
  const std::size_t modes = probe.modes();
  for (std::size_t i = 0; i < modes; ++i) {
    const double d = -spec.eps * (probe.wavenumber(probe.wave(i)) + spec.j).squaredNorm();
    for (int a = 0; a < 3; ++a) {
      const auto r = static_cast<Eigen::Index>(a * modes + i);
      A(r, r) += d;
    }
  }
  return A;
}

linalg::Mat assemble_L1(const SpectralField& U, const Vec3& jhat, int N, const DenseOptions& opt) {
  require(N >= 1, Errc::invalid_truncation, "operator truncation must be >= 1");
  linalg::Mat A = zero_matrix(N, opt);
  SpectralField probe(N, FieldKind::complex_valued, U.period_scale());
  const std::size_t modes = probe.modes();
  // the k-part of i q x [u]x is L0's; keep only the jhat part
  for (std::size_t iu = 0; iu < U.modes(); ++iu) {
    const CVec3 u(U.component(0)[iu], U.component(1)[iu], U.component(2)[iu]);
    if (u.isZero(0.0)) continue;
    const WaveVector d = U.wave(iu);
    const Eigen::Matrix3cd B = I * skew(jhat.cast<cplx>()) * skew(u);
    for (std::size_t col = 0; col < modes; ++col) {
      const WaveVector kp = probe.wave(col);
      const WaveVector k{kp.k1 + d.k1, kp.k2 + d.k2, kp.k3 + d.k3};
      if (!probe.contains(k)) continue;
      const std::size_t row = probe.index(k);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          A(static_cast<Eigen::Index>(a * modes + row), static_cast<Eigen::Index>(b * modes + col)) += B(a, b);
    }
  }
  for (std::size_t i = 0; i < modes; ++i) {
    const double d = -2.0 * jhat.dot(probe.wavenumber(probe.wave(i)));
    for (int a = 0; a < 3; ++a) {
      const auto r = static_cast<Eigen::Index>(a * modes + i);
      A(r, r) += d;
    }
  }
  return A;
}

std::array<SpectralField, 3> kernel_basis_L0(const SpectralField& U, const CellOptions& opt) {
  const CellResponse r = cell_response(U, opt);
  std::array<SpectralField, 3> out;
  for (int l = 0; l < 3; ++l) {
    out[l] = r.cells[l].field;
    out[l].set_kind(FieldKind::complex_valued);
    CVec3 e = CVec3::Zero();
    e[l] = 1.0;
    out[l].set_coeff({0, 0, 0}, e);
  }
  return out;
}

}  // namespace alphadyn
