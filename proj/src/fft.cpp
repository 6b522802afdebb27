#include "alphadyn/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "alphadyn/error.hpp"

namespace alphadyn {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

int fft_size_at_least(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

Grid3::Grid3(int M) : M_(M), n_(static_cast<std::size_t>(M) * M * M) {
  require(M >= 1, Errc::invalid_argument, "grid size must be positive");
  for (auto& b : buf_) {
    b = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n_));
    require(b != nullptr, Errc::too_large, "grid allocation failed");
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* p = reinterpret_cast<fftw_complex*>(buf_[0]);
  fwd_ = fftw_plan_dft_3d(M, M, M, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_3d(M, M, M, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Grid3::~Grid3() {
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
  }
  for (auto* b : buf_) fftw_free(b);
}

void Grid3::load(const SpectralField& f) {
  const int N = f.N();
  require(M_ >= 2 * N + 1, Errc::invalid_argument, "grid too small for the field truncation");
  for (int c = 0; c < 3; ++c) {
    cplx* g = buf_[c];
    std::fill(g, g + n_, cplx(0.0));
    const cplx* src = f.component(c);
    std::size_t idx = 0;
    for (int k1 = -N; k1 <= N; ++k1)
      for (int k2 = -N; k2 <= N; ++k2) {
        const std::size_t row = (wrap(k1) * M_ + wrap(k2)) * M_;
        for (int k3 = -N; k3 <= N; ++k3) g[row + wrap(k3)] = src[idx++];
      }
  }
}

void Grid3::to_physical() {
  for (auto* b : buf_) {
    auto* p = reinterpret_cast<fftw_complex*>(b);
    fftw_execute_dft(static_cast<fftw_plan>(bwd_), p, p);
  }
}

void Grid3::to_spectral() {
  const double inv = 1.0 / static_cast<double>(n_);
  for (auto* b : buf_) {
    auto* p = reinterpret_cast<fftw_complex*>(b);
    fftw_execute_dft(static_cast<fftw_plan>(fwd_), p, p);
    for (std::size_t i = 0; i < n_; ++i) b[i] *= inv;
  }
}

void Grid3::store(SpectralField& out) const {
  const int N = out.N();
  require(M_ >= 2 * N + 1, Errc::invalid_argument, "grid too small for the output truncation");
  for (int c = 0; c < 3; ++c) {
    const cplx* g = buf_[c];
    cplx* dst = out.component(c);
    std::size_t idx = 0;
    for (int k1 = -N; k1 <= N; ++k1)
      for (int k2 = -N; k2 <= N; ++k2) {
        const std::size_t row = (wrap(k1) * M_ + wrap(k2)) * M_;
        for (int k3 = -N; k3 <= N; ++k3) dst[idx++] = g[row + wrap(k3)];
      }
  }
}

}  // namespace alphadyn
