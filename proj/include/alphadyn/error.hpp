#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace alphadyn {

enum class Errc {
  invalid_argument,
  invalid_truncation,
  invalid_scale,
  not_mean_free,
  io_error,
  series_diverges,
  solver_failure,
  undefined_direction,
  too_large,
  eigs_failed,
  contour_touches_spectrum,
  continuation_stalled,
  bound_inapplicable,
  blow_up_detected,
  band_broken,
  not_concentrated,
  catalog_infeasible,
};

std::string_view to_string(Errc code);

// true for failures of a numerical procedure, false for bad input
bool is_numerical(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

inline void require(bool ok, Errc code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace alphadyn
