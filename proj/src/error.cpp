#include "alphadyn/error.hpp"

namespace alphadyn {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_truncation: return "invalid-truncation";
    case Errc::invalid_scale: return "invalid-scale";
    case Errc::not_mean_free: return "not-mean-free";
    case Errc::io_error: return "io-error";
    case Errc::series_diverges: return "series-diverges";
    case Errc::solver_failure: return "solver-failure";
    case Errc::undefined_direction: return "undefined-direction";
    case Errc::too_large: return "too-large";
    case Errc::eigs_failed: return "eigs-failed";
    case Errc::contour_touches_spectrum: return "contour-touches-spectrum";
    case Errc::continuation_stalled: return "continuation-stalled";
    case Errc::bound_inapplicable: return "bound-inapplicable";
    case Errc::blow_up_detected: return "blow-up-detected";
    case Errc::band_broken: return "band-broken";
    case Errc::not_concentrated: return "not-concentrated";
    case Errc::catalog_infeasible: return "catalog-infeasible";
  }
  return "unknown";
}

bool is_numerical(Errc code) {
  switch (code) {
    case Errc::invalid_argument:
    case Errc::invalid_truncation:
    case Errc::invalid_scale:
    case Errc::not_mean_free:
    case Errc::undefined_direction:
    case Errc::too_large:
    case Errc::io_error:
      return false;
    default:
      return true;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace alphadyn
