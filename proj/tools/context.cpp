#include "context.hpp"

#include <charconv>
#include <cstdlib>
#include <ctime>
#include <iostream>

#include "alphadyn/alpha.hpp"
#include "alphadyn/error.hpp"
#include "alphadyn/field_io.hpp"
#include "alphadyn/parallel.hpp"
#include "alphadyn/simd.hpp"

namespace cli {

namespace ad = alphadyn;

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "output directory (default: $ALPHADYN_OUT, else .)");
  app->add_option("--seed", c.seed, "seed for randomized probes and start vectors");
  app->add_option("--workers", c.workers, "worker threads (0: all cores)");
}

void add_flow(CLI::App* app, FlowOptions& f) {
  app->add_option("--abc", f.abc, "ABC amplitudes a,b,c")->delimiter(',')->expected(3);
  app->add_option("--field", f.field, "flow snapshot file (overrides --abc)");
  app->add_option("--flow-N", f.N, "truncation of the ABC flow")->check(CLI::PositiveNumber);
  app->add_option("--delta0", f.delta0, "flow amplitude factor (default 0.05 / |U|_W1inf)");
}

ad::SpectralField load_flow(const FlowOptions& f, json& echo) {
  ad::SpectralField U;
  if (!f.field.empty()) {
    U = ad::load_field(f.field);
    echo["flow"] = {{"field", f.field}};
  } else {
    ad::require(f.abc.size() == 3, ad::Errc::invalid_argument, "--abc needs three amplitudes");
    U = ad::make_abc({f.abc[0], f.abc[1], f.abc[2]}, f.N);
    echo["flow"] = {{"abc", f.abc}, {"N", f.N}};
  }
  double d = 1.0;
  if (f.delta0) {
    d = *f.delta0;
  } else if (!U.is_zero()) {
    d = ad::default_delta0(U);
  }
  ad::require(std::isfinite(d) && d > 0.0, ad::Errc::invalid_argument, "delta0 must be positive");
  U *= d;
  echo["flow"]["delta0"] = d;
  return U;
}

ad::Vec3 to_vec3(const std::vector<double>& v, const char* what) {
  ad::require(v.size() == 3, ad::Errc::invalid_argument, std::string(what) + " needs three components");
  return {v[0], v[1], v[2]};
}

void require_positive(double v, const char* what) {
  ad::require(std::isfinite(v) && v > 0.0, ad::Errc::invalid_argument, std::string(what) + " must be positive");
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

Csv::Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : os_(path) {
  ad::require(os_.good(), ad::Errc::io_error, "cannot write " + path.string());
  for (const auto& h : header) *this << h;
  end_row();
}

void Csv::sep() {
  if (!first_) os_ << ',';
  first_ = false;
}

Csv& Csv::operator<<(double v) {
  sep();
  os_ << fmt(v);
  return *this;
}

Csv& Csv::operator<<(long v) {
  sep();
  os_ << v;
  return *this;
}

Csv& Csv::operator<<(const std::string& s) {
  sep();
  os_ << s;
  return *this;
}

void Csv::end_row() {
  os_ << '\n';
  first_ = true;
  ad::require(os_.good(), ad::Errc::io_error, "CSV write failed");
}

Run::Run(std::string command, const Common& c, json config)
    : command_(std::move(command)), common_(c), config_(std::move(config)), t0_(std::chrono::steady_clock::now()) {
  std::string d = c.out;
  if (d.empty())
    if (const char* e = std::getenv("ALPHADYN_OUT"); e && *e) d = e;
  if (d.empty()) d = ".";
  dir_ = d;
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  ad::require(!ec, ad::Errc::io_error, "cannot create output directory " + d);
}

std::filesystem::path Run::output(const std::string& name) {
  outputs_.push_back(name);
  return dir_ / name;
}

void Run::finish(const std::string& status, int exit_code, const json& error) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  json m;
  m["tool"] = "alphadyn";
  m["version"] = ALPHADYN_VERSION;
  m["command"] = command_;
  m["config"] = config_;
  m["seed"] = common_.seed;
  m["workers"] = ad::workers();
  m["simd"] = std::string(ad::simd::to_string(ad::simd::active_level()));
  m["wall_time_s"] = wall;
  m["status"] = status;
  m["exit_code"] = exit_code;
  m["outputs"] = outputs_;
  m["results"] = results_;
  if (!error.is_null()) m["error"] = error;
  std::ofstream os(dir_ / "manifest.json");
  os << m.dump(2) << '\n';
  if (!os) std::cerr << "alphadyn: could not write manifest in " << dir_ << '\n';
}

int guarded(const std::string& command, const Common& c, json config,
            const std::function<void(Run&)>& body) {
  std::optional<Run> run;
  try {
    ad::set_workers(c.workers);
    run.emplace(command, c, std::move(config));
    body(*run);
    run->finish("ok", 0);
    return 0;
  } catch (const ad::Error& e) {
    const bool numerical = ad::is_numerical(e.code());
    const int code = numerical ? 3 : 2;
    std::cerr << "alphadyn " << command << ": " << e.what() << '\n';
    if (run)
      run->finish(numerical ? "numerical-failure" : "config-error", code,
                  {{"code", std::string(ad::to_string(e.code()))}, {"message", e.what()}});
    return code;
  } catch (const std::exception& e) {
    std::cerr << "alphadyn " << command << ": " << e.what() << '\n';
    if (run) run->finish("numerical-failure", 3, {{"code", "internal"}, {"message", e.what()}});
    return 3;
  }
}

}  // namespace cli
