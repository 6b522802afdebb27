#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alphadyn/spectral_field.hpp"
#include "json.hpp"

namespace cli {

using nlohmann::json;

// options every subcommand accepts
struct Common {
  std::string out;
  std::uint64_t seed = 1;
  int workers = 1;
};

// flow given either as ABC amplitudes or as a snapshot file
struct FlowOptions {
  std::vector<double> abc{1.0, 1.0, 1.0};
  std::string field;
  int N = 1;
  std::optional<double> delta0;  // unset: 0.05 / |U|_{W^{1,inf}}
};

void add_common(CLI::App* app, Common& c);
void add_flow(CLI::App* app, FlowOptions& f);
// builds (and scales) the flow; records what was used in `echo`
alphadyn::SpectralField load_flow(const FlowOptions& f, json& echo);

alphadyn::Vec3 to_vec3(const std::vector<double>& v, const char* what);
void require_positive(double v, const char* what);

// doubles with 17 significant digits, '.' decimal regardless of locale
std::string fmt(double v);

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header);
  Csv& operator<<(double v);
  Csv& operator<<(long v);
  Csv& operator<<(int v) { return *this << static_cast<long>(v); }
  Csv& operator<<(const std::string& s);
  void end_row();

 private:
  void sep();
  std::ofstream os_;
  bool first_ = true;
};

// one invocation: output directory, manifest, timing
class Run {
 public:
  Run(std::string command, const Common& c, json config);
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path output(const std::string& name);
  json& results() { return results_; }
  // writes manifest.json; status "ok", "config-error" or "numerical-failure"
  void finish(const std::string& status, int exit_code, const json& error = nullptr);

 private:
  std::string command_;
  Common common_;
  json config_;
  json results_ = json::object();
  std::vector<std::string> outputs_;
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point t0_;
};

// runs body with error mapping: 0 ok, 2 bad input, 3 numerical failure
int guarded(const std::string& command, const Common& c, json config,
            const std::function<void(Run&)>& body);

}  // namespace cli
