#include "alphadyn/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "alphadyn/error.hpp"

namespace alphadyn {

namespace {

constexpr const char* kFieldMagic = "ALPHADYN-FIELD 1";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

void put_doubles(std::ostream& os, const double* p, std::size_t n) {
  std::vector<std::uint64_t> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = to_le(std::bit_cast<std::uint64_t>(p[i]));
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n * 8));
}

void get_doubles(std::istream& is, double* p, std::size_t n) {
  std::vector<std::uint64_t> buf(n);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 8));
  require(static_cast<std::size_t>(is.gcount()) == n * 8, Errc::io_error, "truncated payload");
  for (std::size_t i = 0; i < n; ++i) p[i] = std::bit_cast<double>(to_le(buf[i]));
}

}  // namespace

void write_document(std::ostream& os, const std::string& magic, const nlohmann::json& header,
                    const std::vector<double>& payload) {
  nlohmann::json h = header;
  h["payload_doubles"] = payload.size();
  h["encoding"] = "float64 little-endian";
  os << magic << '\n' << h.dump() << '\n';
  put_doubles(os, payload.data(), payload.size());
  require(static_cast<bool>(os), Errc::io_error, "write failed");
}

Document read_document(std::istream& is, const std::string& magic) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line == magic, Errc::io_error,
          "unexpected file magic, wanted '" + magic + "'");
  require(static_cast<bool>(std::getline(is, line)), Errc::io_error, "missing header line");
  Document d;
  try {
    d.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, std::string("bad header: ") + e.what());
  }
  const auto n = d.header.at("payload_doubles").get<std::size_t>();
  d.payload.resize(n);
  get_doubles(is, d.payload.data(), n);
  return d;
}

void write_field(std::ostream& os, const SpectralField& f) {
  nlohmann::json h;
  h["N"] = f.N();
  h["kind"] = f.kind() == FieldKind::real_valued ? "real-valued" : "complex-valued";
  h["period_scale"] = f.period_scale();
  h["components"] = 3;
  h["order"] = "component-major, k lexicographic with k3 fastest, (re, im) pairs";
  std::vector<double> payload(2 * f.size());
  std::memcpy(payload.data(), f.data(), payload.size() * sizeof(double));
  write_document(os, kFieldMagic, h, payload);
}

SpectralField read_field(std::istream& is) {
  const Document d = read_document(is, kFieldMagic);
  try {
    const int N = d.header.at("N").get<int>();
    const std::string kind = d.header.at("kind").get<std::string>();
    require(kind == "real-valued" || kind == "complex-valued", Errc::io_error, "unknown kind");
    require(d.header.at("components").get<int>() == 3, Errc::io_error, "expected 3 components");
    SpectralField f(N, kind == "real-valued" ? FieldKind::real_valued : FieldKind::complex_valued,
                    d.header.at("period_scale").get<double>());
    require(d.payload.size() == 2 * f.size(), Errc::io_error, "payload size mismatch");
    std::memcpy(static_cast<void*>(f.data()), d.payload.data(), d.payload.size() * sizeof(double));
    return f;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, std::string("bad field header: ") + e.what());
  }
}

void save_field(const std::filesystem::path& path, const SpectralField& f) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), Errc::io_error, "cannot open " + path.string());
  write_field(os, f);
}

SpectralField load_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), Errc::io_error, "cannot open " + path.string());
  return read_field(is);
}

}  // namespace alphadyn
