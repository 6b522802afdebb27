#pragma once

// Snapshot files: one magic line, one JSON header line, then raw
// little-endian float64 payload.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "alphadyn/spectral_field.hpp"
#include "json.hpp"

namespace alphadyn {

void write_field(std::ostream& os, const SpectralField& f);
SpectralField read_field(std::istream& is);
void save_field(const std::filesystem::path& path, const SpectralField& f);
SpectralField load_field(const std::filesystem::path& path);

// generic container used by the other snapshot kinds
void write_document(std::ostream& os, const std::string& magic, const nlohmann::json& header,
                    const std::vector<double>& payload);
struct Document {
  nlohmann::json header;
  std::vector<double> payload;
};
Document read_document(std::istream& is, const std::string& magic);

}  // namespace alphadyn
