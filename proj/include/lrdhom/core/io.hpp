#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace lrdhom::io {

using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::ofstream open_out(const std::filesystem::path& path,
                              std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

/// Writes named columns of equal length as CSV with 17 significant digits.
inline void write_columns_csv(const std::filesystem::path& path,
                              const std::vector<std::string>& names,
                              const std::vector<std::span<const double>>& columns) {
  if (names.size() != columns.size()) throw std::invalid_argument("column/name count mismatch");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw std::invalid_argument("ragged csv columns");
  auto out = open_out(path);
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j][i];
    out << '\n';
  }
}

/// Raw little-endian float64 array at `<stem>.f64` plus `<stem>.json` sidecar.
inline void write_raw(const std::filesystem::path& stem, std::span<const double> values,
                      json sidecar) {
  auto bin_path = stem;
  bin_path += ".f64";
  auto out = open_out(bin_path, std::ios::out | std::ios::binary);
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  sidecar["count"] = values.size();
  sidecar["dtype"] = "float64";
  sidecar["byte_order"] = "little";
  auto meta_path = stem;
  meta_path += ".json";
  auto meta = open_out(meta_path);
  meta << sidecar.dump(2) << '\n';
}

struct RawArray {
  std::vector<double> values;
  json sidecar;
};

inline RawArray read_raw(const std::filesystem::path& stem) {
  auto meta_path = stem;
  meta_path += ".json";
  std::ifstream meta(meta_path);
  if (!meta) throw IoError("missing sidecar: " + meta_path.string());
  RawArray result;
  result.sidecar = json::parse(meta);
  const auto count = result.sidecar.at("count").get<std::size_t>();
  auto bin_path = stem;
  bin_path += ".f64";
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw IoError("missing raw array: " + bin_path.string());
  result.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw IoError("truncated raw array");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    result.values[i] = std::bit_cast<double>(bits);
  }
  return result;
}

/// FNV-1a over a string, used for config fingerprints.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace lrdhom::io
