#pragma once

// On-disk formats. Arrays are raw little-endian IEEE-754 float64 with no
// framing; shape and metadata live in a JSON sidecar next to the array file
// (`<base>.f64` + `<base>.json`).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scdtid/signal.hpp"
#include "scdtid/transform.hpp"

namespace scdtid::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void append_f64(std::ostream& os, std::span<const double> values);
std::vector<double> read_f64(std::istream& is, std::size_t count);

void write_f64_file(const fs::path& path, std::span<const double> values);
std::vector<double> read_f64_file(const fs::path& path);
/// Reads `count` values starting at element `offset`.
std::vector<double> read_f64_range(const fs::path& path, std::uint64_t offset, std::size_t count);

json read_json_file(const fs::path& path);
void write_json_file(const fs::path& path, const json& j);

fs::path array_path(const fs::path& base);
fs::path header_path(const fs::path& base);

/// Header {n, t0, dt} merged with `extra`.
void write_signal(const fs::path& base, const Signal& s, const json& extra = json::object());
Signal read_signal(const fs::path& base);

/// Blocks in order pos.values, pos_mass, neg.values, neg_mass; the header
/// records m and the reference grid.
void write_scdt(const fs::path& base, const transform::ScdtRepr& r, const json& extra = json::object());
transform::ScdtRepr read_scdt(const fs::path& base);

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t v);

}  // namespace scdtid::io
