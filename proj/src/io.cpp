#include "scdtid/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace scdtid::io {

namespace {

void encode_le(double v, unsigned char* out) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

double decode_le(const unsigned char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void append_f64(std::ostream& os, std::span<const double> values) {
  std::vector<unsigned char> buf(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) encode_le(values[i], buf.data() + 8 * i);
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed");
}

std::vector<double> read_f64(std::istream& is, std::size_t count) {
  std::vector<unsigned char> buf(count * 8);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) throw IoError("short read");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = decode_le(buf.data() + 8 * i);
  return out;
}

void write_f64_file(const fs::path& path, std::span<const double> values) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  append_f64(os, values);
}

std::vector<double> read_f64_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const auto bytes = fs::file_size(path);
  if (bytes % 8 != 0) throw IoError(path.string() + ": size is not a multiple of 8");
  return read_f64(is, static_cast<std::size_t>(bytes / 8));
}

std::vector<double> read_f64_range(const fs::path& path, std::uint64_t offset, std::size_t count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  is.seekg(static_cast<std::streamoff>(offset * 8));
  return read_f64(is, count);
}

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

fs::path array_path(const fs::path& base) {
  fs::path p = base;
  p += ".f64";
  return p;
}

fs::path header_path(const fs::path& base) {
  fs::path p = base;
  p += ".json";
  return p;
}

void write_signal(const fs::path& base, const Signal& s, const json& extra) {
  json header = extra;
  header["kind"] = "signal";
  header["n"] = s.size();
  header["t0"] = s.t0();
  header["dt"] = s.dt();
  write_f64_file(array_path(base), s.samples());
  write_json_file(header_path(base), header);
}

Signal read_signal(const fs::path& base) {
  const json header = read_json_file(header_path(base));
  auto samples = read_f64_file(array_path(base));
  const auto n = header.at("n").get<std::size_t>();
  if (samples.size() != n) throw IoError(base.string() + ": header n does not match array length");
  return Signal(std::move(samples), header.at("t0").get<double>(), header.at("dt").get<double>());
}

void write_scdt(const fs::path& base, const transform::ScdtRepr& r, const json& extra) {
  const std::size_t m = r.pos.values.size();
  std::vector<double> blocks;
  blocks.reserve(2 * m + 2);
  blocks.insert(blocks.end(), r.pos.values.begin(), r.pos.values.end());
  blocks.push_back(r.pos_mass);
  blocks.insert(blocks.end(), r.neg.values.begin(), r.neg.values.end());
  blocks.push_back(r.neg_mass);

  json header = extra;
  header["kind"] = "scdt";
  header["m"] = m;
  header["layout"] = {"pos.values", "pos_mass", "neg.values", "neg_mass"};
  const auto grid = r.pos.domain.grid();
  header["grid"] = std::vector<double>(grid.begin(), grid.end());
  write_f64_file(array_path(base), blocks);
  write_json_file(header_path(base), header);
}

transform::ScdtRepr read_scdt(const fs::path& base) {
  const json header = read_json_file(header_path(base));
  const auto m = header.at("m").get<std::size_t>();
  const auto blocks = read_f64_file(array_path(base));
  if (blocks.size() != 2 * m + 2) throw IoError(base.string() + ": unexpected block length");
  ReferenceDomain ref(header.at("grid").get<std::vector<double>>());
  if (ref.size() != m) throw IoError(base.string() + ": grid length mismatch");

  transform::ScdtRepr r{
      {std::vector<double>(blocks.begin(), blocks.begin() + static_cast<std::ptrdiff_t>(m)), ref},
      blocks[m],
      {std::vector<double>(blocks.begin() + static_cast<std::ptrdiff_t>(m + 1),
                           blocks.begin() + static_cast<std::ptrdiff_t>(2 * m + 1)),
       ref},
      blocks[2 * m + 1]};
  return r;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace scdtid::io
