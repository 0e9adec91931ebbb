#include <doctest.h>

#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "scdtid/io.hpp"

using namespace scdtid;
using namespace scdtid::io;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("scdtid_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("float64 arrays are raw little-endian") {
  std::ostringstream os;
  append_f64(os, std::vector<double>{1.0, -2.5});
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 16);
  const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
  const unsigned char minus_2_5[8] = {0, 0, 0, 0, 0, 0, 0x04, 0xc0};
  for (int i = 0; i < 8; ++i) {
    CHECK(static_cast<unsigned char>(bytes[i]) == one[i]);
    CHECK(static_cast<unsigned char>(bytes[8 + i]) == minus_2_5[i]);
  }
  std::istringstream is(bytes);
  CHECK(read_f64(is, 2) == std::vector<double>{1.0, -2.5});
  std::istringstream short_is(bytes.substr(0, 12));
  CHECK_THROWS_AS(read_f64(short_is, 2), IoError);
}

TEST_CASE("array files") {
  const auto dir = fresh_dir("arrays");
  std::mt19937_64 rng(1);
  std::vector<double> v(1000);
  for (double& x : v) x = testing::uniform(rng, -1e6, 1e6);
  v[3] = 0.0;
  v[4] = -0.0;
  v[5] = 1e-310;
  write_f64_file(dir / "a.f64", v);
  CHECK(fs::file_size(dir / "a.f64") == 8000);
  const auto back = read_f64_file(dir / "a.f64");
  CHECK(back == v);
  CHECK(std::signbit(back[4]));
  CHECK(read_f64_range(dir / "a.f64", 10, 5) == std::vector<double>(v.begin() + 10, v.begin() + 15));
  CHECK_THROWS_AS(read_f64_range(dir / "a.f64", 998, 5), IoError);

  {
    std::ofstream os(dir / "odd.f64", std::ios::binary);
    os << "12345";
  }
  CHECK_THROWS_AS(read_f64_file(dir / "odd.f64"), IoError);
  CHECK_THROWS_AS(read_f64_file(dir / "missing.f64"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("json files") {
  const auto dir = fresh_dir("json");
  const json j = {{"a", 1}, {"b", {0.1, 1e-300}}, {"c", "text"}};
  write_json_file(dir / "x.json", j);
  CHECK(read_json_file(dir / "x.json") == j);
  {
    std::ofstream os(dir / "bad.json");
    os << "{not json";
  }
  CHECK_THROWS_AS(read_json_file(dir / "bad.json"), IoError);
  CHECK_THROWS_AS(read_json_file(dir / "none.json"), IoError);
  CHECK(array_path(dir / "trace") == dir / "trace.f64");
  CHECK(header_path(dir / "trace") == dir / "trace.json");
  fs::remove_all(dir);
}

TEST_CASE("signals round-trip exactly") {
  const auto dir = fresh_dir("signal");
  std::mt19937_64 rng(2);
  const Signal s = testing::band_limited(333, testing::random_band_limited(rng));
  write_signal(dir / "s", s, {{"seed", 9}});
  const Signal back = read_signal(dir / "s");
  CHECK(back.t0() == s.t0());
  CHECK(back.dt() == s.dt());
  CHECK(std::equal(back.samples().begin(), back.samples().end(), s.samples().begin(), s.samples().end()));
  const auto header = read_json_file(header_path(dir / "s"));
  CHECK(header.at("seed") == 9);
  CHECK(header.at("n") == 333);

  write_f64_file(array_path(dir / "s"), std::vector<double>(10, 1.0));
  CHECK_THROWS_AS(read_signal(dir / "s"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("signed transforms round-trip exactly") {
  const auto dir = fresh_dir("scdt");
  std::mt19937_64 rng(3);
  const Signal s = testing::band_limited(256, testing::random_band_limited(rng));
  const auto r = transform::scdt_forward(s, ReferenceDomain::midpoints(100));
  write_scdt(dir / "r", r);
  const auto back = read_scdt(dir / "r");
  CHECK(back.pos.values == r.pos.values);
  CHECK(back.neg.values == r.neg.values);
  CHECK(back.pos_mass == r.pos_mass);
  CHECK(back.neg_mass == r.neg_mass);
  CHECK(back.pos.domain == r.pos.domain);

  const auto data = read_f64_file(array_path(dir / "r"));
  CHECK(data[100] == r.pos_mass);
  CHECK(data[201] == r.neg_mass);

  write_scdt(dir / "r2", r);
  CHECK(slurp(array_path(dir / "r")) == slurp(array_path(dir / "r2")));
  CHECK(slurp(header_path(dir / "r")) == slurp(header_path(dir / "r2")));
  fs::remove_all(dir);
}

TEST_CASE("fnv1a64") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
  CHECK(hex64(1) == "0000000000000001");
}
