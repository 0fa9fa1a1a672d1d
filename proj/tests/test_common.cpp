#include <doctest.h>

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "linkvol/common/date.hpp"
#include "linkvol/common/hash.hpp"
#include "linkvol/common/io.hpp"
#include "linkvol/common/parallel.hpp"
#include "linkvol/common/rng.hpp"

using namespace linkvol;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("date parse / serial round trip") {
  const Date d = Date::parse("2020-03-16");
  CHECK(d.year() == 2020);
  CHECK(d.month() == 3);
  CHECK(d.day() == 16);
  CHECK(d.to_string() == "2020-03-16");
  CHECK(Date::from_serial(d.serial()) == d);

  // Known anchors: 2020-03-16 was a Monday, 2020-03-21 a Saturday.
  CHECK(d.weekday() == 0);
  CHECK(d.is_weekday());
  CHECK(Date::parse("2020-03-21").weekday() == 5);
  CHECK_FALSE(Date::parse("2020-03-21").is_weekday());

  CHECK((Date::parse("2020-03-01") + 15) == d);
  CHECK((d - Date::parse("2020-03-01")) == 15);
  CHECK(Date::parse("2020-02-28") + 1 == Date::parse("2020-02-29"));  // leap year
  CHECK(Date::parse("2021-02-28") + 1 == Date::parse("2021-03-01"));
}

TEST_CASE("date rejects malformed strings") {
  CHECK_THROWS_AS(Date::parse("2020-13-01"), std::invalid_argument);
  CHECK_THROWS_AS(Date::parse("2020-02-30"), std::invalid_argument);
  CHECK_THROWS_AS(Date::parse("not a date"), std::invalid_argument);
}

TEST_CASE("date ordering is calendar ordering over a long range") {
  Date prev = Date::parse("1999-12-25");
  for (int i = 0; i < 2000; ++i) {
    const Date next = prev + 1;
    CHECK(next > prev);
    CHECK(next.serial() == prev.serial() + 1);
    // round trip through the field representation
    CHECK(Date(next.year(), next.month(), next.day()) == next);
    prev = next;
  }
}

TEST_CASE("derive_seed separates streams") {
  const std::uint64_t base = 42;
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(base, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(base, 7) == derive_seed(base, 7));
  CHECK(derive_seed(base, 7) != derive_seed(base + 1, 7));
}

TEST_CASE("rng uniform01 stays in [0,1) and is seed-reproducible") {
  Rng a(123), b(123), c(124);
  bool all_equal_c = true;
  for (int i = 0; i < 10000; ++i) {
    const double x = a.uniform01();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(b.uniform01() == x);
    if (c.uniform01() != x) all_equal_c = false;
  }
  CHECK_FALSE(all_equal_c);
}

TEST_CASE("rng bounded covers the range without bias artifacts") {
  Rng r(7);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 100000; ++i) hits[r.bounded(10)]++;
  for (int h : hits) {
    CHECK(h > 9000);
    CHECK(h < 11000);
  }
}

TEST_CASE("rng normal moments") {
  Rng r(99);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(3.0, 2.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.01));
  CHECK(var == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("shuffle is a permutation and sample_without_replacement is distinct") {
  Rng r(5);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto sorted = v;
  r.shuffle(v);
  auto copy = v;
  std::sort(copy.begin(), copy.end());
  CHECK(copy == sorted);

  const auto sample = r.sample_without_replacement(50, 20);
  CHECK(sample.size() == 20);
  std::set<std::size_t> uniq(sample.begin(), sample.end());
  CHECK(uniq.size() == 20);
  for (auto s : sample) CHECK(s < 50);
}

TEST_CASE("fnv1a64 and digests") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") != fnv1a64("b"));
  CHECK(to_hex(0x1234abcdull) == "000000001234abcd");
  // digest_names is order-sensitive
  CHECK(digest_names({"a", "b"}) != digest_names({"b", "a"}));
}

TEST_CASE("file round trip and streaming digest agree") {
  const std::string path = temp_path("linkvol_io_test.bin");
  const std::string payload = "line one\nline \"two\", quoted\n";
  write_file_bytes(path, payload);
  CHECK(read_file_bytes(path) == payload);
  CHECK(digest_file(path) == to_hex(fnv1a64(payload)));
  std::filesystem::remove(path);
}

TEST_CASE("fmt_double round trips through parsing") {
  for (double v : {0.0, 1.0, -1.5, 3.16, 0.1, 1e-9, 12345678.9012345, -2.2250738585072014e-308}) {
    CHECK(std::stod(fmt_double(v)) == v);
  }
  CHECK(fmt_fixed(1.23456, 2) == "1.23");
}

TEST_CASE("csv writer and parser round trip quoting") {
  CsvWriter w({"id", "text", "value"});
  w.field("a1");
  w.field("has, comma");
  w.field(2.5);
  w.end_row();
  w.field("a2");
  w.field("has \"quote\"");
  w.field(int64_t{7});
  w.end_row();

  const CsvTable t = parse_csv(w.str(), "inline");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][t.col("text")] == "has, comma");
  CHECK(t.rows[1][t.col("text")] == "has \"quote\"");
  CHECK(std::stod(t.rows[0][t.col("value")]) == 2.5);
  CHECK_THROWS(t.col("missing"));
  CHECK_FALSE(t.col_opt("missing").has_value());
}

TEST_CASE("gzip files read transparently") {
  const std::string path = temp_path("linkvol_io_test.csv.gz");
  const std::string payload = "h1,h2\n1,2\n";
  {
    gzFile gz = gzopen(path.c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, payload.data(), static_cast<unsigned>(payload.size()));
    gzclose(gz);
  }
  CHECK(read_file_bytes(path) == payload);
  const CsvTable t = read_csv(path);
  CHECK(t.rows.size() == 1);
  std::filesystem::remove(path);
}

TEST_CASE("parallel_for covers every index once and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);

  CHECK_THROWS_WITH(parallel_for(10, 3,
                                 [](std::size_t i) {
                                   if (i == 7) throw std::runtime_error("boom at 7");
                                 }),
                    "boom at 7");
}
