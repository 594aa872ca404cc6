#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tfct/dataset_io.hpp"

namespace fs = std::filesystem;
using namespace tfct;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("tfct_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

// Independent 3x3 clamped box filter.
ScalarGrid reference_box(const ScalarGrid& g) {
  ScalarGrid out = g;
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      double s = 0;
      int n = 0;
      for (int yy = std::max(0, y - 1); yy <= std::min(g.height - 1, y + 1); ++yy) {
        for (int xx = std::max(0, x - 1); xx <= std::min(g.width - 1, x + 1); ++xx) {
          s += g.values[static_cast<std::size_t>(yy * g.width + xx)];
          ++n;
        }
      }
      out.values[static_cast<std::size_t>(y * g.width + x)] = s / n;
    }
  }
  return out;
}

int strict_maxima_near(const ScalarGrid& g, double cu, double cv, int radius) {
  const auto rank = oracle::ranks(g);
  const auto adj = oracle::adjacency(g);
  const int cx = static_cast<int>(std::lround(cu * (g.width - 1)));
  const int cy = static_cast<int>(std::lround(cv * (g.height - 1)));
  int n = 0;
  for (int y = cy - radius; y <= cy + radius; ++y) {
    for (int x = cx - radius; x <= cx + radius; ++x) {
      if (x < 0 || y < 0 || x >= g.width || y >= g.height) continue;
      const auto v = static_cast<std::size_t>(y * g.width + x);
      bool is_max = true;
      for (int u : adj[v]) is_max = is_max && rank[static_cast<std::size_t>(u)] < rank[v];
      n += is_max;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("load_dataset: constant fields in both formats") {
  TimeSeriesDataset ds;
  ds.grids = {ScalarGrid(3, 3, 0.0), ScalarGrid(3, 3, 1.0)};
  ds.finalize();
  const auto dir = scratch_dir("const");
  save_csv_dir(ds, dir / "csv");
  save_tfts(ds, dir / "d.tfts");

  for (const auto& loaded : {load_dataset(dir / "csv", DatasetFormat::csv_dir), load_dataset(dir / "d.tfts", DatasetFormat::tfts)}) {
    CHECK(loaded.steps() == 2);
    CHECK(loaded.width() == 3);
    CHECK(loaded.height() == 3);
    CHECK(loaded.global_min == 0.0);
    CHECK(loaded.global_max == 1.0);
  }
}

TEST_CASE("load_dataset: error paths") {
  const auto dir = scratch_dir("errors");

  SUBCASE("dimension mismatch") {
    fs::create_directories(dir / "mismatch");
    write_csv_grid(ScalarGrid(3, 3, 0.0), dir / "mismatch" / "t0.csv");
    write_csv_grid(ScalarGrid(4, 4, 0.0), dir / "mismatch" / "t1.csv");
    CHECK_THROWS_AS(load_dataset(dir / "mismatch", DatasetFormat::csv_dir), DataError);
  }
  SUBCASE("non-finite value") {
    fs::create_directories(dir / "nan");
    write_text(dir / "nan" / "t0.csv", "0,1\nnan,2\n");
    CHECK_THROWS_AS(load_dataset(dir / "nan", DatasetFormat::csv_dir), DataError);
  }
  SUBCASE("empty dataset") {
    fs::create_directories(dir / "empty");
    CHECK_THROWS_AS(load_dataset(dir / "empty", DatasetFormat::csv_dir), DataError);
    TimeSeriesDataset none;
    CHECK_THROWS_AS(none.finalize(), DataError);
  }
  SUBCASE("missing step") {
    fs::create_directories(dir / "gap");
    write_csv_grid(ScalarGrid(3, 3, 0.0), dir / "gap" / "t0.csv");
    write_csv_grid(ScalarGrid(3, 3, 0.0), dir / "gap" / "t2.csv");
    CHECK_THROWS_AS(load_dataset(dir / "gap", DatasetFormat::csv_dir), DataError);
  }
  SUBCASE("bad tfts") {
    write_text(dir / "bad.tfts", "TFTX0000");
    CHECK_THROWS_AS(load_dataset(dir / "bad.tfts", DatasetFormat::tfts), DataError);
    TimeSeriesDataset ds;
    ds.grids = {ScalarGrid(3, 3, 2.0)};
    ds.finalize();
    auto bytes = encode_tfts(ds);
    bytes.pop_back();
    CHECK_THROWS_AS(decode_tfts(bytes), DataError);
  }
  SUBCASE("missing path") {
    CHECK_THROWS_AS(load_dataset(dir / "nope.tfts", DatasetFormat::tfts), DataError);
  }
  SUBCASE("unknown format name") {
    CHECK_THROWS_AS(parse_dataset_format("netcdf"), std::invalid_argument);
  }
}

TEST_CASE("tfts header layout is little-endian and bit-exact") {
  TimeSeriesDataset ds;
  ds.grids = {ScalarGrid(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6})};
  ds.finalize();
  const auto bytes = encode_tfts(ds);
  REQUIRE(bytes.size() == 20 + 6 * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TFTS");
  CHECK(bytes[4] == 1);   // version
  CHECK(bytes[8] == 1);   // T
  CHECK(bytes[12] == 2);  // width
  CHECK(bytes[16] == 3);  // height
  // 1.0 = 0x3FF0000000000000, little-endian: last byte 0x3F, previous 0xF0
  CHECK(bytes[27] == 0x3F);
  CHECK(bytes[26] == 0xF0);
}

TEST_CASE("tfts round-trip is bit-exact for random datasets") {
  std::mt19937_64 rng(7);
  const auto dir = scratch_dir("roundtrip");
  for (int trial = 0; trial < 20; ++trial) {
    TimeSeriesDataset ds;
    const int T = 1 + static_cast<int>(rng() % 4);
    const int w = 2 + static_cast<int>(rng() % 6);
    const int h = 2 + static_cast<int>(rng() % 6);
    std::uniform_real_distribution<double> real(-1e6, 1e6);
    for (int t = 0; t < T; ++t) {
      std::vector<double> v(static_cast<std::size_t>(w * h));
      for (auto& x : v) x = real(rng);
      v[0] = -0.0;
      v[1] = std::numeric_limits<double>::denorm_min();
      ds.grids.emplace_back(w, h, std::move(v));
    }
    ds.finalize();
    save_tfts(ds, dir / "rt.tfts");
    const auto back = load_dataset(dir / "rt.tfts", DatasetFormat::tfts);
    CHECK(encode_tfts(back) == encode_tfts(ds));
    CHECK(std::signbit(back.grids[0].values[0]));
  }
}

TEST_CASE("csv round-trip preserves values exactly") {
  std::mt19937_64 rng(11);
  const auto g = oracle::random_grid(rng, 5, 4);
  const auto dir = scratch_dir("csv");
  write_csv_grid(g, dir / "g.csv");
  CHECK(read_csv_grid(dir / "g.csv") == g);
}

TEST_CASE("smooth") {
  SUBCASE("zero passes is identity") {
    std::mt19937_64 rng(1);
    const auto g = oracle::random_grid(rng, 6, 5);
    CHECK(smooth(g, 0) == g);
  }
  SUBCASE("centre spike of 9 averages to 1") {
    ScalarGrid g(3, 3, 0.0);
    g.at(1, 1) = 9.0;
    CHECK(smooth(g, 1).at(1, 1) == doctest::Approx(1.0));
  }
  SUBCASE("random 8x8 matches reference box filter") {
    std::mt19937_64 rng(2);
    const auto g = oracle::random_grid(rng, 8, 8);
    const auto got = smooth(g, 1);
    const auto want = reference_box(g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(got.values[i] == doctest::Approx(want.values[i]).epsilon(1e-14));
  }
  SUBCASE("output range stays within input range") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
      const auto g = oracle::random_grid(rng, 2 + static_cast<int>(rng() % 10), 2 + static_cast<int>(rng() % 10));
      const auto out = smooth(g, static_cast<int>(rng() % 4));
      const auto [ilo, ihi] = std::minmax_element(g.values.begin(), g.values.end());
      const auto [olo, ohi] = std::minmax_element(out.values.begin(), out.values.end());
      CHECK(*olo >= *ilo);
      CHECK(*ohi <= *ihi);
    }
  }
  SUBCASE("negative passes rejected") {
    CHECK_THROWS_AS(smooth(ScalarGrid(2, 2, 0.0), -1), std::invalid_argument);
  }
}

TEST_CASE("apply_mask") {
  std::vector<double> ramp(16);
  for (int i = 0; i < 16; ++i) ramp[static_cast<std::size_t>(i)] = i;
  const ScalarGrid g(4, 4, ramp);
  Mask all{4, 4, std::vector<bool>(16, true)};
  Mask none{4, 4, std::vector<bool>(16, false)};
  CHECK(apply_mask(g, all, -1.0) == g);
  CHECK(apply_mask(g, none, -1.0) == ScalarGrid(4, 4, -1.0));

  Mask checker{4, 4, {}};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) checker.keep.push_back((x + y) % 2 == 0);
  }
  const auto out = apply_mask(g, checker, -1.0);
  for (int i = 0; i < 16; ++i) {
    CHECK(out.values[static_cast<std::size_t>(i)] == (checker.keep[static_cast<std::size_t>(i)] ? i : -1.0));
  }
  Mask wrong{3, 4, std::vector<bool>(12, true)};
  CHECK_THROWS_AS(apply_mask(g, wrong, -1.0), DataError);
}

TEST_CASE("generate_synthetic") {
  SUBCASE("two_peaks has exactly two strict local maxima") {
    const auto ds = generate_synthetic(SyntheticKind::two_peaks, 1, 32, 32);
    REQUIRE(ds.steps() == 1);
    CHECK(oracle::count_local_maxima(ds.grids[0]) == 2);
    CHECK(oracle::count_local_minima(ds.grids[0]) == 1);
  }
  SUBCASE("periodic_blob secondary peak follows t mod period < period/2") {
    const auto ds = generate_synthetic(SyntheticKind::periodic_blob, 24, 32, 32, 12);
    for (int t = 0; t < 24; ++t) {
      const bool expected = (t >= 0 && t <= 5) || (t >= 12 && t <= 17);
      CHECK(periodic_secondary_present(t, 12) == expected);
      CHECK((strict_maxima_near(ds.grids[static_cast<std::size_t>(t)], 0.3, 0.72, 3) == 1) == expected);
      CHECK(oracle::count_local_maxima(ds.grids[static_cast<std::size_t>(t)]) == (expected ? 3 : 2));
      CHECK(oracle::count_local_minima(ds.grids[static_cast<std::size_t>(t)]) == 1);
    }
  }
  SUBCASE("moving_gaussian argmax moves") {
    const auto ds = generate_synthetic(SyntheticKind::moving_gaussian, 2, 32, 32);
    const auto argmax = [](const ScalarGrid& g) { return std::max_element(g.values.begin(), g.values.end()) - g.values.begin(); };
    CHECK(argmax(ds.grids[0]) != argmax(ds.grids[1]));
  }
  SUBCASE("moving_gaussian 16 steps of 32x32") {
    const auto ds = generate_synthetic(SyntheticKind::moving_gaussian, 16, 32, 32);
    CHECK(ds.steps() == 16);
    CHECK(ds.width() == 32);
    CHECK(ds.height() == 32);
  }
  SUBCASE("deterministic") {
    CHECK(generate_synthetic(SyntheticKind::periodic_blob, 5, 9, 7, 4) == generate_synthetic(SyntheticKind::periodic_blob, 5, 9, 7, 4));
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(generate_synthetic(SyntheticKind::two_peaks, 0, 8, 8), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(SyntheticKind::two_peaks, 1, 1, 8), std::invalid_argument);
  }
}

TEST_CASE("total order never ties distinct vertices") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = oracle::random_grid(rng, 5, 5, 3);
    for (VertexId u = 0; u < 25; ++u) {
      for (VertexId v = 0; v < 25; ++v) {
        if (u == v) {
          CHECK_FALSE(vertex_less(g, u, v));
        } else {
          CHECK(vertex_less(g, u, v) != vertex_less(g, v, u));
        }
      }
    }
  }
}
