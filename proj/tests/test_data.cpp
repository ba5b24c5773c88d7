#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "ecladts/dataset.hpp"
#include "ecladts/error.hpp"
#include "ecladts/synthdata.hpp"

using namespace ecladts;
namespace fs = std::filesystem;

namespace {

std::size_t ones(const Mask& m, std::size_t from, std::size_t to) {
  return static_cast<std::size_t>(std::count(m.begin() + from, m.begin() + to, 1));
}

std::size_t runs(const Mask& m, std::size_t from, std::size_t to) {
  std::size_t n = 0;
  for (std::size_t i = from; i < to; ++i) {
    if (m[i] && (i == from || !m[i - 1])) ++n;
  }
  return n;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ecladts_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("syntheticL2 construction") {
  const Dataset d = gen_l2(2560, 256, 0);
  const std::size_t w = 256;
  std::size_t class0 = 0;
  for (const Sample& s : d.samples) {
    REQUIRE(s.masks.size() == 2);
    if (s.label == 0) {
      ++class0;
      CHECK(ones(s.masks[0], 0, w) == 24);
      CHECK(runs(s.masks[0], 0, w) == 1);
      for (std::size_t t = 0; t < w; ++t) CHECK(s.masks[1][t] == 1 - s.masks[0][t]);
    } else {
      CHECK(ones(s.masks[0], 0, w) == 0);
      CHECK(ones(s.masks[1], 0, w) == w);
    }
  }
  CHECK(class0 == 1280);
  CHECK(d.spec.primitives.at(0).important);
  CHECK(d.spec.primitives.at(1).important);
}

TEST_CASE("syntheticL4 bump signs and disjoint masks") {
  const Dataset d = gen_l4(400, 256, 1);
  std::size_t class0 = 0;
  double up = 0.0, down = 0.0, background = 0.0;
  std::size_t n_up = 0, n_down = 0, n_bg = 0;
  for (const Sample& s : d.samples) {
    if (s.label == 0) ++class0;
    for (std::size_t t = 0; t < 256; ++t) {
      CHECK_FALSE((s.masks[0][t] && s.masks[1][t]));
      if (s.masks[0][t]) {
        up += s.x[t];
        ++n_up;
      } else if (s.masks[1][t]) {
        down += s.x[t];
        ++n_down;
      } else {
        background += s.x[t];
        ++n_bg;
      }
    }
  }
  CHECK(class0 == 200);
  CHECK(up / n_up > background / n_bg);
  CHECK(down / n_down < background / n_bg);
}

TEST_CASE("syntheticLm channel assignment and class balance") {
  const Dataset d = gen_lm(300, 128, 2);
  CHECK(d.spec.ch == 2);
  CHECK(d.spec.num_classes == 3);
  for (const Sample& s : d.samples) {
    CHECK(ones(s.masks[0], 128, 256) == 0);
    CHECK(ones(s.masks[1], 0, 128) == 0);
    if (s.label == 2) {
      CHECK(ones(s.masks[0], 0, 256) == 0);
      CHECK(ones(s.masks[1], 0, 256) == 0);
    }
  }
  const double n = 900.0;
  const double sigma = std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset big = gen_lm(900, 96, seed);
    std::size_t counts[3] = {0, 0, 0};
    for (const Sample& s : big.samples) ++counts[s.label];
    for (std::size_t k : counts) CHECK(std::abs(static_cast<double>(k) - n / 3.0) <= 3.0 * sigma);
  }
}

TEST_CASE("generators are deterministic and reject short series") {
  CHECK(gen_l2(64, 128, 5).fingerprint() == gen_l2(64, 128, 5).fingerprint());
  CHECK(gen_l2(64, 128, 5).fingerprint() != gen_l2(64, 128, 6).fingerprint());
  CHECK_THROWS_AS(gen_l2(10, 40, 0), ValidationError);
  CHECK_THROWS_AS(generate("synthetic-x", 10, 256, 0), ValidationError);
}

TEST_CASE("dataset directories round trip in both storage formats") {
  const Dataset d = gen_lm(12, 96, 3);
  for (StorageFormat f : {StorageFormat::Binary, StorageFormat::Csv}) {
    const fs::path dir = scratch_dir(f == StorageFormat::Binary ? "bin" : "csvdir");
    save_dataset(dir, d, f);
    const Dataset back = load_dataset(dir);
    CHECK(back.fingerprint() == d.fingerprint());
    fs::remove_all(dir);
  }
  CHECK_THROWS_AS(load_dataset(scratch_dir("missing")), InputError);
}

TEST_CASE("mask run encoding") {
  Mask m(2 * 6, 0);
  m[1] = m[2] = m[5] = m[6 + 0] = 1;
  const json runs = encode_mask_runs(m, 6);
  CHECK(runs == json::parse("[[0,1,2],[0,5,1],[1,0,1]]"));
  CHECK(decode_mask_runs(runs, 2, 6) == m);
}

TEST_CASE("UCR-style csv loading") {
  const fs::path dir = scratch_dir("csv");
  fs::create_directories(dir);

  SUBCASE("two rows") {
    write_text(dir / "a.csv", "0,1,2,3,4\n1,5,6,7,8\n");
    const Dataset d = load_csv(dir / "a.csv");
    REQUIRE(d.size() == 2);
    CHECK(d.spec.w == 4);
    CHECK(d.spec.ch == 1);
    CHECK(d.samples[1].label == 1);
    CHECK(d.samples[1].x == Tensor({1, 4}, {5, 6, 7, 8}));
    CHECK_FALSE(d.has_masks());
  }
  SUBCASE("export then load preserves values") {
    const Dataset src = gen_l4(6, 96, 9);
    export_csv(src, dir / "rt.csv");
    const Dataset back = load_csv(dir / "rt.csv");
    REQUIRE(back.size() == src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      CHECK(back.samples[i].label == src.samples[i].label);
      for (std::size_t t = 0; t < 96; ++t) {
        CHECK(std::abs(back.samples[i].x[t] - src.samples[i].x[t]) <= 1e-12);
      }
    }
  }
  SUBCASE("z-normalization") {
    write_text(dir / "z.csv", "0,1,2,3,10\n1,-4,0,2,2\n");
    CsvSchema schema;
    schema.z_normalize = true;
    const Dataset d = load_csv(dir / "z.csv", schema);
    for (const Sample& s : d.samples) {
      double mean = 0.0, sq = 0.0;
      for (double v : s.x.values()) mean += v;
      mean /= 4.0;
      for (double v : s.x.values()) sq += (v - mean) * (v - mean);
      CHECK(std::abs(mean) <= 1e-9);
      CHECK(std::abs(std::sqrt(sq / 4.0) - 1.0) <= 1e-9);
    }
  }
  SUBCASE("malformed rows name the row") {
    write_text(dir / "bad.csv", "0,1,2\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(dir / "bad.csv"), doctest::Contains("row 2"), InputError);
    write_text(dir / "nan.csv", "0,1,x\n");
    CHECK_THROWS_AS(load_csv(dir / "nan.csv"), InputError);
  }
  fs::remove_all(dir);
}
