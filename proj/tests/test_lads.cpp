#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "ecladts/error.hpp"
#include "ecladts/lads.hpp"
#include "ecladts/synthdata.hpp"
#include "support.hpp"

using namespace ecladts;
using ecladts::testing::random_tensor;

TEST_CASE("align-corners upscaling") {
  const std::vector<double> a = {0.0, 1.0};
  const auto up = upscale_linear(a, 1, 2, 4);
  REQUIRE(up.size() == 4);
  CHECK(up[0] == 0.0);
  CHECK(up[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(up[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(up[3] == 1.0);

  Rng rng(3);
  const Tensor t = random_tensor({3, 17}, rng);
  const std::vector<double> same(t.values().begin(), t.values().end());
  CHECK(upscale_linear(t.values(), 3, 17, 17) == same);

  const std::vector<double> flat = {2.5, 2.5, 2.5};
  for (double v : upscale_linear(flat, 1, 3, 50)) CHECK(v == 2.5);
  const std::vector<double> single = {-1.0, 4.0};
  const auto broadcast = upscale_linear(single, 2, 1, 5);
  for (std::size_t t2 = 0; t2 < 5; ++t2) {
    CHECK(broadcast[t2] == -1.0);
    CHECK(broadcast[5 + t2] == 4.0);
  }
}

TEST_CASE("upscaled values stay within the source range") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w_l = 2 + rng.below(20);
    const std::size_t target = w_l + rng.below(200);
    const Tensor src = random_tensor({1, w_l}, rng);
    const auto [lo, hi] = std::minmax_element(src.values().begin(), src.values().end());
    for (double v : upscale_linear(src.values(), 1, w_l, target)) {
      CHECK(v >= *lo - 1e-12);
      CHECK(v <= *hi + 1e-12);
    }
  }
}

TEST_CASE("descriptor extraction") {
  const Dataset d = gen_lm(6, 96, 1);
  const Model m = Model::build(ModelSpec::defaults("tiny-cnn", 2, 96, 3), 2);
  const std::vector<std::string> layers = {"block0", "block2"};
  const std::vector<std::size_t> idx = {0, 3, 5};
  const DescriptorSet set = extract_lads(m, layers, d, idx);

  CHECK(set.dim == 8 + 32);
  CHECK(set.w == 96);
  CHECK(set.rows() == 3 * 96);
  REQUIRE(set.provenance.size() == 2);
  CHECK(set.provenance[0].end == 8);
  CHECK(set.provenance[1].begin == 8);
  CHECK(set.provenance[1].end == 40);

  SUBCASE("matches a naive gather") {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Tensor x({1, 2, 96});
      std::copy(d.samples[idx[i]].x.values().begin(), d.samples[idx[i]].x.values().end(),
                x.values().begin());
      const auto acts = m.forward_with_activations(x, layers).second;
      const Tensor& a0 = acts.at("block0");
      const Tensor& a2 = acts.at("block2");
      const auto u0 = upscale_linear(a0.values(), a0.dim(1), a0.dim(2), 96);
      const auto u2 = upscale_linear(a2.values(), a2.dim(1), a2.dim(2), 96);
      const Descriptor desc = set.descriptor(i);
      CHECK(desc.sample_id == d.samples[idx[i]].id);
      for (std::size_t b = 0; b < 96; ++b) {
        const auto row = desc.row(b);
        for (std::size_t k = 0; k < 8; ++k) CHECK(row[k] == u0[k * 96 + b]);
        for (std::size_t k = 0; k < 32; ++k) CHECK(row[8 + k] == u2[k * 96 + b]);
      }
    }
  }
  SUBCASE("layer order permutes columns") {
    const std::vector<std::string> swapped = {"block2", "block0"};
    const DescriptorSet other = extract_lads(m, swapped, d, idx);
    for (std::size_t r = 0; r < set.rows(); ++r) {
      const auto a = set.lad(r);
      const auto b = other.lad(r);
      for (std::size_t k = 0; k < 8; ++k) CHECK(a[k] == b[32 + k]);
      for (std::size_t k = 0; k < 32; ++k) CHECK(a[8 + k] == b[k]);
    }
  }
  SUBCASE("batch size does not change the result") {
    LadOptions o;
    o.batch_size = 1;
    CHECK(extract_lads(m, layers, d, idx, o).values == set.values);
  }
  SUBCASE("cache round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "ecladts_lad_cache";
    std::filesystem::remove_all(dir);
    save_descriptor_cache(dir, set);
    const DescriptorSet back = load_descriptor_cache(dir);
    CHECK(back.values == set.values);
    CHECK(back.sample_ids == set.sample_ids);
    CHECK(back.provenance.size() == 2);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("bad probe layers") {
    const std::vector<std::string> bad = {"nope"};
    CHECK_THROWS_AS(extract_lads(m, bad, d, idx), ValidationError);
  }
}
