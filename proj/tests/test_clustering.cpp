#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ecladts/clustering.hpp"
#include "ecladts/error.hpp"
#include "ecladts/rng.hpp"

using namespace ecladts;

namespace {

// n points around each of the given centers with isotropic noise sigma.
std::vector<double> blobs(const std::vector<std::vector<double>>& centers, std::size_t n,
                          double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& c : centers) {
      for (double v : c) out.push_back(v + sigma * rng.normal());
    }
  }
  return out;
}

Centroids fixed(std::size_t dim, std::vector<double> values) {
  Centroids c;
  c.dim = dim;
  c.n_c = values.size() / dim;
  c.values = std::move(values);
  return c;
}

}  // namespace

TEST_CASE("assignment examples") {
  const Centroids c = fixed(1, {0.0, 1.0});
  const std::vector<double> a = {3.0}, b = {0.4}, tie = {0.5};
  CHECK(assign(c, a) == 1);
  CHECK(assign(c, b) == 0);
  CHECK(assign(c, tie) == 0);
  const std::vector<double> wrong = {1.0, 2.0};
  CHECK_THROWS_AS(assign(c, wrong), DimensionError);
  const std::vector<double> rows = {3.0, 0.4, 0.5, -2.0};
  CHECK(assign_all(c, rows) == std::vector<std::size_t>{1, 0, 0, 0});
  CHECK(inertia(c, rows) == doctest::Approx(4.0 + 0.16 + 0.25 + 4.0));
}

TEST_CASE("a single centroid converges to the mean") {
  const std::vector<double> rows = blobs({{1.0, -2.0, 0.5}}, 500, 1.0, 3);
  KMeansOptions o;
  o.n_c = 1;
  o.batch_size = 64;
  const Centroids c = minibatch_kmeans_fit(rows, 3, o);
  double mean[3] = {0, 0, 0};
  for (std::size_t i = 0; i < 500; ++i) {
    for (std::size_t k = 0; k < 3; ++k) mean[k] += rows[i * 3 + k] / 500.0;
  }
  // with 1/count updates the centroid is the running mean of absorbed points
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(c.row(0)[k] - mean[k]) < 0.05);
}

TEST_CASE("separated blobs agree with Lloyd") {
  const std::vector<std::vector<double>> centers = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
  const std::vector<double> rows = blobs(centers, 200, 0.5, 7);
  KMeansOptions o;
  o.n_c = 4;
  o.batch_size = 128;
  o.seed = 1;
  const Centroids mb = minibatch_kmeans_fit(rows, 2, o);
  const Centroids ll = lloyd_reference(rows, 2, 4, 1);
  REQUIRE(mb.n_c == 4);
  for (std::size_t q = 0; q < 4; ++q) {
    double best = 1e300;
    for (std::size_t r = 0; r < 4; ++r) {
      const double dx = mb.row(q)[0] - ll.row(r)[0];
      const double dy = mb.row(q)[1] - ll.row(r)[1];
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    CHECK(best < 0.05);
  }
  for (std::size_t count : mb.counts) CHECK(count > 0);
  CHECK(inertia(mb, rows) <= 1.01 * inertia(ll, rows));
}

TEST_CASE("Lloyd inertia never increases") {
  const std::vector<double> rows = blobs({{0, 0, 0}, {1, 1, 1}, {2, 0, 1}}, 100, 0.8, 9);
  const Centroids ll = lloyd_reference(rows, 3, 5, 2);
  CHECK(ll.converged);
  for (std::size_t i = 1; i < ll.inertia_history.size(); ++i) {
    CHECK(ll.inertia_history[i] <= ll.inertia_history[i - 1] + 1e-9);
  }
}

TEST_CASE("as many distinct points as centroids gives zero inertia") {
  const std::vector<double> rows = {0, 0, 5, 5, -3, 2, 0, 0, 5, 5, -3, 2};
  KMeansOptions o;
  o.n_c = 3;
  const Centroids mb = minibatch_kmeans_fit(rows, 2, o);
  CHECK(inertia(mb, rows) == doctest::Approx(0.0));
  CHECK(inertia(lloyd_reference(rows, 2, 3, 0), rows) == doctest::Approx(0.0));
}

TEST_CASE("fewer distinct points than requested reduces n_c") {
  const std::vector<double> rows = {1, 1, 1, 2, 2, 2};
  KMeansOptions o;
  o.n_c = 5;
  const Centroids c = minibatch_kmeans_fit(rows, 1, o);
  CHECK(c.n_c == 2);
  CHECK(c.requested_n_c == 5);
  CHECK_FALSE(c.warnings.empty());
}

TEST_CASE("fits are deterministic per seed and honour the batch cap") {
  const std::vector<double> rows = blobs({{0, 0}, {3, 3}, {6, 0}}, 400, 1.0, 4);
  KMeansOptions o;
  o.n_c = 3;
  o.batch_size = 50;
  o.seed = 12;
  const Centroids a = minibatch_kmeans_fit(rows, 2, o);
  const Centroids b = minibatch_kmeans_fit(rows, 2, o);
  CHECK(a.values == b.values);
  CHECK(a.counts == b.counts);
  o.max_batches = 3;
  const Centroids capped = minibatch_kmeans_fit(rows, 2, o);
  CHECK(capped.batches == 3);
  CHECK_FALSE(capped.converged);
}

TEST_CASE("bad input") {
  const std::vector<double> rows = {1, 2, 3};
  KMeansOptions o;
  CHECK_THROWS(minibatch_kmeans_fit(rows, 2, o));
  o.n_c = 0;
  CHECK_THROWS(minibatch_kmeans_fit(rows, 1, o));
}
