#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ecladts {

struct Centroids {
  std::size_t n_c = 0;
  std::size_t dim = 0;
  std::vector<double> values;               // [n_c, dim]
  std::vector<std::size_t> counts;          // points absorbed per centroid
  std::vector<double> inertia_history;      // per sweep (mini-batch) or iteration (Lloyd)
  std::size_t requested_n_c = 0;
  std::size_t batches = 0;
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  std::span<const double> row(std::size_t q) const {
    return std::span<const double>(values).subspan(q * dim, dim);
  }
};

struct KMeansOptions {
  std::size_t n_c = 5;
  std::size_t batch_size = 1024;
  std::size_t max_sweeps = 200;
  std::size_t max_batches = 0;  // 0: bounded by max_sweeps only
  double tolerance = 1e-6;      // mean centroid displacement over one sweep
  std::size_t reservoir_size = 8192;
  std::uint64_t seed = 0;
};

// Mini-batch k-means over the row-major matrix `rows` [n, dim]. Seeding is
// k-means++ on a seeded reservoir sample; each point moves its centroid with
// learning rate 1 / count.
Centroids minibatch_kmeans_fit(std::span<const double> rows, std::size_t dim,
                               const KMeansOptions& options);

// Full-batch Lloyd iterations from k-means++ seeding, run to a fixed point.
Centroids lloyd_reference(std::span<const double> rows, std::size_t dim, std::size_t n_c,
                          std::uint64_t seed, std::size_t max_iterations = 1000);

// Nearest centroid by Euclidean distance; ties go to the lowest index.
std::size_t assign(const Centroids& centroids, std::span<const double> lad);
std::vector<std::size_t> assign_all(const Centroids& centroids, std::span<const double> rows);

// Sum of squared distances of every row to its assigned centroid.
double inertia(const Centroids& centroids, std::span<const double> rows);

}  // namespace ecladts
