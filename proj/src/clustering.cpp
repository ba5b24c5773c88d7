#include "ecladts/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string_view>
#include <tuple>
#include <unordered_set>

#include "ecladts/error.hpp"
#include "ecladts/parallel.hpp"
#include "ecladts/rng.hpp"

namespace ecladts {
namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

std::pair<std::size_t, double> nearest(const std::vector<double>& centers, std::size_t n_c,
                                       const double* x, std::size_t dim) {
  std::size_t best = 0;
  double best_d = sq_dist(centers.data(), x, dim);
  for (std::size_t q = 1; q < n_c; ++q) {
    const double d = sq_dist(centers.data() + q * dim, x, dim);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return {best, best_d};
}

std::size_t row_count(std::span<const double> rows, std::size_t dim) {
  if (dim == 0) throw ValidationError("descriptor dimension must be >= 1");
  if (rows.size() % dim != 0) {
    throw DimensionError("row buffer of " + std::to_string(rows.size()) +
                         " values is not a multiple of dim " + std::to_string(dim));
  }
  return rows.size() / dim;
}

// Number of distinct rows, counting no further than `limit`.
std::size_t distinct_rows(std::span<const double> rows, std::size_t dim, std::size_t limit) {
  std::unordered_set<std::string_view> seen;
  const std::size_t n = rows.size() / dim;
  for (std::size_t i = 0; i < n && seen.size() < limit; ++i) {
    seen.emplace(reinterpret_cast<const char*>(rows.data() + i * dim), dim * sizeof(double));
  }
  return seen.size();
}

void check_request(std::size_t n_c, std::size_t n) {
  if (n_c < 1) throw ValidationError("number of concepts must be >= 1");
  if (n == 0) throw ValidationError("cannot cluster an empty descriptor set");
}

// k-means++ over the candidate rows. Falls back to scanning `all` for a
// point not yet chosen when every candidate coincides with a center.
std::vector<double> kmeanspp(std::span<const double> candidates, std::span<const double> all,
                             std::size_t dim, std::size_t n_c, Rng& rng) {
  const std::size_t m = candidates.size() / dim;
  std::vector<double> centers;
  centers.reserve(n_c * dim);
  const double* first = candidates.data() + rng.below(m) * dim;
  centers.insert(centers.end(), first, first + dim);
  std::vector<double> d2(m);
  for (std::size_t i = 0; i < m; ++i) d2[i] = sq_dist(candidates.data() + i * dim, first, dim);

  for (std::size_t q = 1; q < n_c; ++q) {
    double total = 0.0;
    for (double v : d2) total += v;
    const double* pick = nullptr;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      std::size_t chosen = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      while (d2[chosen] == 0.0) --chosen;
      pick = candidates.data() + chosen * dim;
    } else {
      const std::size_t n = all.size() / dim;
      for (std::size_t i = 0; i < n && !pick; ++i) {
        const double* x = all.data() + i * dim;
        if (nearest(centers, q, x, dim).second > 0.0) pick = x;
      }
      if (!pick) throw ValidationError("not enough distinct descriptors to seed clustering");
    }
    centers.insert(centers.end(), pick, pick + dim);
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = std::min(d2[i], sq_dist(candidates.data() + i * dim, pick, dim));
    }
  }
  return centers;
}

std::size_t effective_n_c(Centroids& out, std::span<const double> rows, std::size_t dim,
                          std::size_t n_c) {
  out.requested_n_c = n_c;
  const std::size_t distinct = distinct_rows(rows, dim, n_c);
  if (distinct < n_c) {
    out.warnings.push_back("only " + std::to_string(distinct) +
                           " distinct descriptors; number of concepts reduced from " +
                           std::to_string(n_c) + " to " + std::to_string(distinct));
    return distinct;
  }
  return n_c;
}

}  // namespace

Centroids minibatch_kmeans_fit(std::span<const double> rows, std::size_t dim,
                               const KMeansOptions& options) {
  const std::size_t n = row_count(rows, dim);
  check_request(options.n_c, n);
  if (options.batch_size < 1) throw ValidationError("k-means batch size must be >= 1");
  if (options.max_sweeps < 1) throw ValidationError("k-means max_sweeps must be >= 1");

  Centroids out;
  out.dim = dim;
  const std::size_t n_c = effective_n_c(out, rows, dim, options.n_c);
  out.n_c = n_c;

  Rng rng = Rng::derive(options.seed, 0xC1u);
  // Reservoir sample for seeding.
  const std::size_t r = std::min(n, std::max(options.reservoir_size, n_c));
  std::vector<std::size_t> reservoir(r);
  for (std::size_t i = 0; i < r; ++i) reservoir[i] = i;
  for (std::size_t i = r; i < n; ++i) {
    const std::size_t j = rng.below(i + 1);
    if (j < r) reservoir[j] = i;
  }
  std::sort(reservoir.begin(), reservoir.end());
  std::vector<double> sample(r * dim);
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(rows.data() + reservoir[i] * dim, dim, sample.data() + i * dim);
  }
  out.values = kmeanspp(sample, rows, dim, n_c, rng);
  out.counts.assign(n_c, 0);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<std::size_t> labels;
  std::vector<double> dists;

  for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
    if (options.max_batches && out.batches >= options.max_batches) break;
    rng.shuffle(order);
    const std::vector<double> start = out.values;
    double sweep_inertia = 0.0;
    bool full_sweep = true;
    for (std::size_t b0 = 0; b0 < n; b0 += options.batch_size) {
      if (options.max_batches && out.batches >= options.max_batches) {
        full_sweep = false;
        break;
      }
      const std::size_t b1 = std::min(n, b0 + options.batch_size);
      labels.resize(b1 - b0);
      dists.resize(b1 - b0);
      for (std::size_t i = b0; i < b1; ++i) {
        std::tie(labels[i - b0], dists[i - b0]) =
            nearest(out.values, n_c, rows.data() + order[i] * dim, dim);
        sweep_inertia += dists[i - b0];
      }
      for (std::size_t i = b0; i < b1; ++i) {
        const std::size_t q = labels[i - b0];
        const double eta = 1.0 / static_cast<double>(++out.counts[q]);
        double* c = out.values.data() + q * dim;
        const double* x = rows.data() + order[i] * dim;
        for (std::size_t d = 0; d < dim; ++d) c[d] += eta * (x[d] - c[d]);
      }
      // A centroid that has never absorbed a point is moved onto the batch
      // point farthest from its own centroid.
      for (std::size_t q = 0; q < n_c; ++q) {
        if (out.counts[q] > 0) continue;
        std::size_t far = b0;
        for (std::size_t i = b0; i < b1; ++i) {
          if (dists[i - b0] > dists[far - b0]) far = i;
        }
        if (dists[far - b0] <= 0.0) continue;
        std::copy_n(rows.data() + order[far] * dim, dim, out.values.data() + q * dim);
        dists[far - b0] = 0.0;
      }
      ++out.batches;
    }
    if (!full_sweep) break;
    ++out.sweeps;
    out.inertia_history.push_back(sweep_inertia);
    double displacement = 0.0;
    for (std::size_t q = 0; q < n_c; ++q) {
      displacement += std::sqrt(sq_dist(start.data() + q * dim, out.values.data() + q * dim, dim));
    }
    if (displacement / static_cast<double>(n_c) < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

Centroids lloyd_reference(std::span<const double> rows, std::size_t dim, std::size_t n_c,
                          std::uint64_t seed, std::size_t max_iterations) {
  const std::size_t n = row_count(rows, dim);
  check_request(n_c, n);
  Centroids out;
  out.dim = dim;
  out.n_c = n_c = effective_n_c(out, rows, dim, n_c);
  Rng rng = Rng::derive(seed, 0xC1u);
  out.values = kmeanspp(rows, rows, dim, n_c, rng);

  std::vector<std::size_t> labels(n, n_c);
  std::vector<double> dists(n);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [q, d] = nearest(out.values, n_c, rows.data() + i * dim, dim);
      changed = changed || q != labels[i];
      labels[i] = q;
      dists[i] = d;
      total += d;
    }
    out.inertia_history.push_back(total);
    ++out.sweeps;
    if (!changed) {
      out.converged = true;
      break;
    }
    std::vector<double> sums(n_c * dim, 0.0);
    out.counts.assign(n_c, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++out.counts[labels[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[labels[i] * dim + d] += rows[i * dim + d];
    }
    for (std::size_t q = 0; q < n_c; ++q) {
      if (out.counts[q] == 0) {
        const auto far = static_cast<std::size_t>(
            std::max_element(dists.begin(), dists.end()) - dists.begin());
        std::copy_n(rows.data() + far * dim, dim, out.values.data() + q * dim);
        dists[far] = 0.0;
        labels[far] = q;
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) {
        out.values[q * dim + d] = sums[q * dim + d] / static_cast<double>(out.counts[q]);
      }
    }
  }
  out.counts.assign(n_c, 0);
  for (std::size_t q : labels) {
    if (q < n_c) ++out.counts[q];
  }
  return out;
}

std::size_t assign(const Centroids& centroids, std::span<const double> lad) {
  if (lad.size() != centroids.dim) {
    throw DimensionError("descriptor has " + std::to_string(lad.size()) +
                         " columns, centroids have " + std::to_string(centroids.dim));
  }
  return nearest(centroids.values, centroids.n_c, lad.data(), centroids.dim).first;
}

std::vector<std::size_t> assign_all(const Centroids& centroids, std::span<const double> rows) {
  const std::size_t n = row_count(rows, centroids.dim);
  std::vector<std::size_t> out(n);
  constexpr std::size_t chunk = 4096;
  parallel_for((n + chunk - 1) / chunk, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      out[i] = nearest(centroids.values, centroids.n_c, rows.data() + i * centroids.dim,
                       centroids.dim)
                   .first;
    }
  });
  return out;
}

double inertia(const Centroids& centroids, std::span<const double> rows) {
  const std::size_t n = row_count(rows, centroids.dim);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += nearest(centroids.values, centroids.n_c, rows.data() + i * centroids.dim,
                     centroids.dim)
                 .second;
  }
  return total;
}

}  // namespace ecladts
