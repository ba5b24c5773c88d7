#pragma once

// Randomized property checks over masks, DST, association and the two
// scores. Shared by the unit tests (few cases) and the acceptance harness.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ecladts/concepts.hpp"
#include "ecladts/rng.hpp"
#include "ecladts/validation.hpp"

namespace ecladts::testing {

struct PropertyTally {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;
};

using PropertyResults = std::map<std::string, PropertyTally>;

inline Mask random_mask(Rng& rng, std::size_t n, double density) {
  Mask m(n);
  for (auto& v : m) v = rng.uniform() < density ? 1 : 0;
  return m;
}

inline PropertyResults run_property_suite(std::size_t cases, std::uint64_t seed) {
  PropertyResults out;
  Rng rng(seed);
  auto record = [&](const std::string& name, bool ok, std::size_t i) {
    PropertyTally& t = out[name];
    ++t.cases;
    if (!ok) {
      if (t.failures++ == 0) t.first_failure = "case " + std::to_string(i);
    }
  };

  for (std::size_t i = 0; i < cases; ++i) {
    // mask partition
    {
      const std::size_t dim = 1 + rng.below(6), k = 1 + rng.below(20), w = 1 + rng.below(64);
      Centroids c;
      c.dim = dim;
      c.n_c = k;
      for (std::size_t j = 0; j < k * dim; ++j) c.values.push_back(rng.normal());
      std::vector<double> rows(w * dim);
      for (double& v : rows) v = rng.normal();
      const auto masks = concept_masks(c, Descriptor{0, w, dim, rows});
      bool ok = masks.size() == k;
      for (std::size_t b = 0; ok && b < w; ++b) {
        int total = 0;
        for (const Mask& m : masks) total += m[b];
        ok = total == 1;
      }
      record("mask partition", ok, i);
    }
    // DST symmetry and self-distance
    {
      const std::size_t ch = 1 + rng.below(3), w = 2 + rng.below(60), n = 1 + rng.below(5);
      std::vector<Mask> a, b;
      for (std::size_t s = 0; s < n; ++s) {
        a.push_back(random_mask(rng, ch * w, rng.uniform() * 0.5));
        b.push_back(random_mask(rng, ch * w, rng.uniform() * 0.5));
      }
      const double ab = dst(a, b, ch, w), ba = dst(b, a, ch, w);
      record("dst symmetry", ab == ba && ab >= 0.0 && ab <= 1.0, i);
      for (Mask& m : a) {
        if (std::find(m.begin(), m.end(), 1) == m.end()) m[rng.below(m.size())] = 1;
      }
      record("dst(A,A) = 0", dst(a, a, ch, w) == 0.0, i);
    }
    // associate monotonicity and RC sign
    DstTable table;
    table.n_primitives = 1 + rng.below(4);
    table.n_c = 1 + rng.below(20);
    for (std::size_t j = 0; j < table.n_primitives * table.n_c; ++j) {
      table.values.push_back(0.5 * rng.uniform());
    }
    std::vector<bool> eligible;
    for (std::size_t p = 0; p < table.n_primitives; ++p) eligible.push_back(rng.below(4) != 0);
    {
      const double t1 = 0.3 * rng.uniform();
      const double t2 = t1 + 0.2 * rng.uniform();
      const Association lo = associate(table, eligible, t1);
      const Association hi = associate(table, eligible, t2);
      bool ok = true;
      for (std::size_t c = 0; c < table.n_c; ++c) {
        if (lo.primitive[c] && hi.primitive[c] != lo.primitive[c]) ok = false;
      }
      record("associate monotone", ok, i);
      const double rc = representation_correctness(associate(table, eligible), table);
      record("RC <= 0", rc <= 0.0, i);
    }
    // IC scale invariance
    {
      const Association assoc = associate(table, eligible);
      std::vector<double> imp(table.n_c), scaled(table.n_c);
      const double factor = std::exp(6.0 * rng.uniform() - 3.0);
      for (std::size_t c = 0; c < table.n_c; ++c) {
        imp[c] = rng.uniform() * 2.0 - 1.0;
        scaled[c] = imp[c] * factor;
      }
      const double a = importance_correctness(assoc, imp).value;
      const double b = importance_correctness(assoc, scaled).value;
      record("IC scale invariance", std::abs(a - b) <= 1e-12, i);
    }
  }
  return out;
}

}  // namespace ecladts::testing
