#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecladts/concepts.hpp"
#include "ecladts/dataset.hpp"
#include "ecladts/io.hpp"
#include "ecladts/validation.hpp"

namespace ecladts {

struct RenderOptions {
  std::vector<std::size_t> sample_ids;  // empty: the first samples of the report
  std::size_t max_samples = 4;
  std::vector<std::size_t> concepts;    // empty: every concept
  std::vector<std::size_t> channels;    // empty: every channel
  // Predicted labels keyed by report sample order; empty: the report's own.
  std::vector<int> predicted;
  double cell_width = 180.0;
  double cell_height = 60.0;
};

// Concept rows (one row per displayed channel) by sample columns. Active
// mask runs are shaded; row labels carry signed importances and column
// headers the actual/predicted labels.
std::string render_report(const ConceptReport& report, const Dataset& data,
                          const RenderOptions& options = {});

// "%+.2f"
std::string format_importance(double v);

struct Quartiles {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Linear-interpolated quantiles of a non-empty sample.
Quartiles quartiles(std::vector<double> values);
void to_json(json& j, const Quartiles& q);

// Per-method RC/IC distributions of a run ledger. Throws when the rows mix
// datasets or models.
json summarize_ledger(const std::vector<LedgerRow>& rows);

}  // namespace ecladts
