#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecladts/concepts.hpp"
#include "ecladts/dataset.hpp"
#include "ecladts/io.hpp"

namespace ecladts {

inline constexpr double kMaxPenalty = 0.5;
inline constexpr double kAlignThreshold = 0.2 * kMaxPenalty;
inline constexpr double kRcSentinel = -0.4 * kMaxPenalty;

// Mean over active cells of `a` of the distance, in timesteps divided by w,
// to the nearest active cell of `b` on the same channel. A cell whose
// channel has no active cell in `b` counts as distance 1. Masks are [ch, w];
// `a` must be non-empty.
double directed_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                         std::size_t ch, std::size_t w);

// (d(a->b) + d(b->a)) / 2, or the worst case 0.5 when either mask is empty.
double sample_dst(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                  std::size_t ch, std::size_t w);

// Mean of sample_dst over paired mask families.
double dst(const std::vector<Mask>& a, const std::vector<Mask>& b, std::size_t ch, std::size_t w);

struct DstTable {
  std::size_t n_primitives = 0;
  std::size_t n_c = 0;
  std::vector<double> values;  // [primitive, concept]

  double at(std::size_t p, std::size_t c) const { return values.at(p * n_c + c); }
};

// Concept -> primitive map; nullopt marks an unaligned concept.
struct Association {
  std::vector<std::optional<std::size_t>> primitive;
  double threshold = kAlignThreshold;

  std::size_t aligned_count() const;
};

// Each concept goes to its nearest eligible primitive (lowest id on ties)
// when that distance is within the threshold.
Association associate(const DstTable& table, const std::vector<bool>& eligible,
                      double threshold = kAlignThreshold);

// Mean of -DST over aligned concepts; the sentinel when none align.
double representation_correctness(const Association& association, const DstTable& table);

struct ImportanceCorrectness {
  double value = 0.0;
  bool degenerate = false;  // every importance is zero
};

// (mean aligned - mean unaligned) / max, on importance magnitudes.
ImportanceCorrectness importance_correctness(const Association& association,
                                             std::span<const double> importances);

struct AlignmentReport {
  std::string method;
  std::size_t n_c = 0;
  std::vector<std::string> primitive_ids;
  std::vector<bool> eligible;
  DstTable dst;
  Association association;
  double rc = kRcSentinel;
  bool rc_sentinel = true;
  ImportanceCorrectness ic;
  std::vector<double> importances;
  std::size_t samples = 0;
  std::vector<std::string> warnings;
  json metadata = json::object();
};

void to_json(json& j, const AlignmentReport& r);

// Builds the concept-primitive distance table over the samples shared by the
// report and the dataset and scores the run.
AlignmentReport validate_run(const ConceptReport& report, const Dataset& data);

struct LedgerRow {
  std::string dataset;
  std::string model;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t n_c = 0;
  double rc = 0.0;
  double ic = 0.0;
};

// Appends one row, writing the header when the file is new.
void append_ledger(const std::filesystem::path& csv, const LedgerRow& row);
std::vector<LedgerRow> read_ledger(const std::filesystem::path& csv);

}  // namespace ecladts
