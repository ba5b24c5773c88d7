#include "ecladts/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ecladts/error.hpp"

namespace ecladts {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Distance from every timestep to the nearest active timestep of `row`.
void nearest_active(const std::uint8_t* row, std::size_t w, std::vector<std::size_t>& out) {
  out.assign(w, kNone);
  std::size_t last = kNone;
  for (std::size_t t = 0; t < w; ++t) {
    if (row[t]) last = t;
    if (last != kNone) out[t] = t - last;
  }
  last = kNone;
  for (std::size_t t = w; t-- > 0;) {
    if (row[t]) last = t;
    if (last != kNone) out[t] = std::min(out[t], last - t);
  }
}

bool any(std::span<const std::uint8_t> m) {
  return std::find_if(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; }) != m.end();
}

void check_shape(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                 std::size_t ch, std::size_t w) {
  if (w == 0 || a.size() != ch * w || b.size() != ch * w) {
    throw DimensionError("masks must both be [" + std::to_string(ch) + ", " + std::to_string(w) +
                         "]");
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\n\"") != std::string::npos) {
    throw ValidationError("ledger field '" + s + "' contains a comma, quote or newline");
  }
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double directed_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                         std::size_t ch, std::size_t w) {
  check_shape(a, b, ch, w);
  std::vector<std::size_t> near;
  double total = 0.0;
  std::size_t cells = 0;
  for (std::size_t p = 0; p < ch; ++p) {
    const std::uint8_t* ra = a.data() + p * w;
    if (!any(std::span<const std::uint8_t>(ra, w))) continue;
    nearest_active(b.data() + p * w, w, near);
    for (std::size_t t = 0; t < w; ++t) {
      if (!ra[t]) continue;
      ++cells;
      total += near[t] == kNone ? 1.0 : static_cast<double>(near[t]) / static_cast<double>(w);
    }
  }
  if (cells == 0) throw ValidationError("directed distance from an empty mask is undefined");
  return total / static_cast<double>(cells);
}

double sample_dst(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                  std::size_t ch, std::size_t w) {
  check_shape(a, b, ch, w);
  if (!any(a) || !any(b)) return kMaxPenalty;
  return (directed_distance(a, b, ch, w) + directed_distance(b, a, ch, w)) / 2.0;
}

double dst(const std::vector<Mask>& a, const std::vector<Mask>& b, std::size_t ch, std::size_t w) {
  if (a.size() != b.size()) throw DimensionError("mask families cover different sample counts");
  if (a.empty()) throw ValidationError("distance over an empty evaluation set");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += sample_dst(a[i], b[i], ch, w);
  return total / static_cast<double>(a.size());
}

std::size_t Association::aligned_count() const {
  return static_cast<std::size_t>(
      std::count_if(primitive.begin(), primitive.end(), [](const auto& p) { return p.has_value(); }));
}

Association associate(const DstTable& table, const std::vector<bool>& eligible, double threshold) {
  if (eligible.size() != table.n_primitives) {
    throw DimensionError("eligibility flags do not match the primitive count");
  }
  Association a;
  a.threshold = threshold;
  a.primitive.assign(table.n_c, std::nullopt);
  for (std::size_t c = 0; c < table.n_c; ++c) {
    std::optional<std::size_t> best;
    for (std::size_t p = 0; p < table.n_primitives; ++p) {
      if (!eligible[p]) continue;
      if (!best || table.at(p, c) < table.at(*best, c)) best = p;
    }
    if (best && table.at(*best, c) <= threshold) a.primitive[c] = best;
  }
  return a;
}

double representation_correctness(const Association& association, const DstTable& table) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < association.primitive.size(); ++c) {
    if (!association.primitive[c]) continue;
    total -= table.at(*association.primitive[c], c);
    ++n;
  }
  return n ? total / static_cast<double>(n) : kRcSentinel;
}

ImportanceCorrectness importance_correctness(const Association& association,
                                             std::span<const double> importances) {
  if (importances.size() != association.primitive.size()) {
    throw DimensionError("importance count does not match the concept count");
  }
  double max_abs = 0.0;
  for (double v : importances) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0.0) return {0.0, true};
  double aligned = 0.0;
  double unaligned = 0.0;
  std::size_t n_a = 0;
  std::size_t n_u = 0;
  for (std::size_t c = 0; c < importances.size(); ++c) {
    if (association.primitive[c]) {
      aligned += std::abs(importances[c]);
      ++n_a;
    } else {
      unaligned += std::abs(importances[c]);
      ++n_u;
    }
  }
  const double mean_a = n_a ? aligned / static_cast<double>(n_a) : 0.0;
  const double mean_u = n_u ? unaligned / static_cast<double>(n_u) : 0.0;
  return {(mean_a - mean_u) / max_abs, false};
}

void to_json(json& j, const AlignmentReport& r) {
  json table = json::array();
  for (std::size_t p = 0; p < r.dst.n_primitives; ++p) {
    json row = json::array();
    for (std::size_t c = 0; c < r.dst.n_c; ++c) row.push_back(r.dst.at(p, c));
    table.push_back(row);
  }
  json assoc = json::array();
  for (const auto& p : r.association.primitive) {
    assoc.push_back(p ? json(r.primitive_ids.at(*p)) : json(nullptr));
  }
  j = json{{"format", "ecladts-alignment/1"},
           {"method", r.method},
           {"n_c", r.n_c},
           {"samples", r.samples},
           {"primitives", r.primitive_ids},
           {"eligible", r.eligible},
           {"dst", table},
           {"threshold", r.association.threshold},
           {"association", assoc},
           {"aligned", r.association.aligned_count()},
           {"importances", r.importances},
           {"rc", r.rc},
           {"ic", r.ic.value},
           {"flags", {{"rc_sentinel", r.rc_sentinel}, {"ic_degenerate", r.ic.degenerate}}},
           {"warnings", r.warnings},
           {"metadata", r.metadata}};
}

AlignmentReport validate_run(const ConceptReport& report, const Dataset& data) {
  if (!data.has_masks()) {
    throw UsageError("dataset '" + data.spec.name + "' carries no primitive masks to validate against");
  }
  if (report.w != data.spec.w || report.ch != data.spec.ch) {
    throw DimensionError("concept report is for [" + std::to_string(report.ch) + ", " +
                         std::to_string(report.w) + "] series, dataset has [" +
                         std::to_string(data.spec.ch) + ", " + std::to_string(data.spec.w) + "]");
  }
  const std::size_t ch = report.ch;
  const std::size_t w = report.w;
  AlignmentReport out;
  out.method = to_string(report.method);
  out.n_c = report.n_c;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (report index, dataset index)
  for (std::size_t i = 0; i < report.samples.size(); ++i) {
    if (const auto pos = data.find(report.samples[i].id)) pairs.emplace_back(i, *pos);
  }
  if (pairs.empty()) throw InputError("concept report and dataset share no sample ids");
  if (pairs.size() < report.samples.size()) {
    out.warnings.push_back(std::to_string(report.samples.size() - pairs.size()) +
                           " report samples are missing from the dataset and were skipped");
  }
  out.samples = pairs.size();

  const auto& prims = data.spec.primitives;
  out.dst.n_primitives = prims.size();
  out.dst.n_c = report.n_c;
  out.dst.values.assign(prims.size() * report.n_c, 0.0);
  for (std::size_t q = 0; q < prims.size(); ++q) {
    out.primitive_ids.push_back(prims[q].id);
    out.eligible.push_back(prims[q].important);
  }

  // A primitive is scored on the samples that contain it.
  Mask cells(ch * w);
  for (std::size_t q = 0; q < prims.size(); ++q) {
    std::vector<std::pair<std::size_t, std::size_t>> present;
    for (const auto& pr : pairs) {
      if (any(data.samples[pr.second].masks.at(q))) present.push_back(pr);
    }
    if (present.empty()) {
      out.warnings.push_back("primitive " + prims[q].id + " occurs in no evaluated sample");
      for (std::size_t c = 0; c < report.n_c; ++c) out.dst.values[q * report.n_c + c] = kMaxPenalty;
      continue;
    }
    for (std::size_t c = 0; c < report.n_c; ++c) {
      double total = 0.0;
      for (const auto& [ri, di] : present) {
        const auto base = report.mask(ri, c);
        std::fill(cells.begin(), cells.end(), 0);
        if (report.mask_mode == MaskMode::ChannelExpanded) {
          std::copy(base.begin(), base.end(), cells.begin() + static_cast<std::ptrdiff_t>(prims[q].channel * w));
        } else {
          for (std::size_t p = 0; p < ch; ++p) {
            std::copy(base.begin(), base.end(), cells.begin() + static_cast<std::ptrdiff_t>(p * w));
          }
        }
        total += sample_dst(cells, data.samples[di].masks.at(q), ch, w);
      }
      out.dst.values[q * report.n_c + c] = total / static_cast<double>(present.size());
    }
  }

  out.association = associate(out.dst, out.eligible);
  out.rc = representation_correctness(out.association, out.dst);
  out.rc_sentinel = out.association.aligned_count() == 0;
  for (std::size_t c = 0; c < report.n_c; ++c) out.importances.push_back(report.importance.scalar(c));
  out.ic = importance_correctness(out.association, out.importances);
  if (out.ic.degenerate) out.warnings.push_back("every concept importance is zero; IC set to 0");
  return out;
}

void append_ledger(const std::filesystem::path& csv, const LedgerRow& row) {
  const bool fresh = !std::filesystem::exists(csv);
  if (fresh && csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
  std::ofstream out(csv, std::ios::app | std::ios::binary);
  if (!out) throw InputError("cannot open ledger '" + csv.string() + "'");
  if (fresh) out << "dataset,model,method,seed,n_c,rc,ic\n";
  out << csv_field(row.dataset) << ',' << csv_field(row.model) << ',' << csv_field(row.method)
      << ',' << row.seed << ',' << row.n_c << ',' << format_double(row.rc) << ','
      << format_double(row.ic) << '\n';
}

std::vector<LedgerRow> read_ledger(const std::filesystem::path& csv) {
  std::istringstream in(read_text(csv));
  std::string line;
  std::vector<LedgerRow> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) {
      throw InputError("ledger '" + csv.string() + "' line " + std::to_string(lineno) +
                       " has " + std::to_string(f.size()) + " fields, expected 7");
    }
    try {
      rows.push_back({f[0], f[1], f[2], std::stoull(f[3]), std::stoull(f[4]), std::stod(f[5]),
                      std::stod(f[6])});
    } catch (const std::exception&) {
      throw InputError("ledger '" + csv.string() + "' line " + std::to_string(lineno) +
                       " has a non-numeric field");
    }
  }
  return rows;
}

}  // namespace ecladts
