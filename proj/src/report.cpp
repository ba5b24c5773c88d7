#include "ecladts/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "ecladts/error.hpp"

namespace ecladts {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string class_name(const Dataset& data, int label) {
  const auto& names = data.spec.class_names;
  if (label >= 0 && static_cast<std::size_t>(label) < names.size()) return names[label];
  return std::to_string(label);
}

}  // namespace

std::string format_importance(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f", v);
  return buf;
}

std::string render_report(const ConceptReport& report, const Dataset& data,
                          const RenderOptions& options) {
  std::vector<std::size_t> columns;  // report sample positions
  if (options.sample_ids.empty()) {
    for (std::size_t i = 0; i < std::min(options.max_samples, report.samples.size()); ++i) {
      columns.push_back(i);
    }
  } else {
    for (std::size_t id : options.sample_ids) {
      const auto it = std::find_if(report.samples.begin(), report.samples.end(),
                                   [id](const SampleConcepts& s) { return s.id == id; });
      if (it == report.samples.end()) {
        throw InputError("sample " + std::to_string(id) + " is not in the concept report");
      }
      columns.push_back(static_cast<std::size_t>(it - report.samples.begin()));
    }
  }
  std::vector<std::size_t> concepts = options.concepts;
  if (concepts.empty()) {
    for (std::size_t c = 0; c < report.n_c; ++c) concepts.push_back(c);
  }
  std::vector<std::size_t> channels = options.channels;
  if (channels.empty()) {
    for (std::size_t p = 0; p < report.ch; ++p) channels.push_back(p);
  }
  for (std::size_t c : concepts) {
    if (c >= report.n_c) throw ValidationError("concept " + std::to_string(c) + " out of range");
  }
  for (std::size_t p : channels) {
    if (p >= report.ch) throw ValidationError("channel " + std::to_string(p) + " out of range");
  }
  if (!options.predicted.empty() && options.predicted.size() != report.samples.size()) {
    throw DimensionError("predicted labels do not cover the report samples");
  }

  const double cw = options.cell_width;
  const double chh = options.cell_height;
  const double left = 150.0;
  const double top = 40.0;
  const double pad = 4.0;
  const std::size_t rows = concepts.size() * channels.size();
  const double width = left + cw * static_cast<double>(columns.size()) + pad;
  const double height = top + chh * static_cast<double>(rows) + pad;
  const std::size_t w = report.w;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
         fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
  svg += "<style>text{font-family:monospace;font-size:11px}.span{fill:#f4a261;fill-opacity:0.45}"
         ".trace{fill:none;stroke:#264653;stroke-width:1}.frame{fill:none;stroke:#bbb}</style>\n";
  svg += "<text x=\"4\" y=\"14\">" + escape(to_string(report.method)) + " n_c=" +
         std::to_string(report.n_c) + "</text>\n";

  for (std::size_t col = 0; col < columns.size(); ++col) {
    const SampleConcepts& s = report.samples[columns[col]];
    const int pred = options.predicted.empty() ? s.predicted : options.predicted[columns[col]];
    svg += "<text class=\"header\" x=\"" + fmt(left + cw * static_cast<double>(col) + pad) +
           "\" y=\"32\">#" + std::to_string(s.id) + " " + escape(class_name(data, s.label)) + "/" +
           escape(class_name(data, pred)) + "</text>\n";
  }

  std::size_t row = 0;
  for (std::size_t c : concepts) {
    for (std::size_t p : channels) {
      const double y0 = top + chh * static_cast<double>(row);
      std::string label = "c" + std::to_string(c);
      if (report.ch > 1) label += " ch" + std::to_string(p);
      label += " " + format_importance(report.importance.at(c, p));
      svg += "<text class=\"row-label\" x=\"4\" y=\"" + fmt(y0 + chh / 2.0) + "\">" + label +
             "</text>\n";
      for (std::size_t col = 0; col < columns.size(); ++col) {
        const std::size_t si = columns[col];
        const double x0 = left + cw * static_cast<double>(col);
        svg += "<g class=\"cell\" data-concept=\"" + std::to_string(c) + "\" data-channel=\"" +
               std::to_string(p) + "\" data-sample=\"" + std::to_string(report.samples[si].id) +
               "\">\n";
        svg += "<rect class=\"frame\" x=\"" + fmt(x0 + 1) + "\" y=\"" + fmt(y0 + 1) +
               "\" width=\"" + fmt(cw - 2) + "\" height=\"" + fmt(chh - 2) + "\"/>\n";
        const auto mask = report.mask(si, c);
        for (std::size_t b = 0; b < w;) {
          if (!mask[b]) {
            ++b;
            continue;
          }
          std::size_t e = b;
          while (e < w && mask[e]) ++e;
          svg += "<rect class=\"span\" x=\"" +
                 fmt(x0 + 1 + (cw - 2) * static_cast<double>(b) / static_cast<double>(w)) +
                 "\" y=\"" + fmt(y0 + 1) + "\" width=\"" +
                 fmt((cw - 2) * static_cast<double>(e - b) / static_cast<double>(w)) +
                 "\" height=\"" + fmt(chh - 2) + "\"/>\n";
          b = e;
        }
        if (const auto pos = data.find(report.samples[si].id)) {
          const double* x = data.samples[*pos].x.data() + p * w;
          const auto [lo, hi] = std::minmax_element(x, x + w);
          const double span = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
          svg += "<polyline class=\"trace\" points=\"";
          for (std::size_t t = 0; t < w; ++t) {
            const double px = x0 + pad + (cw - 2 * pad) * static_cast<double>(t) /
                                             static_cast<double>(std::max<std::size_t>(1, w - 1));
            const double py = y0 + chh - pad - (chh - 2 * pad) * (x[t] - *lo) / span;
            if (t) svg += ' ';
            svg += fmt(px) + "," + fmt(py);
          }
          svg += "\"/>\n";
        }
        svg += "</g>\n";
      }
      ++row;
    }
  }
  svg += "</svg>\n";
  return svg;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw ValidationError("quartiles of an empty sample");
  std::sort(values.begin(), values.end());
  auto q = [&](double f) {
    const double pos = f * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), q(0.25), q(0.5), q(0.75), values.back()};
}

void to_json(json& j, const Quartiles& q) {
  j = json{{"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}};
}

json summarize_ledger(const std::vector<LedgerRow>& rows) {
  if (rows.empty()) throw ValidationError("no runs to summarize");
  for (const LedgerRow& r : rows) {
    if (r.dataset != rows.front().dataset) {
      throw InputError("runs mix datasets '" + rows.front().dataset + "' and '" + r.dataset + "'");
    }
    if (r.model != rows.front().model) {
      throw InputError("runs mix models '" + rows.front().model + "' and '" + r.model + "'");
    }
  }
  std::map<std::string, std::vector<const LedgerRow*>> by_method;
  for (const LedgerRow& r : rows) by_method[r.method].push_back(&r);
  json methods = json::object();
  for (const auto& [method, list] : by_method) {
    std::vector<double> rc;
    std::vector<double> ic;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> grid;
    std::size_t aligned = 0;
    for (const LedgerRow* r : list) {
      rc.push_back(r->rc);
      ic.push_back(r->ic);
      seeds.push_back(r->seed);
      grid.push_back(r->n_c);
      if (r->rc > kRcSentinel) ++aligned;
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    methods[method] = {{"runs", list.size()},
                       {"seeds", seeds},
                       {"n_c", grid},
                       {"aligned_runs", aligned},
                       {"rc", quartiles(rc)},
                       {"ic", quartiles(ic)}};
  }
  return {{"dataset", rows.front().dataset}, {"model", rows.front().model}, {"methods", methods}};
}

}  // namespace ecladts
