#include "ecladts/concepts.hpp"

#include <algorithm>
#include <cmath>

#include "ecladts/autodiff.hpp"
#include "ecladts/error.hpp"
#include "ecladts/ops.hpp"
#include "ecladts/parallel.hpp"

namespace ecladts {

std::string to_string(Method m) {
  switch (m) {
    case Method::EcladTs: return "eclad-ts";
    case Method::EcladVanilla: return "eclad-vanilla";
    case Method::MultiVision: return "multivision";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "eclad-ts") return Method::EcladTs;
  if (s == "eclad-vanilla") return Method::EcladVanilla;
  if (s == "multivision") return Method::MultiVision;
  throw UsageError("unknown method '" + s + "' (expected eclad-ts, eclad-vanilla or multivision)");
}

namespace {

std::string to_string(MaskMode m) {
  return m == MaskMode::ChannelExpanded ? "channel-expanded" : "channel-agnostic";
}

MaskMode mask_mode_from_string(const std::string& s) {
  if (s == "channel-expanded") return MaskMode::ChannelExpanded;
  if (s == "channel-agnostic") return MaskMode::ChannelAgnostic;
  throw InputError("unknown mask mode '" + s + "'");
}

int argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t k = logits.dim(1);
  const double* y = logits.data() + row * k;
  return static_cast<int>(std::max_element(y, y + k) - y);
}

std::vector<std::size_t> all_indices(const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace

std::vector<Mask> concept_masks(const Centroids& centroids, const Descriptor& descriptor) {
  if (descriptor.dim != centroids.dim) {
    throw DimensionError("descriptor has " + std::to_string(descriptor.dim) +
                         " columns, centroids have " + std::to_string(centroids.dim));
  }
  std::vector<Mask> masks(centroids.n_c, Mask(descriptor.w, 0));
  for (std::size_t b = 0; b < descriptor.w; ++b) masks[assign(centroids, descriptor.row(b))][b] = 1;
  return masks;
}

Mask expand_mask(const Mask& base, std::size_t ch, std::size_t p) {
  if (p >= ch) throw ValidationError("channel " + std::to_string(p) + " out of range");
  Mask out(ch * base.size(), 0);
  std::copy(base.begin(), base.end(), out.begin() + static_cast<std::ptrdiff_t>(p * base.size()));
  return out;
}

double wrapper_g(std::span<const double> y) {
  if (y.size() < 2) throw ValidationError("wrapper needs at least two logits");
  double s = 0.0;
  for (double a : y) {
    for (double b : y) s += (a - b) * (a - b);
  }
  return std::sqrt(s);
}

Tensor input_gradients(const Model& model, const Tensor& batch, double sign) {
  Tape tape;
  const Var x = tape.leaf(batch, true);
  const auto fwd = model.forward(tape, x);
  tape.backward(ops::logit_spread(fwd.logits, sign));
  if (const Tensor* g = x.grad()) return *g;
  return Tensor(batch.shape(), 0.0);
}

std::vector<double> sensitivity(std::span<const double> gradient, const Mask& base,
                                std::size_t ch, std::size_t w) {
  if (gradient.size() != ch * w || base.size() != w) {
    throw DimensionError("gradient/mask shape mismatch");
  }
  std::vector<double> r(ch * w);
  for (std::size_t p = 0; p < ch; ++p) {
    for (std::size_t b = 0; b < w; ++b) r[p * w + b] = base[b] ? gradient[p * w + b] : 0.0;
  }
  return r;
}

double channel_sensitivity(std::span<const double> r, std::size_t ch, std::size_t w,
                           std::size_t p, Aggregation mode) {
  if (p >= ch) throw ValidationError("channel " + std::to_string(p) + " out of range");
  if (r.size() != ch * w) throw DimensionError("sensitivity matrix shape mismatch");
  double s = 0.0;
  for (std::size_t b = 0; b < w; ++b) {
    s += mode == Aggregation::SignedSum ? r[p * w + b] : std::abs(r[p * w + b]);
  }
  return s;
}

std::size_t ImportanceTable::scalar_channel(std::size_t c) const {
  std::size_t best = 0;
  for (std::size_t p = 1; p < ch; ++p) {
    if (std::abs(at(c, p)) > std::abs(at(c, best))) best = p;
  }
  return best;
}

ImportanceTable importance(const std::vector<std::vector<double>>& r,
                           const std::vector<std::vector<std::uint8_t>>& present,
                           std::size_t n_c, std::size_t ch) {
  if (r.size() != present.size()) throw DimensionError("sensitivity/presence count mismatch");
  if (r.empty()) throw ValidationError("importance needs a non-empty evaluation set");
  ImportanceTable t;
  t.n_c = n_c;
  t.ch = ch;
  t.raw_means.assign(n_c * ch, 0.0);
  t.counts.assign(n_c, 0);
  for (std::size_t s = 0; s < r.size(); ++s) {
    if (r[s].size() != n_c * ch || present[s].size() != n_c) {
      throw DimensionError("per-sample sensitivity table has the wrong shape");
    }
    for (std::size_t c = 0; c < n_c; ++c) {
      if (!present[s][c]) continue;
      ++t.counts[c];
      for (std::size_t p = 0; p < ch; ++p) t.raw_means[c * ch + p] += r[s][c * ch + p];
    }
  }
  double max_abs = 0.0;
  for (std::size_t c = 0; c < n_c; ++c) {
    for (std::size_t p = 0; p < ch; ++p) {
      double& v = t.raw_means[c * ch + p];
      if (t.counts[c]) v /= static_cast<double>(t.counts[c]);
      max_abs = std::max(max_abs, std::abs(v));
    }
  }
  t.values.assign(n_c * ch, 0.0);
  t.all_zero = max_abs == 0.0;
  if (!t.all_zero) {
    for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = t.raw_means[i] / max_abs;
  }
  return t;
}

std::filesystem::path centroid_sidecar(const std::filesystem::path& report_path) {
  std::filesystem::path p = report_path;
  p.replace_extension(".centroids.bin");
  return p;
}

void save_concept_report(const std::filesystem::path& path, const ConceptReport& report) {
  std::vector<std::uint8_t> bin;
  append_f64_le(bin, report.centroids.values);
  const std::filesystem::path sidecar = centroid_sidecar(path);

  json table = json::array();
  json raw = json::array();
  json scalar = json::array();
  json scalar_channel = json::array();
  for (std::size_t c = 0; c < report.n_c; ++c) {
    json row = json::array();
    json raw_row = json::array();
    for (std::size_t p = 0; p < report.ch; ++p) {
      row.push_back(report.importance.at(c, p));
      raw_row.push_back(report.importance.raw_means.at(c * report.ch + p));
    }
    table.push_back(row);
    raw.push_back(raw_row);
    scalar.push_back(report.importance.scalar(c));
    scalar_channel.push_back(report.importance.scalar_channel(c));
  }

  json samples = json::array();
  for (const SampleConcepts& s : report.samples) {
    json runs = json::array();
    for (std::size_t c = 0; c < report.n_c; ++c) {
      const std::uint8_t* m = s.masks.data() + c * report.w;
      for (std::size_t b = 0; b < report.w;) {
        if (!m[b]) {
          ++b;
          continue;
        }
        std::size_t e = b;
        while (e < report.w && m[e]) ++e;
        runs.push_back({c, b, e - b});
        b = e;
      }
    }
    samples.push_back(
        {{"id", s.id}, {"label", s.label}, {"predicted", s.predicted}, {"runs", runs}});
  }

  const Centroids& k = report.centroids;
  json doc{{"format", "ecladts-concepts/1"},
           {"method", to_string(report.method)},
           {"mask_mode", to_string(report.mask_mode)},
           {"n_c", report.n_c},
           {"ch", report.ch},
           {"w", report.w},
           {"metadata", report.metadata},
           {"warnings", report.warnings},
           {"flags",
            {{"importance_all_zero", report.importance.all_zero},
             {"degenerate_receptive_field", report.degenerate},
             {"excluded_samples", report.excluded_samples}}},
           {"importance",
            {{"table", table},
             {"raw_means", raw},
             {"counts", report.importance.counts},
             {"scalar", scalar},
             {"scalar_channel", scalar_channel}}},
           {"centroids",
            {{"file", sidecar.filename().string()},
             {"sha256", sha256_hex(bin)},
             {"dim", k.dim},
             {"requested_n_c", k.requested_n_c},
             {"counts", k.counts},
             {"inertia_history", k.inertia_history},
             {"batches", k.batches},
             {"sweeps", k.sweeps},
             {"converged", k.converged}}},
           {"samples", samples}};
  write_bytes(sidecar, bin);
  write_json(path, doc);
}

ConceptReport load_concept_report(const std::filesystem::path& path) {
  const json doc = read_json(path);
  ConceptReport r;
  try {
    if (doc.at("format") != "ecladts-concepts/1") {
      throw InputError("'" + path.string() + "' is not a concept report");
    }
    r.method = method_from_string(doc.at("method").get<std::string>());
    r.mask_mode = mask_mode_from_string(doc.at("mask_mode").get<std::string>());
    r.n_c = doc.at("n_c").get<std::size_t>();
    r.ch = doc.at("ch").get<std::size_t>();
    r.w = doc.at("w").get<std::size_t>();
    r.metadata = doc.at("metadata");
    r.warnings = doc.at("warnings").get<std::vector<std::string>>();
    const json& flags = doc.at("flags");
    r.degenerate = flags.at("degenerate_receptive_field").get<bool>();
    r.excluded_samples = flags.at("excluded_samples").get<std::size_t>();

    const json& imp = doc.at("importance");
    r.importance.n_c = r.n_c;
    r.importance.ch = r.ch;
    r.importance.all_zero = flags.at("importance_all_zero").get<bool>();
    r.importance.counts = imp.at("counts").get<std::vector<std::size_t>>();
    for (const json& row : imp.at("table")) {
      for (const json& v : row) r.importance.values.push_back(v.get<double>());
    }
    for (const json& row : imp.at("raw_means")) {
      for (const json& v : row) r.importance.raw_means.push_back(v.get<double>());
    }
    if (r.importance.values.size() != r.n_c * r.ch) {
      throw InputError("importance table does not match n_c x ch");
    }

    const json& k = doc.at("centroids");
    r.centroids.n_c = r.n_c;
    r.centroids.dim = k.at("dim").get<std::size_t>();
    r.centroids.requested_n_c = k.at("requested_n_c").get<std::size_t>();
    r.centroids.counts = k.at("counts").get<std::vector<std::size_t>>();
    r.centroids.inertia_history = k.at("inertia_history").get<std::vector<double>>();
    r.centroids.batches = k.at("batches").get<std::size_t>();
    r.centroids.sweeps = k.at("sweeps").get<std::size_t>();
    r.centroids.converged = k.at("converged").get<bool>();
    const auto bin = read_bytes(path.parent_path() / k.at("file").get<std::string>());
    if (sha256_hex(bin) != k.at("sha256").get<std::string>()) {
      throw InputError("centroid sidecar does not match the hash recorded in '" +
                       path.string() + "'");
    }
    r.centroids.values = decode_f64_le(bin);
    if (r.centroids.values.size() != r.n_c * r.centroids.dim) {
      throw InputError("centroid sidecar has the wrong size");
    }

    for (const json& s : doc.at("samples")) {
      SampleConcepts sc;
      sc.id = s.at("id").get<std::size_t>();
      sc.label = s.at("label").get<int>();
      sc.predicted = s.at("predicted").get<int>();
      sc.masks.assign(r.n_c * r.w, 0);
      for (const json& run : s.at("runs")) {
        const auto c = run.at(0).get<std::size_t>();
        const auto start = run.at(1).get<std::size_t>();
        const auto len = run.at(2).get<std::size_t>();
        if (c >= r.n_c || start + len > r.w) {
          throw InputError("mask run out of range for sample " + std::to_string(sc.id));
        }
        std::fill_n(sc.masks.begin() + static_cast<std::ptrdiff_t>(c * r.w + start), len, 1);
      }
      r.samples.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    throw InputError("concept report '" + path.string() + "' malformed: " + e.what());
  }
  return r;
}

ConceptInputs prepare_concept_inputs(const Model& model, const Dataset& data,
                                     const ExtractionOptions& options) {
  if (data.size() == 0) throw ValidationError("concept extraction needs at least one sample");
  ConceptInputs in;
  in.probe_layers = options.probe_layers.empty() ? model.probe_layers() : options.probe_layers;
  in.ch = data.spec.ch;
  in.w = data.spec.w;
  if (data.size() < options.min_samples) {
    in.warnings.push_back("only " + std::to_string(data.size()) + " samples available (" +
                          std::to_string(options.min_samples) + " recommended)");
  }
  const auto indices = all_indices(data);
  LadOptions lad;
  lad.batch_size = options.batch_size;
  lad.standardize = options.standardize;
  in.lads = extract_lads(model, in.probe_layers, data, indices, lad);

  const std::size_t per = in.ch * in.w;
  in.gradients.assign(data.size() * per, 0.0);
  in.finite.assign(data.size(), 1);
  in.predicted.assign(data.size(), 0);
  const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
  const std::size_t n_batches = (data.size() + bs - 1) / bs;
  parallel_for(n_batches, [&](std::size_t bi) {
    const std::size_t start = bi * bs;
    const auto chunk =
        std::span<const std::size_t>(indices).subspan(start, std::min(bs, data.size() - start));
    const Tensor batch = data.batch(chunk);
    const Tensor logits = model.logits(batch);
    const Tensor g = input_gradients(model, batch, options.wrapper_sign);
    for (std::size_t s = 0; s < chunk.size(); ++s) {
      in.predicted[start + s] = argmax_row(logits, s);
      const double* src = g.data() + s * per;
      in.finite[start + s] = std::all_of(src, src + per, [](double v) { return std::isfinite(v); });
      std::copy_n(src, per, in.gradients.data() + (start + s) * per);
    }
  });
  return in;
}

ConceptReport eclad_from_inputs(const ConceptInputs& in, const Dataset& data, Method method,
                                std::size_t n_c, std::uint64_t seed,
                                const ExtractionOptions& options) {
  if (method == Method::MultiVision) {
    throw UsageError("eclad_from_inputs handles the ECLAD variants only");
  }
  KMeansOptions km = options.kmeans;
  km.n_c = n_c;
  km.seed = seed;

  ConceptReport report;
  report.method = method;
  report.mask_mode =
      method == Method::EcladTs ? MaskMode::ChannelExpanded : MaskMode::ChannelAgnostic;
  report.ch = in.ch;
  report.w = in.w;
  report.centroids = minibatch_kmeans_fit(in.lads.values, in.lads.dim, km);
  report.n_c = report.centroids.n_c;
  report.warnings = in.warnings;
  for (const std::string& warn : report.centroids.warnings) report.warnings.push_back(warn);

  const std::vector<std::size_t> labels = assign_all(report.centroids, in.lads.values);
  const Aggregation agg =
      method == Method::EcladTs ? Aggregation::SignedSum : Aggregation::AbsoluteSum;
  const std::size_t n = data.size();
  const std::size_t w = in.w;
  const std::size_t ch = in.ch;
  const std::size_t k = report.n_c;

  std::vector<std::vector<double>> r;
  std::vector<std::vector<std::uint8_t>> present;
  report.samples.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    SampleConcepts& sc = report.samples[s];
    sc.id = data.samples[s].id;
    sc.label = data.samples[s].label;
    sc.predicted = in.predicted[s];
    sc.masks.assign(k * w, 0);
    const std::size_t* lab = labels.data() + s * w;
    for (std::size_t b = 0; b < w; ++b) sc.masks[lab[b] * w + b] = 1;
    if (!in.finite[s]) {
      ++report.excluded_samples;
      continue;
    }
    const double* g = in.gradients.data() + s * ch * w;
    std::vector<double> rs(k * ch, 0.0);
    std::vector<std::uint8_t> ps(k, 0);
    for (std::size_t b = 0; b < w; ++b) {
      ps[lab[b]] = 1;
      for (std::size_t p = 0; p < ch; ++p) {
        const double v = g[p * w + b];
        rs[lab[b] * ch + p] += agg == Aggregation::SignedSum ? v : std::abs(v);
      }
    }
    r.push_back(std::move(rs));
    present.push_back(std::move(ps));
  }
  if (r.empty()) throw NumericalError("every sample produced a non-finite input gradient");
  if (report.excluded_samples) {
    report.warnings.push_back(std::to_string(report.excluded_samples) +
                              " samples excluded for non-finite gradients");
  }
  report.importance = importance(r, present, k, ch);
  if (report.importance.all_zero) report.warnings.push_back("all importance means are zero");

  report.metadata = {{"seed", seed},
                     {"n_c", k},
                     {"requested_n_c", n_c},
                     {"probe_layers", in.probe_layers},
                     {"descriptor_dim", in.lads.dim},
                     {"samples", n},
                     {"wrapper_sign", options.wrapper_sign},
                     {"standardize", options.standardize},
                     {"kmeans",
                      {{"batch_size", km.batch_size},
                       {"max_sweeps", km.max_sweeps},
                       {"max_batches", km.max_batches},
                       {"tolerance", km.tolerance}}}};
  return report;
}

ConceptReport eclad_ts_run(const Model& model, const Dataset& data,
                           const std::vector<std::string>& probe_layers, std::size_t n_c,
                           std::uint64_t seed, const ExtractionOptions& options) {
  ExtractionOptions opts = options;
  opts.probe_layers = probe_layers;
  const ConceptInputs in = prepare_concept_inputs(model, data, opts);
  return eclad_from_inputs(in, data, Method::EcladTs, n_c, seed, opts);
}

InputWindow slice_window(std::span<const ChainLayer> chain, std::size_t index, std::size_t w) {
  const InputWindow raw = receptive_window(chain, index);
  const long len = std::min<long>(raw.end - raw.begin, static_cast<long>(w));
  const long begin = std::clamp<long>(raw.begin, 0, static_cast<long>(w) - len);
  return {begin, begin + len};
}

ConceptReport multivision_baseline(const Model& model, const Dataset& data, std::size_t n_c,
                                   std::uint64_t seed, const MultiVisionOptions& options) {
  if (data.size() == 0) throw ValidationError("concept extraction needs at least one sample");
  if (!(options.quantile > 0.0 && options.quantile < 1.0)) {
    throw ValidationError("activation quantile must lie in (0, 1)");
  }
  if (options.batch_size == 0) throw ValidationError("batch size must be positive");
  const std::string layer =
      options.layer.empty() ? model.probe_layers().back() : options.layer;
  const auto chain = model.chain_to(layer);
  const std::size_t rf = receptive_field(chain);
  const std::size_t w = data.spec.w;
  const std::size_t ch = data.spec.ch;
  const std::size_t n = data.size();

  ConceptReport report;
  report.method = Method::MultiVision;
  report.mask_mode = MaskMode::ChannelAgnostic;
  report.ch = ch;
  report.w = w;
  report.degenerate = rf >= w;
  if (report.degenerate) {
    report.warnings.push_back("receptive field " + std::to_string(rf) +
                              " covers the whole series; every slice is the full input");
  }

  // Activations of the examined layer for every sample.
  const auto indices = all_indices(data);
  const std::vector<std::string> capture{layer};
  std::vector<Tensor> acts((n + options.batch_size - 1) / options.batch_size);
  parallel_for(acts.size(), [&](std::size_t bi) {
    const std::size_t start = bi * options.batch_size;
    const auto chunk = std::span<const std::size_t>(indices).subspan(
        start, std::min(options.batch_size, n - start));
    acts[bi] = model.forward_with_activations(data.batch(chunk), capture).second.at(layer);
  });
  const std::size_t ch_l = acts.front().dim(1);
  const std::size_t w_l = acts.front().dim(2);

  std::vector<double> all;
  all.reserve(n * ch_l * w_l);
  for (const Tensor& a : acts) all.insert(all.end(), a.values().begin(), a.values().end());
  // Linear-interpolated quantile of all activation values.
  std::vector<double> sorted = all;
  const double pos = options.quantile * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(lo), sorted.end());
  const double v_lo = sorted[lo];
  double threshold = v_lo;
  if (lo + 1 < sorted.size()) {
    const double v_hi = *std::min_element(sorted.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                          sorted.end());
    threshold = v_lo + (pos - static_cast<double>(lo)) * (v_hi - v_lo);
  }
  sorted.clear();
  sorted.shrink_to_fit();

  // Slices under highly active positions, in (sample, channel, position) order.
  struct SliceRef {
    std::size_t sample;
    long begin;
  };
  std::vector<SliceRef> refs;
  const long len = std::min<long>(static_cast<long>(rf), static_cast<long>(w));
  for (std::size_t s = 0; s < n; ++s) {
    const double* a = all.data() + s * ch_l * w_l;
    for (std::size_t c = 0; c < ch_l; ++c) {
      for (std::size_t t = 0; t < w_l; ++t) {
        if (a[c * w_l + t] > threshold) refs.push_back({s, slice_window(chain, t, w).begin});
      }
    }
  }
  if (refs.empty()) throw NumericalError("no activation exceeds the quantile threshold");
  const std::size_t dim = ch * static_cast<std::size_t>(len);
  std::vector<double> slices(refs.size() * dim);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const Tensor& x = data.samples[refs[i].sample].x;
    for (std::size_t p = 0; p < ch; ++p) {
      std::copy_n(x.data() + p * w + refs[i].begin, len,
                  slices.data() + i * dim + p * static_cast<std::size_t>(len));
    }
  }

  KMeansOptions km = options.kmeans;
  km.n_c = n_c;
  km.seed = seed;
  report.centroids = minibatch_kmeans_fit(slices, dim, km);
  report.n_c = report.centroids.n_c;
  for (const std::string& warn : report.centroids.warnings) report.warnings.push_back(warn);
  const std::size_t k = report.n_c;
  const std::vector<std::size_t> labels = assign_all(report.centroids, slices);

  report.samples.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    report.samples[s].id = data.samples[s].id;
    report.samples[s].label = data.samples[s].label;
    report.samples[s].masks.assign(k * w, 0);
  }
  const std::size_t n_k = data.spec.num_classes;
  std::vector<double> per_class(k * n_k, 0.0);
  std::vector<std::size_t> class_size(n_k, 0);
  for (const Sample& s : data.samples) ++class_size.at(static_cast<std::size_t>(s.label));
  for (std::size_t i = 0; i < refs.size(); ++i) {
    SampleConcepts& sc = report.samples[refs[i].sample];
    std::fill_n(sc.masks.begin() + static_cast<std::ptrdiff_t>(labels[i] * w) + refs[i].begin,
                len, 1);
    per_class[labels[i] * n_k + static_cast<std::size_t>(sc.label)] += 1.0;
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t y = 0; y < n_k; ++y) {
      if (class_size[y]) per_class[c * n_k + y] /= static_cast<double>(class_size[y]);
    }
  }

  // Importance: a concept's highest per-class frequency over the overall
  // highest frequency. It has no channel resolution, so every channel
  // carries the same value.
  std::vector<std::vector<double>> r(1, std::vector<double>(k * ch, 0.0));
  std::vector<std::vector<std::uint8_t>> present(1, std::vector<std::uint8_t>(k, 1));
  for (std::size_t c = 0; c < k; ++c) {
    const double f = *std::max_element(per_class.begin() + static_cast<std::ptrdiff_t>(c * n_k),
                                       per_class.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_k));
    for (std::size_t p = 0; p < ch; ++p) r[0][c * ch + p] = f;
  }
  report.importance = importance(r, present, k, ch);
  report.importance.counts.assign(k, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < k; ++c) {
      const auto m = report.mask(s, c);
      if (std::find(m.begin(), m.end(), 1) != m.end()) ++report.importance.counts[c];
    }
  }

  // Predictions for the report headers.
  parallel_for(acts.size(), [&](std::size_t bi) {
    const std::size_t start = bi * options.batch_size;
    const auto chunk = std::span<const std::size_t>(indices).subspan(
        start, std::min(options.batch_size, n - start));
    const Tensor logits = model.logits(data.batch(chunk));
    for (std::size_t s = 0; s < chunk.size(); ++s) {
      report.samples[start + s].predicted = argmax_row(logits, s);
    }
  });

  report.metadata = {{"seed", seed},
                     {"n_c", k},
                     {"requested_n_c", n_c},
                     {"layer", layer},
                     {"receptive_field", rf},
                     {"slice_length", len},
                     {"quantile", options.quantile},
                     {"threshold", threshold},
                     {"slices", refs.size()},
                     {"samples", n},
                     {"kmeans",
                      {{"batch_size", km.batch_size},
                       {"max_sweeps", km.max_sweeps},
                       {"max_batches", km.max_batches},
                       {"tolerance", km.tolerance}}}};
  return report;
}

}  // namespace ecladts
