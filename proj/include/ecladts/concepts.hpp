#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecladts/clustering.hpp"
#include "ecladts/dataset.hpp"
#include "ecladts/io.hpp"
#include "ecladts/lads.hpp"
#include "ecladts/model.hpp"

namespace ecladts {

enum class Method { EcladTs, EcladVanilla, MultiVision };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// How a concept's base timestep mask relates to the input channels.
// Expanded: the concept is compared channel by channel through its expanded
// masks. Agnostic: the mask marks the same timesteps on every channel.
enum class MaskMode { ChannelExpanded, ChannelAgnostic };

// Base masks of every concept for one descriptor: n_c masks of length w,
// mask q marking the timesteps whose LAD is nearest to centroid q.
std::vector<Mask> concept_masks(const Centroids& centroids, const Descriptor& descriptor);

// [ch, w] mask holding `base` on channel p and zeros elsewhere.
Mask expand_mask(const Mask& base, std::size_t ch, std::size_t p);

// Frobenius norm of the pairwise logit difference matrix y 1^T - 1 y^T.
double wrapper_g(std::span<const double> y);

// d g(f(x)) / dx for every sample of batch [b, ch, w], evaluation mode.
// `sign` multiplies the wrapper (sign -1 is the sign-flip test).
Tensor input_gradients(const Model& model, const Tensor& batch, double sign = 1.0);

// R = G masked by the expanded masks of `base`: [ch, w].
std::vector<double> sensitivity(std::span<const double> gradient, const Mask& base,
                                std::size_t ch, std::size_t w);

enum class Aggregation { SignedSum, AbsoluteSum };

// Sum over timesteps of row p of R [ch, w]; AbsoluteSum is the vanilla 1-norm.
double channel_sensitivity(std::span<const double> r, std::size_t ch, std::size_t w,
                           std::size_t p, Aggregation mode = Aggregation::SignedSum);

struct ImportanceTable {
  std::size_t n_c = 0;
  std::size_t ch = 0;
  std::vector<double> values;      // I, [n_c, ch]
  std::vector<double> raw_means;   // r-hat, [n_c, ch]
  std::vector<std::size_t> counts; // samples containing each concept
  bool all_zero = false;

  double at(std::size_t c, std::size_t p) const { return values.at(c * ch + p); }
  // Channel whose importance has the largest magnitude (lowest index on ties).
  std::size_t scalar_channel(std::size_t c) const;
  double scalar(std::size_t c) const { return at(c, scalar_channel(c)); }
};

// Per-sample channel sensitivities r[s] ([n_c, ch]) and concept presence
// present[s] ([n_c]). Means run over the samples containing each concept;
// the table is scaled by its largest magnitude.
ImportanceTable importance(const std::vector<std::vector<double>>& r,
                           const std::vector<std::vector<std::uint8_t>>& present,
                           std::size_t n_c, std::size_t ch);

struct SampleConcepts {
  std::size_t id = 0;
  int label = 0;
  int predicted = 0;
  Mask masks;  // [n_c, w] base masks
};

struct ConceptReport {
  Method method = Method::EcladTs;
  MaskMode mask_mode = MaskMode::ChannelExpanded;
  std::size_t n_c = 0;
  std::size_t ch = 0;
  std::size_t w = 0;
  Centroids centroids;
  ImportanceTable importance;
  std::vector<SampleConcepts> samples;
  std::size_t excluded_samples = 0;
  bool degenerate = false;
  std::vector<std::string> warnings;
  json metadata = json::object();

  std::span<const std::uint8_t> mask(std::size_t sample, std::size_t c) const {
    return std::span<const std::uint8_t>(samples.at(sample).masks).subspan(c * w, w);
  }
};

// JSON document plus a sidecar binary centroid matrix next to it.
void save_concept_report(const std::filesystem::path& path, const ConceptReport& report);
ConceptReport load_concept_report(const std::filesystem::path& path);
std::filesystem::path centroid_sidecar(const std::filesystem::path& report_path);

struct ExtractionOptions {
  std::vector<std::string> probe_layers;  // empty: the model's default probes
  std::size_t batch_size = 64;
  double wrapper_sign = 1.0;
  std::size_t min_samples = 2560;
  bool standardize = false;
  KMeansOptions kmeans;  // n_c and seed are set per run
};

// Work shared by every n_c and by both ECLAD variants for one model and
// dataset: LADs, input gradients and predictions.
struct ConceptInputs {
  DescriptorSet lads;
  std::vector<double> gradients;  // [samples, ch, w]
  std::vector<std::uint8_t> finite;
  std::vector<int> predicted;
  std::vector<std::string> probe_layers;
  std::vector<std::string> warnings;
  std::size_t ch = 0;
  std::size_t w = 0;
};

ConceptInputs prepare_concept_inputs(const Model& model, const Dataset& data,
                                     const ExtractionOptions& options);

// Clustering, masks and importance for ECLAD-ts or the vanilla variant.
ConceptReport eclad_from_inputs(const ConceptInputs& inputs, const Dataset& data, Method method,
                                std::size_t n_c, std::uint64_t seed,
                                const ExtractionOptions& options);

ConceptReport eclad_ts_run(const Model& model, const Dataset& data,
                           const std::vector<std::string>& probe_layers, std::size_t n_c,
                           std::uint64_t seed, const ExtractionOptions& options = {});

struct MultiVisionOptions {
  std::string layer;  // empty: deepest probe layer
  double quantile = 0.99;
  std::size_t batch_size = 64;
  KMeansOptions kmeans;
};

// Input window [start, start + length) of a slice under position `index` of
// `chain`, shifted to lie inside [0, w). length = min(receptive field, w).
InputWindow slice_window(std::span<const ChainLayer> chain, std::size_t index, std::size_t w);

ConceptReport multivision_baseline(const Model& model, const Dataset& data, std::size_t n_c,
                                   std::uint64_t seed, const MultiVisionOptions& options = {});

}  // namespace ecladts
