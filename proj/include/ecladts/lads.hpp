#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecladts/dataset.hpp"
#include "ecladts/model.hpp"

namespace ecladts {

// Align-corners linear interpolation of activation [ch_l, w_l] to
// [ch_l, target_w]. Identity when w_l == target_w; broadcast when w_l == 1.
std::vector<double> upscale_linear(std::span<const double> activation, std::size_t ch_l,
                                   std::size_t w_l, std::size_t target_w);

// Columns [begin, end) of the descriptor contributed by one probe layer.
struct LayerRange {
  std::string layer;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// View of one sample's descriptor: a [w, ch*] row-major matrix whose rows
// are the local aggregated descriptors of each timestep.
struct Descriptor {
  std::size_t sample_id = 0;
  std::size_t w = 0;
  std::size_t dim = 0;
  std::span<const double> values;

  std::span<const double> row(std::size_t b) const { return values.subspan(b * dim, dim); }
};

// Descriptors of many samples stored back to back, so the pooled LAD matrix
// [samples * w, ch*] is a single contiguous buffer.
struct DescriptorSet {
  std::size_t w = 0;
  std::size_t dim = 0;
  std::vector<std::size_t> sample_ids;
  std::vector<LayerRange> provenance;
  std::vector<double> values;

  std::size_t size() const { return sample_ids.size(); }
  std::size_t rows() const { return sample_ids.size() * w; }
  Descriptor descriptor(std::size_t i) const;
  std::span<const double> lad(std::size_t row) const {
    return std::span<const double>(values).subspan(row * dim, dim);
  }
};

struct LadOptions {
  std::size_t batch_size = 64;
  // Z-score every descriptor column over the pool (off by default).
  bool standardize = false;
};

// Forward each sample once, capture the probe activations, upscale them to
// the input length and concatenate them in probe-layer order.
DescriptorSet extract_lads(const Model& model, const std::vector<std::string>& probe_layers,
                           const Dataset& data, std::span<const std::size_t> indices,
                           const LadOptions& options = {});

// manifest.json plus lads.bin (LE f64, [sample][timestep][column]).
void save_descriptor_cache(const std::filesystem::path& dir, const DescriptorSet& set);
DescriptorSet load_descriptor_cache(const std::filesystem::path& dir);

}  // namespace ecladts
