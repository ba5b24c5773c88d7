#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecladts/io.hpp"
#include "ecladts/tensor.hpp"

namespace ecladts {

enum class Waveform { TriangularPulse, GaussianBumpUp, GaussianBumpDown, Background };

std::string to_string(Waveform kind);
Waveform waveform_from_string(const std::string& name);
// Samples of a primitive of the given kind, width and amplitude.
std::vector<double> waveform(Waveform kind, std::size_t width, double amplitude);

struct Primitive {
  std::string id;  // "p0", "p1", ...
  Waveform kind = Waveform::TriangularPulse;
  std::size_t channel = 0;
  std::size_t width = 1;  // timesteps; the series length for backgrounds
  double amplitude = 1.0;
  bool important = true;
};

// Binary mask over [channel][timestep], row-major.
using Mask = std::vector<std::uint8_t>;

struct Sample {
  std::size_t id = 0;
  Tensor x;  // [ch, w]
  int label = 0;
  std::vector<Mask> masks;  // one per primitive; empty for unannotated data
};

struct DatasetSpec {
  std::string name;
  std::size_t n = 0;
  std::size_t w = 0;
  std::size_t ch = 1;
  std::size_t num_classes = 2;
  std::vector<double> class_probs;
  std::vector<std::string> class_names;
  double noise_sigma = 0.0;
  json background = json::object();
  std::vector<Primitive> primitives;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(json& j, const DatasetSpec& spec);
void from_json(const json& j, DatasetSpec& spec);

struct Dataset {
  DatasetSpec spec;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool has_masks() const;
  // Stacked inputs [indices.size(), ch, w].
  Tensor batch(std::span<const std::size_t> indices) const;
  std::vector<int> labels(std::span<const std::size_t> indices) const;
  // Position of the sample with the given id.
  std::optional<std::size_t> find(std::size_t sample_id) const;
  // Content digest over spec, labels, values and masks.
  std::string fingerprint() const;
};

// Mask runs as [channel, start, length] triples.
json encode_mask_runs(const Mask& mask, std::size_t w);
Mask decode_mask_runs(const json& runs, std::size_t ch, std::size_t w);

enum class StorageFormat { Binary, Csv };

// Directory with meta.json plus data.bin (LE f64, [sample][channel][timestep])
// or samples/<id>.csv (rows = timesteps, columns = channels). A non-null
// `provenance` is stored verbatim in meta.json.
void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                  StorageFormat format = StorageFormat::Binary, const json& provenance = nullptr);
Dataset load_dataset(const std::filesystem::path& dir);

struct CsvSchema {
  std::size_t label_column = 0;
  std::size_t channels = 1;  // values per row = channels * w, channel blocks concatenated
  bool z_normalize = false;  // per series and channel
  std::vector<std::string> labels;  // admissible labels; empty = infer from file
};

// UCR-style text file: one series per row, label in `label_column`.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void export_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace ecladts
