#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecladts/autodiff.hpp"
#include "ecladts/io.hpp"
#include "ecladts/tensor.hpp"

namespace ecladts {

// Architecture ids: "tiny-cnn" (plain conv stack), "mini-inception"
// (bottleneck + parallel kernels per block), "mini-resnet" (residual blocks).
//
// channels: per-block widths (filters per branch for mini-inception).
// kernel_sizes: per-block kernels for tiny-cnn and mini-resnet (a single
//   value is broadcast); the parallel branch kernels for mini-inception.
// strides: per-block strides (broadcast if single; ignored by mini-inception).
struct ModelSpec {
  std::string architecture = "tiny-cnn";
  std::vector<std::size_t> channels{8, 16, 32};
  std::vector<std::size_t> kernel_sizes{5};
  std::vector<std::size_t> strides{2};
  std::size_t in_channels = 1;
  std::size_t length = 256;
  std::size_t num_classes = 2;
  std::vector<std::string> probe_layers;  // empty: one per block

  // Architecture defaults for the given data geometry.
  static ModelSpec defaults(const std::string& architecture, std::size_t in_channels,
                            std::size_t length, std::size_t num_classes);
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

void to_json(json& j, const ModelSpec& spec);
void from_json(const json& j, ModelSpec& spec);

struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;  // false for batchnorm running statistics
};

// One stage of a conv/pool chain, for receptive field arithmetic.
struct ChainLayer {
  std::string name;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// RF <- RF + (k - 1) * prod(earlier strides), starting from 1.
std::size_t receptive_field(std::span<const ChainLayer> chain);

// Input span [begin, end) seen by position `index` of the last chain layer,
// before clamping to the series.
struct InputWindow {
  long begin = 0;
  long end = 0;
};
InputWindow receptive_window(std::span<const ChainLayer> chain, std::size_t index);

class Model {
 public:
  static Model build(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  // Named layers in depth order; the last is "logits".
  std::vector<std::string> layer_names() const;
  std::vector<std::string> default_probe_layers() const;
  std::vector<std::string> probe_layers() const;
  bool has_layer(const std::string& name) const;

  struct Forward {
    Var logits;
    std::map<std::string, Var> activations;
    std::vector<Var> parameters;  // index-aligned with parameters()
  };

  // Records the forward pass on `tape`. Training mode uses batch statistics
  // and updates the batchnorm running statistics. Parameters are recorded as
  // leaves requiring grad iff `parameter_grads`.
  Forward forward(Tape& tape, const Var& input, bool training,
                  std::span<const std::string> capture = {}, bool parameter_grads = false);
  // Evaluation-mode forward; never mutates the model.
  Forward forward(Tape& tape, const Var& input, std::span<const std::string> capture = {},
                  bool parameter_grads = false) const;

  // Evaluation-mode logits [batch, n_k] for input [batch, ch, w].
  Tensor logits(const Tensor& batch) const;
  // Evaluation-mode logits plus activations of the requested layers.
  std::pair<Tensor, std::map<std::string, Tensor>> forward_with_activations(
      const Tensor& batch, std::span<const std::string> layers) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(const std::string& name);
  const Parameter& parameter(const std::string& name) const;

  // Conv/pool chain from the input up to `layer`. Throws ValidationError for
  // layers not on such a chain (pooling heads, logits).
  std::vector<ChainLayer> chain_to(const std::string& layer) const;
  std::size_t receptive_field(const std::string& layer) const;

 private:
  Model() = default;
  Forward run(Tape& tape, const Var& input, bool training, std::span<const std::string> capture,
              bool parameter_grads, std::vector<Parameter>* mutable_params) const;
  void add_param(std::string name, Tensor value, bool trainable = true);

  ModelSpec spec_;
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

// Flat weight buffer with a name -> (offset, shape) manifest.
struct ManifestEntry {
  std::string name;
  std::size_t offset = 0;
  Shape shape;
  bool trainable = true;
};

struct Checkpoint {
  ModelSpec spec;
  std::vector<ManifestEntry> manifest;
  std::vector<double> weights;
  json metadata = json::object();

  static Checkpoint from_model(const Model& model, json metadata = json::object());
  Model to_model() const;
  // Throws InputError unless manifest entries tile the buffer exactly.
  void check_manifest() const;

  // 8-byte LE header length, JSON header, LE f64 payload.
  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace ecladts
