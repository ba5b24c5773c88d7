#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecladts/dataset.hpp"
#include "ecladts/io.hpp"
#include "ecladts/model.hpp"

namespace ecladts {

// Label-preserving augmentations. All magnitudes zero means identity.
struct AugmentPolicy {
  double resize_range = 0.0;    // scale factor drawn from [1 - r, 1 + r]
  std::size_t warp_knots = 0;   // interior knots of the time warp
  double warp_sigma = 0.0;      // relative speed jitter per warp segment
  double noise_sigma = 0.0;     // additive Gaussian noise

  bool enabled() const {
    return resize_range > 0.0 || (warp_knots > 0 && warp_sigma > 0.0) || noise_sigma > 0.0;
  }
  void validate() const;
};

void to_json(json& j, const AugmentPolicy& p);
void from_json(const json& j, AugmentPolicy& p);

// Applies the policy to every series of batch [b, ch, w].
Tensor augment(const Tensor& batch, const AugmentPolicy& policy, std::uint64_t seed);

struct TrainConfig {
  double lr = 1e-5;
  double weight_decay = 0.01;
  std::size_t patience = 15;
  double plateau_factor = 0.1;
  std::size_t plateau_patience = 5;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 300;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;
  AugmentPolicy augment;

  void validate() const;
};

void to_json(json& j, const TrainConfig& c);
void from_json(const json& j, TrainConfig& c);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  double fraction = 0.8;
  std::uint64_t seed = 0;
};

void to_json(json& j, const Split& s);
void from_json(const json& j, Split& s);

// Seeded shuffled partition of [0, n). Throws if either side would be empty.
Split split(std::size_t n, double fraction, std::uint64_t seed);

struct EpochStats {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double train_accuracy = 0.0;
  double val_nll = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_val_nll = 0.0;
  double best_val_accuracy = 0.0;
  bool early_stopped = false;
  std::string checkpoint_path;
};

void to_json(json& j, const TrainReport& r);

struct Evaluation {
  double nll = 0.0;
  double accuracy = 0.0;
};

// Evaluation-mode NLL and accuracy over the given sample positions.
Evaluation evaluate(const Model& model, const Dataset& data, std::span<const std::size_t> indices,
                    std::size_t batch_size = 256);

struct TrainResult {
  Checkpoint checkpoint;
  TrainReport report;
};

// Adam with decoupled weight decay, LR reduced on validation-NLL plateaus,
// early stopping. Leaves `model` holding the best-validation weights.
TrainResult train(Model& model, const Dataset& data, const Split& split, const TrainConfig& config);

}  // namespace ecladts
