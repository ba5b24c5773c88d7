#include "ecladts/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecladts/error.hpp"
#include "ecladts/lads.hpp"
#include "ecladts/ops.hpp"
#include "ecladts/optim.hpp"
#include "ecladts/rng.hpp"

namespace ecladts {

void AugmentPolicy::validate() const {
  if (resize_range < 0.0 || warp_sigma < 0.0 || noise_sigma < 0.0) {
    throw ValidationError("augmentation magnitudes must be non-negative");
  }
  if (resize_range >= 1.0) throw ValidationError("resize_range must be < 1");
}

void to_json(json& j, const AugmentPolicy& p) {
  j = json{{"resize_range", p.resize_range},
           {"warp_knots", p.warp_knots},
           {"warp_sigma", p.warp_sigma},
           {"noise_sigma", p.noise_sigma}};
}

void from_json(const json& j, AugmentPolicy& p) {
  p.resize_range = j.value("resize_range", 0.0);
  p.warp_knots = j.value("warp_knots", std::size_t{0});
  p.warp_sigma = j.value("warp_sigma", 0.0);
  p.noise_sigma = j.value("noise_sigma", 0.0);
}

namespace {

// Evaluates series at fractional positions by linear interpolation.
double sample_at(const double* row, std::size_t w, double pos) {
  if (pos <= 0.0) return row[0];
  if (pos >= static_cast<double>(w - 1)) return row[w - 1];
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  return row[lo] * (1.0 - frac) + row[lo + 1] * frac;
}

void time_warp(std::vector<double>& x, std::size_t ch, std::size_t w, std::size_t knots,
               double sigma, Rng& rng) {
  if (w < 2) return;
  // Positive speeds per segment; their normalized cumulative sum is a
  // monotone map of [0, 1] onto itself with both endpoints pinned.
  const std::size_t segments = knots + 1;
  std::vector<double> cum(segments + 1, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    const double speed = std::max(0.1, 1.0 + rng.normal(0.0, sigma));
    cum[s + 1] = cum[s] + speed;
  }
  for (double& c : cum) c /= cum.back();
  for (std::size_t s = 0; s < segments; ++s) {
    if (!(cum[s + 1] > cum[s])) throw Error("time warp produced a non-monotone map");
  }
  std::vector<double> warped(x.size());
  for (std::size_t t = 0; t < w; ++t) {
    const double u = static_cast<double>(t) / static_cast<double>(w - 1);
    const double seg_pos = u * static_cast<double>(segments);
    const auto s = std::min(static_cast<std::size_t>(seg_pos), segments - 1);
    const double frac = seg_pos - static_cast<double>(s);
    const double tau = cum[s] + frac * (cum[s + 1] - cum[s]);
    for (std::size_t c = 0; c < ch; ++c) {
      warped[c * w + t] = sample_at(x.data() + c * w, w, tau * static_cast<double>(w - 1));
    }
  }
  x.swap(warped);
}

}  // namespace

Tensor augment(const Tensor& batch, const AugmentPolicy& policy, std::uint64_t seed) {
  policy.validate();
  if (!policy.enabled()) return batch;
  const std::size_t b = batch.dim(0), ch = batch.dim(1), w = batch.dim(2);
  Tensor out(batch.shape());
  for (std::size_t i = 0; i < b; ++i) {
    Rng rng = Rng::derive(seed, i);
    std::vector<double> x(batch.data() + i * ch * w, batch.data() + (i + 1) * ch * w);
    if (policy.resize_range > 0.0) {
      const double factor = rng.uniform(1.0 - policy.resize_range, 1.0 + policy.resize_range);
      const auto scaled =
          std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(factor * static_cast<double>(w))));
      x = upscale_linear(upscale_linear(x, ch, w, scaled), ch, scaled, w);
    }
    if (policy.warp_knots > 0 && policy.warp_sigma > 0.0) {
      time_warp(x, ch, w, policy.warp_knots, policy.warp_sigma, rng);
    }
    if (policy.noise_sigma > 0.0) {
      for (double& v : x) v += rng.normal(0.0, policy.noise_sigma);
    }
    std::copy(x.begin(), x.end(), out.data() + i * ch * w);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ValidationError("split fraction must lie in (0, 1)");
  }
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
    throw ValidationError("plateau factor must lie in (0, 1)");
  }
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
  augment.validate();
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.lr},
           {"weight_decay", c.weight_decay},
           {"patience", c.patience},
           {"plateau_factor", c.plateau_factor},
           {"plateau_patience", c.plateau_patience},
           {"batch_size", c.batch_size},
           {"max_epochs", c.max_epochs},
           {"split_fraction", c.split_fraction},
           {"seed", c.seed},
           {"augment", c.augment}};
}

void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d;
  c.lr = j.value("lr", d.lr);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.patience = j.value("patience", d.patience);
  c.plateau_factor = j.value("plateau_factor", d.plateau_factor);
  c.plateau_patience = j.value("plateau_patience", d.plateau_patience);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.split_fraction = j.value("split_fraction", d.split_fraction);
  c.seed = j.value("seed", d.seed);
  c.augment = j.value("augment", d.augment);
}

void to_json(json& j, const Split& s) {
  j = json{{"fraction", s.fraction}, {"seed", s.seed}, {"train", s.train}, {"val", s.val}};
}

void from_json(const json& j, Split& s) {
  s.fraction = j.at("fraction").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train = j.at("train").get<std::vector<std::size_t>>();
  s.val = j.at("val").get<std::vector<std::size_t>>();
}

Split split(std::size_t n, double fraction, std::uint64_t seed) {
  if (n == 0) throw ValidationError("cannot split an empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw ValidationError("split fraction " + std::to_string(fraction) + " of " +
                          std::to_string(n) + " samples leaves an empty partition");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::derive(seed, 0x5b11);
  rng.shuffle(order);
  Split s;
  s.fraction = fraction;
  s.seed = seed;
  s.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  s.val.assign(order.begin() + static_cast<long>(n_train), order.end());
  return s;
}

void to_json(json& j, const TrainReport& r) {
  json epochs = json::array();
  for (const EpochStats& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_nll", e.train_nll},
                      {"train_accuracy", e.train_accuracy},
                      {"val_nll", e.val_nll},
                      {"val_accuracy", e.val_accuracy},
                      {"lr", e.lr}});
  }
  j = json{{"epochs", epochs},
           {"best_epoch", r.best_epoch},
           {"best_val_nll", r.best_val_nll},
           {"best_val_accuracy", r.best_val_accuracy},
           {"early_stopped", r.early_stopped},
           {"checkpoint", r.checkpoint_path}};
}

namespace {

std::size_t count_correct(const Tensor& logits, std::span<const int> labels) {
  const std::size_t k = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double* row = logits.data() + b * k;
    const auto pred = static_cast<int>(std::max_element(row, row + k) - row);
    if (pred == labels[b]) ++correct;
  }
  return correct;
}

}  // namespace

Evaluation evaluate(const Model& model, const Dataset& data, std::span<const std::size_t> indices,
                    std::size_t batch_size) {
  Evaluation ev;
  if (indices.empty()) return ev;
  double nll_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const auto chunk = indices.subspan(start, std::min(batch_size, indices.size() - start));
    const auto labels = data.labels(chunk);
    Tape tape;
    auto fwd = model.forward(tape, tape.leaf(data.batch(chunk)));
    const double nll = ops::softmax_nll(fwd.logits, labels).value().item();
    nll_sum += nll * static_cast<double>(chunk.size());
    correct += count_correct(fwd.logits.value(), labels);
  }
  ev.nll = nll_sum / static_cast<double>(indices.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  return ev;
}

TrainResult train(Model& model, const Dataset& data, const Split& split, const TrainConfig& config) {
  config.validate();
  if (split.train.empty() || split.val.empty()) throw ValidationError("split has an empty side");
  for (const Sample& s : data.samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= model.spec().num_classes) {
      throw ValidationError("sample " + std::to_string(s.id) + " label " + std::to_string(s.label) +
                            " outside the model's class range");
    }
  }

  std::vector<Tensor*> trainable;
  std::vector<std::size_t> trainable_index;
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    if (model.parameters()[i].trainable) {
      trainable.push_back(&model.parameters()[i].value);
      trainable_index.push_back(i);
    }
  }
  AdamState state = AdamState::zeros_like(trainable);
  AdamHyper hyper;
  hyper.lr = config.lr;
  hyper.weight_decay = config.weight_decay;

  TrainReport report;
  std::vector<Parameter> best_params = model.parameters();
  double best_val = std::numeric_limits<double>::infinity();
  double plateau_best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t plateau_bad = 0;

  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng = Rng::derive(config.seed, 0x10000 + epoch);
    shuffle_rng.shuffle(order);
    double nll_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::span<const std::size_t> chunk(
          order.data() + start, std::min(config.batch_size, order.size() - start));
      Tensor inputs = data.batch(chunk);
      if (config.augment.enabled()) {
        inputs = augment(inputs, config.augment,
                         Rng::derive(config.seed, (epoch << 20) + batch_no).next());
      }
      const auto labels = data.labels(chunk);
      Tape tape;
      auto fwd = model.forward(tape, tape.leaf(std::move(inputs)), true, {}, true);
      Var loss = ops::softmax_nll(fwd.logits, labels);
      const double loss_value = loss.value().item();
      if (!std::isfinite(loss_value)) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_no) + ": NLL is not finite");
      }
      tape.backward(loss);
      std::vector<const Tensor*> grads;
      grads.reserve(trainable_index.size());
      for (std::size_t i : trainable_index) grads.push_back(fwd.parameters[i].grad());
      adam_step(trainable, grads, state, hyper);
      nll_sum += loss_value * static_cast<double>(chunk.size());
      correct += count_correct(fwd.logits.value(), labels);
    }

    const Evaluation val = evaluate(model, data, split.val);
    if (!std::isfinite(val.nll)) {
      throw NumericalError("validation NLL is not finite at epoch " + std::to_string(epoch));
    }
    EpochStats stats{epoch,
                     nll_sum / static_cast<double>(order.size()),
                     static_cast<double>(correct) / static_cast<double>(order.size()),
                     val.nll,
                     val.accuracy,
                     hyper.lr};
    report.epochs.push_back(stats);

    if (val.nll < best_val) {
      best_val = val.nll;
      best_params = model.parameters();
      report.best_epoch = epoch;
      report.best_val_nll = val.nll;
      report.best_val_accuracy = val.accuracy;
      since_best = 0;
    } else {
      ++since_best;
    }

    // Plateau scheduler with a small relative threshold on improvement.
    if (val.nll < plateau_best * (1.0 - 1e-4)) {
      plateau_best = val.nll;
      plateau_bad = 0;
    } else if (++plateau_bad >= config.plateau_patience) {
      hyper.lr *= config.plateau_factor;
      plateau_bad = 0;
    }

    if (since_best >= config.patience) {
      report.early_stopped = true;
      break;
    }
  }

  model.parameters() = std::move(best_params);
  json meta{{"seed", config.seed},
            {"epochs", report.epochs.size()},
            {"best_epoch", report.best_epoch},
            {"best_val_nll", report.best_val_nll},
            {"best_val_accuracy", report.best_val_accuracy},
            {"train_config", config}};
  return TrainResult{Checkpoint::from_model(model, std::move(meta)), std::move(report)};
}

}  // namespace ecladts
