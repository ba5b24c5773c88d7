#include "ecladts/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ecladts/error.hpp"
#include "ecladts/ops.hpp"
#include "ecladts/rng.hpp"

namespace ecladts {

namespace {

constexpr std::size_t kStemKernel = 7;

std::size_t pick(const std::vector<std::size_t>& values, std::size_t i) {
  return values.size() == 1 ? values[0] : values.at(i);
}

std::string block_name(std::size_t i) { return "block" + std::to_string(i); }

}  // namespace

ModelSpec ModelSpec::defaults(const std::string& architecture, std::size_t in_channels,
                              std::size_t length, std::size_t num_classes) {
  ModelSpec s;
  s.architecture = architecture;
  s.in_channels = in_channels;
  s.length = length;
  s.num_classes = num_classes;
  if (architecture == "tiny-cnn") {
    s.channels = {8, 16, 32};
    s.kernel_sizes = {5};
    s.strides = {2};
  } else if (architecture == "mini-inception") {
    s.channels = {8, 8, 8};
    s.kernel_sizes = {9, 19, 39};
    s.strides = {1};
  } else if (architecture == "mini-resnet") {
    s.channels = {8, 16, 32};
    s.kernel_sizes = {3};
    s.strides = {1, 2, 2};
  } else {
    throw ValidationError("unknown architecture id '" + architecture + "'");
  }
  return s;
}

void ModelSpec::validate() const {
  if (architecture != "tiny-cnn" && architecture != "mini-inception" &&
      architecture != "mini-resnet") {
    throw ValidationError("unknown architecture id '" + architecture + "'");
  }
  if (channels.empty()) throw ValidationError("model spec needs at least one block");
  if (in_channels < 1 || length < 1) throw ValidationError("model input must be non-empty");
  if (num_classes < 2) throw ValidationError("model needs at least 2 classes");
  if (kernel_sizes.empty() || strides.empty()) {
    throw ValidationError("kernel_sizes and strides must be non-empty");
  }
  for (std::size_t c : channels)
    if (c < 1) throw ValidationError("block widths must be >= 1");
  for (std::size_t k : kernel_sizes)
    if (k < 1) throw ValidationError("kernel sizes must be >= 1");
  for (std::size_t s : strides)
    if (s < 1) throw ValidationError("strides must be >= 1");
  if (architecture != "mini-inception") {
    if (kernel_sizes.size() != 1 && kernel_sizes.size() != channels.size()) {
      throw ValidationError("kernel_sizes must have 1 or one-per-block entries");
    }
    if (strides.size() != 1 && strides.size() != channels.size()) {
      throw ValidationError("strides must have 1 or one-per-block entries");
    }
  }
}

void to_json(json& j, const ModelSpec& spec) {
  j = json{{"architecture", spec.architecture}, {"channels", spec.channels},
           {"kernel_sizes", spec.kernel_sizes}, {"strides", spec.strides},
           {"in_channels", spec.in_channels},   {"length", spec.length},
           {"num_classes", spec.num_classes},   {"probe_layers", spec.probe_layers}};
}

void from_json(const json& j, ModelSpec& spec) {
  const std::string arch = j.value("architecture", std::string("tiny-cnn"));
  spec = ModelSpec::defaults(arch, j.value("in_channels", std::size_t{1}),
                             j.value("length", std::size_t{256}),
                             j.value("num_classes", std::size_t{2}));
  if (j.contains("channels")) j.at("channels").get_to(spec.channels);
  if (j.contains("kernel_sizes")) j.at("kernel_sizes").get_to(spec.kernel_sizes);
  if (j.contains("strides")) j.at("strides").get_to(spec.strides);
  if (j.contains("probe_layers")) j.at("probe_layers").get_to(spec.probe_layers);
}

std::size_t receptive_field(std::span<const ChainLayer> chain) {
  std::size_t rf = 1;
  std::size_t jump = 1;
  for (const ChainLayer& layer : chain) {
    rf += (layer.kernel - 1) * jump;
    jump *= layer.stride;
  }
  return rf;
}

InputWindow receptive_window(std::span<const ChainLayer> chain, std::size_t index) {
  long left = 0;
  long jump = 1;
  for (const ChainLayer& layer : chain) {
    left -= static_cast<long>(layer.padding) * jump;
    jump *= static_cast<long>(layer.stride);
  }
  const long begin = left + static_cast<long>(index) * jump;
  return {begin, begin + static_cast<long>(receptive_field(chain))};
}

void Model::add_param(std::string name, Tensor value, bool trainable) {
  index_[name] = params_.size();
  params_.push_back(Parameter{std::move(name), std::move(value), trainable});
}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  Rng rng(seed);

  auto kaiming = [&rng](Shape shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
  };
  auto conv = [&](const std::string& prefix, std::size_t out, std::size_t in, std::size_t k) {
    m.add_param(prefix + ".weight", kaiming(Shape{out, in, k}, in * k));
    m.add_param(prefix + ".bias", Tensor(Shape{out}, 0.0));
  };
  auto bn = [&](const std::string& prefix, std::size_t ch) {
    m.add_param(prefix + ".weight", Tensor(Shape{ch}, 1.0));
    m.add_param(prefix + ".bias", Tensor(Shape{ch}, 0.0));
    m.add_param(prefix + ".running_mean", Tensor(Shape{ch}, 0.0), false);
    m.add_param(prefix + ".running_var", Tensor(Shape{ch}, 1.0), false);
  };

  std::size_t in = spec.in_channels;
  if (spec.architecture == "tiny-cnn") {
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
      conv(block_name(i) + ".conv", spec.channels[i], in, pick(spec.kernel_sizes, i));
      bn(block_name(i) + ".bn", spec.channels[i]);
      in = spec.channels[i];
    }
  } else if (spec.architecture == "mini-inception") {
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
      const std::size_t nf = spec.channels[i];
      conv(block_name(i) + ".bottleneck", nf, in, 1);
      for (std::size_t b = 0; b < spec.kernel_sizes.size(); ++b) {
        conv(block_name(i) + ".branch" + std::to_string(b), nf, nf, spec.kernel_sizes[b]);
      }
      in = nf * spec.kernel_sizes.size();
      bn(block_name(i) + ".bn", in);
    }
  } else {
    conv("stem.conv", spec.channels[0], in, kStemKernel);
    bn("stem.bn", spec.channels[0]);
    in = spec.channels[0];
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
      const std::size_t out = spec.channels[i];
      const std::size_t k = pick(spec.kernel_sizes, i);
      conv(block_name(i) + ".conv1", out, in, k);
      bn(block_name(i) + ".bn1", out);
      conv(block_name(i) + ".conv2", out, out, k);
      bn(block_name(i) + ".bn2", out);
      if (in != out || pick(spec.strides, i) != 1) {
        conv(block_name(i) + ".shortcut", out, in, 1);
        bn(block_name(i) + ".shortcut_bn", out);
      }
      in = out;
    }
  }
  m.add_param("fc.weight", kaiming(Shape{spec.num_classes, in}, in));
  m.add_param("fc.bias", Tensor(Shape{spec.num_classes}, 0.0));

  // Fail early on geometries that collapse to zero width.
  Tape tape;
  m.forward(tape, tape.leaf(Tensor(Shape{1, spec.in_channels, spec.length}, 0.0)));

  for (const std::string& layer : spec.probe_layers) {
    if (!m.has_layer(layer)) throw ValidationError("probe layer '" + layer + "' does not exist");
  }
  return m;
}

std::vector<std::string> Model::layer_names() const {
  std::vector<std::string> names;
  if (spec_.architecture == "mini-resnet") names.push_back("stem");
  for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
    if (spec_.architecture == "mini-inception") names.push_back(block_name(i) + ".bottleneck");
    names.push_back(block_name(i));
  }
  names.push_back("gap");
  names.push_back("logits");
  return names;
}

std::vector<std::string> Model::default_probe_layers() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec_.channels.size(); ++i) names.push_back(block_name(i));
  return names;
}

std::vector<std::string> Model::probe_layers() const {
  return spec_.probe_layers.empty() ? default_probe_layers() : spec_.probe_layers;
}

bool Model::has_layer(const std::string& name) const {
  const auto names = layer_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

Parameter& Model::parameter(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("no parameter named '" + name + "'");
  return params_[it->second];
}

const Parameter& Model::parameter(const std::string& name) const {
  return const_cast<Model*>(this)->parameter(name);
}

Model::Forward Model::forward(Tape& tape, const Var& input, bool training,
                              std::span<const std::string> capture, bool parameter_grads) {
  return run(tape, input, training, capture, parameter_grads, training ? &params_ : nullptr);
}

Model::Forward Model::forward(Tape& tape, const Var& input, std::span<const std::string> capture,
                              bool parameter_grads) const {
  return run(tape, input, false, capture, parameter_grads, nullptr);
}

Model::Forward Model::run(Tape& tape, const Var& input, bool training,
                          std::span<const std::string> capture, bool parameter_grads,
                          std::vector<Parameter>* mutable_params) const {
  const Shape& is = input.shape();
  if (is.size() != 3 || is[1] != spec_.in_channels) {
    throw DimensionError("model expects input [batch," + std::to_string(spec_.in_channels) +
                         ",w], got " + shape_string(is));
  }
  std::set<std::string> wanted(capture.begin(), capture.end());
  for (const std::string& name : wanted) {
    if (!has_layer(name)) throw ValidationError("unresolved layer name '" + name + "'");
  }

  Forward fwd;
  fwd.parameters.reserve(params_.size());
  for (const Parameter& p : params_) {
    fwd.parameters.push_back(tape.leaf(p.value, parameter_grads && p.trainable));
  }
  auto P = [&](const std::string& name) { return fwd.parameters[index_.at(name)]; };
  // Eval mode reads copies so that concurrent forwards never share writes.
  std::vector<Tensor> stat_copies;
  stat_copies.reserve(params_.size());
  auto stats = [&](const std::string& prefix) -> ops::BatchNormState {
    const std::size_t mi = index_.at(prefix + ".running_mean");
    const std::size_t vi = index_.at(prefix + ".running_var");
    if (mutable_params) return {(*mutable_params)[mi].value, (*mutable_params)[vi].value};
    stat_copies.push_back(params_[mi].value);
    stat_copies.push_back(params_[vi].value);
    return {stat_copies[stat_copies.size() - 2], stat_copies.back()};
  };
  auto conv = [&](const Var& x, const std::string& prefix, std::size_t stride) {
    const std::size_t k = P(prefix + ".weight").shape()[2];
    return ops::conv1d(x, P(prefix + ".weight"), P(prefix + ".bias"), stride, k / 2);
  };
  auto bn = [&](const Var& x, const std::string& prefix) {
    return ops::batchnorm1d(x, P(prefix + ".weight"), P(prefix + ".bias"), stats(prefix),
                            training);
  };
  auto keep = [&](const std::string& name, const Var& v) {
    if (wanted.count(name)) fwd.activations.emplace(name, v);
  };

  Var x = input;
  if (spec_.architecture == "tiny-cnn") {
    for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
      const std::string b = block_name(i);
      x = ops::relu(bn(conv(x, b + ".conv", pick(spec_.strides, i)), b + ".bn"));
      keep(b, x);
    }
  } else if (spec_.architecture == "mini-inception") {
    for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
      const std::string b = block_name(i);
      Var bottleneck = conv(x, b + ".bottleneck", 1);
      keep(b + ".bottleneck", bottleneck);
      std::vector<Var> branches;
      for (std::size_t k = 0; k < spec_.kernel_sizes.size(); ++k) {
        branches.push_back(conv(bottleneck, b + ".branch" + std::to_string(k), 1));
      }
      x = ops::relu(bn(ops::concat_channels(branches), b + ".bn"));
      keep(b, x);
    }
  } else {
    x = ops::relu(bn(conv(x, "stem.conv", 1), "stem.bn"));
    keep("stem", x);
    for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
      const std::string b = block_name(i);
      const std::size_t stride = pick(spec_.strides, i);
      Var branch = ops::relu(bn(conv(x, b + ".conv1", stride), b + ".bn1"));
      branch = bn(conv(branch, b + ".conv2", 1), b + ".bn2");
      Var shortcut = x;
      if (index_.count(b + ".shortcut.weight")) {
        shortcut = bn(conv(x, b + ".shortcut", stride), b + ".shortcut_bn");
      }
      x = ops::relu(ops::add(branch, shortcut));
      keep(b, x);
    }
  }
  x = ops::global_avg_pool(x);
  keep("gap", x);
  fwd.logits = ops::linear(x, P("fc.weight"), P("fc.bias"));
  keep("logits", fwd.logits);
  return fwd;
}

Tensor Model::logits(const Tensor& batch) const {
  Tape tape;
  return forward(tape, tape.leaf(batch)).logits.value();
}

std::pair<Tensor, std::map<std::string, Tensor>> Model::forward_with_activations(
    const Tensor& batch, std::span<const std::string> layers) const {
  Tape tape;
  Forward fwd = forward(tape, tape.leaf(batch), layers);
  std::map<std::string, Tensor> acts;
  for (const auto& [name, var] : fwd.activations) acts.emplace(name, var.value());
  return {fwd.logits.value(), std::move(acts)};
}

std::vector<ChainLayer> Model::chain_to(const std::string& layer) const {
  std::vector<ChainLayer> chain;
  auto done = [&](const std::string& name) { return name == layer; };
  if (spec_.architecture == "mini-resnet") {
    chain.push_back({"stem", kStemKernel, 1, kStemKernel / 2});
    if (done("stem")) return chain;
  }
  for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
    const std::string b = block_name(i);
    if (spec_.architecture == "tiny-cnn") {
      const std::size_t k = pick(spec_.kernel_sizes, i);
      chain.push_back({b, k, pick(spec_.strides, i), k / 2});
    } else if (spec_.architecture == "mini-inception") {
      chain.push_back({b + ".bottleneck", 1, 1, 0});
      if (done(b + ".bottleneck")) return chain;
      const std::size_t k = *std::max_element(spec_.kernel_sizes.begin(), spec_.kernel_sizes.end());
      chain.push_back({b, k, 1, k / 2});
    } else {
      const std::size_t k = pick(spec_.kernel_sizes, i);
      chain.push_back({b + ".conv1", k, pick(spec_.strides, i), k / 2});
      chain.push_back({b, k, 1, k / 2});
    }
    if (done(b)) return chain;
  }
  throw ValidationError("layer '" + layer + "' is not on a conv/pool chain");
}

std::size_t Model::receptive_field(const std::string& layer) const {
  const auto chain = chain_to(layer);
  return ecladts::receptive_field(chain);
}

Checkpoint Checkpoint::from_model(const Model& model, json metadata) {
  Checkpoint c;
  c.spec = model.spec();
  c.metadata = std::move(metadata);
  for (const Parameter& p : model.parameters()) {
    c.manifest.push_back({p.name, c.weights.size(), p.value.shape(), p.trainable});
    c.weights.insert(c.weights.end(), p.value.values().begin(), p.value.values().end());
  }
  return c;
}

void Checkpoint::check_manifest() const {
  std::size_t cursor = 0;
  for (const ManifestEntry& e : manifest) {
    if (e.offset != cursor) {
      throw InputError("checkpoint manifest entry '" + e.name + "' leaves a gap or overlap");
    }
    cursor += shape_size(e.shape);
  }
  if (cursor != weights.size()) {
    throw InputError("checkpoint manifest covers " + std::to_string(cursor) + " of " +
                     std::to_string(weights.size()) + " weights");
  }
}

Model Checkpoint::to_model() const {
  check_manifest();
  Model model = Model::build(spec, 0);
  if (model.parameters().size() != manifest.size()) {
    throw InputError("checkpoint manifest does not match the model architecture");
  }
  for (const ManifestEntry& e : manifest) {
    Parameter& p = model.parameter(e.name);
    if (p.value.shape() != e.shape) {
      throw InputError("checkpoint shape mismatch for '" + e.name + "'");
    }
    std::copy_n(weights.begin() + static_cast<long>(e.offset), p.value.size(), p.value.data());
  }
  return model;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  check_manifest();
  json header;
  header["format"] = "ecladts-checkpoint/1";
  header["spec"] = spec;
  header["metadata"] = metadata;
  json entries = json::array();
  for (const ManifestEntry& e : manifest) {
    entries.push_back({{"name", e.name}, {"offset", e.offset}, {"shape", e.shape},
                       {"trainable", e.trainable}});
  }
  header["manifest"] = entries;
  const std::string text = header.dump();
  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + weights.size() * 8);
  append_u64_le(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  append_f64_le(out, weights);
  return out;
}

Checkpoint Checkpoint::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw InputError("checkpoint truncated before header length");
  const std::uint64_t header_len = decode_u64_le(bytes.first(8));
  if (bytes.size() < 8 + header_len) throw InputError("checkpoint truncated inside header");
  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<long>(header_len));
  } catch (const json::parse_error& e) {
    throw InputError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  Checkpoint c;
  try {
    c.spec = header.at("spec").get<ModelSpec>();
    c.metadata = header.value("metadata", json::object());
    for (const json& e : header.at("manifest")) {
      c.manifest.push_back({e.at("name").get<std::string>(), e.at("offset").get<std::size_t>(),
                            e.at("shape").get<Shape>(), e.value("trainable", true)});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint header malformed: ") + e.what());
  }
  c.weights = decode_f64_le(bytes.subspan(8 + header_len));
  c.check_manifest();
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const { write_bytes(path, serialize()); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  return deserialize(read_bytes(path));
}

}  // namespace ecladts
