#include "ecladts/lads.hpp"

#include <algorithm>
#include <cmath>

#include "ecladts/error.hpp"
#include "ecladts/parallel.hpp"

namespace ecladts {

std::vector<double> upscale_linear(std::span<const double> activation, std::size_t ch_l,
                                   std::size_t w_l, std::size_t target_w) {
  if (target_w < 1) throw ValidationError("upscale target width must be >= 1");
  if (w_l < 1) throw ValidationError("activation width must be >= 1");
  if (activation.size() != ch_l * w_l) {
    throw DimensionError("activation holds " + std::to_string(activation.size()) +
                         " values, expected " + std::to_string(ch_l * w_l));
  }
  if (w_l == target_w) return {activation.begin(), activation.end()};
  std::vector<double> out(ch_l * target_w);
  for (std::size_t c = 0; c < ch_l; ++c) {
    const double* src = activation.data() + c * w_l;
    double* dst = out.data() + c * target_w;
    if (w_l == 1 || target_w == 1) {
      std::fill(dst, dst + target_w, src[0]);
      continue;
    }
    const double step = static_cast<double>(w_l - 1) / static_cast<double>(target_w - 1);
    for (std::size_t t = 0; t < target_w; ++t) {
      const double pos = static_cast<double>(t) * step;
      const auto lo = std::min(static_cast<std::size_t>(pos), w_l - 2);
      const double frac = pos - static_cast<double>(lo);
      dst[t] = src[lo] + frac * (src[lo + 1] - src[lo]);
    }
  }
  return out;
}

Descriptor DescriptorSet::descriptor(std::size_t i) const {
  return Descriptor{sample_ids.at(i), w, dim,
                    std::span<const double>(values).subspan(i * w * dim, w * dim)};
}

DescriptorSet extract_lads(const Model& model, const std::vector<std::string>& probe_layers,
                           const Dataset& data, std::span<const std::size_t> indices,
                           const LadOptions& options) {
  if (probe_layers.empty()) throw ValidationError("at least one probe layer is required");
  for (const std::string& layer : probe_layers) {
    if (!model.has_layer(layer)) throw ValidationError("unresolved layer name '" + layer + "'");
  }
  const std::size_t w = data.spec.w;
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);

  DescriptorSet set;
  set.w = w;
  for (std::size_t i : indices) set.sample_ids.push_back(data.samples.at(i).id);

  // Probe one sample to learn the per-layer channel counts.
  {
    const std::size_t first[] = {indices.empty() ? 0 : indices[0]};
    if (indices.empty()) return set;
    const auto [logits, acts] = model.forward_with_activations(data.batch(first), probe_layers);
    std::size_t col = 0;
    for (const std::string& layer : probe_layers) {
      const std::size_t ch_l = acts.at(layer).dim(1);
      set.provenance.push_back({layer, col, col + ch_l});
      col += ch_l;
    }
    set.dim = col;
  }
  set.values.assign(indices.size() * w * set.dim, 0.0);

  const std::size_t n_batches = (indices.size() + batch_size - 1) / batch_size;
  parallel_for(n_batches, [&](std::size_t bi) {
    const std::size_t start = bi * batch_size;
    const auto chunk = indices.subspan(start, std::min(batch_size, indices.size() - start));
    const auto [logits, acts] = model.forward_with_activations(data.batch(chunk), probe_layers);
    for (const LayerRange& range : set.provenance) {
      const Tensor& a = acts.at(range.layer);
      const std::size_t ch_l = a.dim(1);
      const std::size_t w_l = a.rank() == 3 ? a.dim(2) : 1;
      for (std::size_t s = 0; s < chunk.size(); ++s) {
        const auto up = upscale_linear(
            std::span<const double>(a.data() + s * ch_l * w_l, ch_l * w_l), ch_l, w_l, w);
        double* dst = set.values.data() + (start + s) * w * set.dim;
        for (std::size_t c = 0; c < ch_l; ++c) {
          for (std::size_t b = 0; b < w; ++b) dst[b * set.dim + range.begin + c] = up[c * w + b];
        }
      }
    }
  });

  if (options.standardize) {
    const std::size_t rows = set.rows();
    for (std::size_t c = 0; c < set.dim; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < rows; ++r) mean += set.values[r * set.dim + c];
      mean /= static_cast<double>(rows);
      double var = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = set.values[r * set.dim + c] - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(rows));
      for (std::size_t r = 0; r < rows; ++r) {
        double& v = set.values[r * set.dim + c];
        v = sd > 0.0 ? (v - mean) / sd : 0.0;
      }
    }
  }
  return set;
}

void save_descriptor_cache(const std::filesystem::path& dir, const DescriptorSet& set) {
  json layers = json::array();
  for (const LayerRange& r : set.provenance) {
    layers.push_back({{"layer", r.layer}, {"begin", r.begin}, {"end", r.end}});
  }
  json manifest{{"format", "ecladts-lads/1"},
                {"w", set.w},
                {"dim", set.dim},
                {"sample_ids", set.sample_ids},
                {"provenance", layers},
                {"file", "lads.bin"},
                {"layout", "[sample][timestep][column]"},
                {"dtype", "f64le"}};
  std::vector<std::uint8_t> bytes;
  append_f64_le(bytes, set.values);
  write_bytes(dir / "lads.bin", bytes);
  write_json(dir / "manifest.json", manifest);
}

DescriptorSet load_descriptor_cache(const std::filesystem::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  DescriptorSet set;
  try {
    set.w = manifest.at("w").get<std::size_t>();
    set.dim = manifest.at("dim").get<std::size_t>();
    set.sample_ids = manifest.at("sample_ids").get<std::vector<std::size_t>>();
    for (const json& r : manifest.at("provenance")) {
      set.provenance.push_back({r.at("layer").get<std::string>(), r.at("begin").get<std::size_t>(),
                                r.at("end").get<std::size_t>()});
    }
    set.values = decode_f64_le(read_bytes(dir / manifest.at("file").get<std::string>()));
  } catch (const json::exception& e) {
    throw InputError(std::string("descriptor cache manifest malformed: ") + e.what());
  }
  if (set.values.size() != set.rows() * set.dim) {
    throw InputError("descriptor cache payload does not match its manifest");
  }
  return set;
}

}  // namespace ecladts
