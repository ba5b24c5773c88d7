#include "ecladts/synthdata.hpp"

#include <cmath>
#include <numbers>

#include "ecladts/error.hpp"
#include "ecladts/rng.hpp"

namespace ecladts {

namespace {

void check_geometry(std::size_t n, std::size_t w, const SynthOptions& opts) {
  if (n < 1) throw ValidationError("synthetic dataset needs n >= 1");
  if (opts.primitive_width < 1) throw ValidationError("primitive width must be >= 1");
  if (w < 4 * opts.primitive_width) {
    throw ValidationError("series length " + std::to_string(w) +
                          " must be at least 4x the primitive width " +
                          std::to_string(opts.primitive_width));
  }
}

std::vector<double> square_wave(std::size_t w, std::size_t period, double amplitude, Rng& rng) {
  const std::size_t phase = rng.below(period);
  std::vector<double> out(w);
  for (std::size_t t = 0; t < w; ++t) {
    out[t] = ((t + phase) % period) < period / 2 ? amplitude : -amplitude;
  }
  return out;
}

std::vector<double> sine_wave(std::size_t w, std::size_t period, double amplitude, Rng& rng) {
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> out(w);
  for (std::size_t t = 0; t < w; ++t) {
    out[t] = amplitude *
             std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(period) +
                      phase);
  }
  return out;
}

// Random polynomial of degree 0..max_degree on t in [-1, 1].
std::vector<double> polynomial(std::size_t w, std::size_t max_degree, Rng& rng) {
  const std::size_t degree = rng.below(max_degree + 1);
  std::vector<double> coeffs(degree + 1);
  for (double& c : coeffs) c = rng.uniform(-1.0, 1.0);
  std::vector<double> out(w);
  for (std::size_t i = 0; i < w; ++i) {
    const double t = w > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(w - 1) : 0.0;
    double acc = 0.0;
    for (std::size_t d = coeffs.size(); d-- > 0;) acc = acc * t + coeffs[d];
    out[i] = acc;
  }
  return out;
}

// Overwrites series[start, start+width) with the primitive and marks the span.
void insert_primitive(std::vector<double>& series, const Primitive& p, std::size_t start,
                      Mask& mask, std::size_t w) {
  const auto shape = waveform(p.kind, p.width, p.amplitude);
  for (std::size_t t = 0; t < p.width; ++t) {
    series[start + t] = shape[t];
    mask[p.channel * w + start + t] = 1;
  }
}

Sample assemble(std::size_t id, int label, const std::vector<std::vector<double>>& channels,
                std::vector<Mask> masks, double noise_sigma, Rng& rng) {
  const std::size_t ch = channels.size();
  const std::size_t w = channels[0].size();
  std::vector<double> x(ch * w);
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t t = 0; t < w; ++t) {
      x[c * w + t] = channels[c][t] + (noise_sigma > 0.0 ? rng.normal(0.0, noise_sigma) : 0.0);
    }
  }
  return Sample{id, Tensor(Shape{ch, w}, std::move(x)), label, std::move(masks)};
}

DatasetSpec base_spec(std::string name, std::size_t n, std::size_t w, std::size_t ch,
                      std::size_t classes, std::uint64_t seed, const SynthOptions& opts) {
  DatasetSpec spec;
  spec.name = std::move(name);
  spec.n = n;
  spec.w = w;
  spec.ch = ch;
  spec.num_classes = classes;
  spec.class_probs.assign(classes, 1.0 / static_cast<double>(classes));
  for (std::size_t k = 0; k < classes; ++k) spec.class_names.push_back(std::to_string(k));
  spec.noise_sigma = opts.noise_sigma;
  spec.seed = seed;
  return spec;
}

}  // namespace

Dataset gen_l2(std::size_t n, std::size_t w, std::uint64_t seed, const SynthOptions& opts) {
  check_geometry(n, w, opts);
  Dataset data;
  data.spec = base_spec("synthetic-l2", n, w, 1, 2, seed, opts);
  data.spec.background = {{"kind", "square"},
                          {"period", opts.square_period},
                          {"amplitude", opts.background_amplitude},
                          {"noise", "white"}};
  const Primitive p0{"p0", Waveform::TriangularPulse, 0, opts.primitive_width,
                     opts.primitive_amplitude, true};
  const Primitive p1{"p1", Waveform::Background, 0, w, opts.background_amplitude, true};
  data.spec.primitives = {p0, p1};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, i);
    const int label = i % 2 == 0 ? 0 : 1;  // odd n: the extra sample goes to class 0
    auto series = square_wave(w, opts.square_period, opts.background_amplitude, rng);
    Mask m0(w, 0), m1(w, 1);
    if (label == 0) {
      const std::size_t start = rng.below(w - p0.width + 1);
      insert_primitive(series, p0, start, m0, w);
      for (std::size_t t = 0; t < w; ++t) m1[t] = m0[t] ? 0 : 1;
    }
    data.samples.push_back(assemble(i, label, {series}, {m0, m1}, opts.noise_sigma, rng));
  }
  return data;
}

Dataset gen_l4(std::size_t n, std::size_t w, std::uint64_t seed, const SynthOptions& opts) {
  check_geometry(n, w, opts);
  Dataset data;
  data.spec = base_spec("synthetic-l4", n, w, 1, 2, seed, opts);
  data.spec.background = {{"kind", "sine"},
                          {"period", opts.sine_period},
                          {"amplitude", opts.background_amplitude},
                          {"noise", "gaussian"}};
  const Primitive p0{"p0", Waveform::GaussianBumpUp, 0, opts.primitive_width,
                     opts.primitive_amplitude, true};
  const Primitive p1{"p1", Waveform::GaussianBumpDown, 0, opts.primitive_width,
                     opts.primitive_amplitude, true};
  data.spec.primitives = {p0, p1};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, i);
    const int label = i % 2 == 0 ? 0 : 1;
    auto series = sine_wave(w, opts.sine_period, opts.background_amplitude, rng);
    Mask m0(w, 0), m1(w, 0);
    const Primitive& p = label == 0 ? p0 : p1;
    const std::size_t start = rng.below(w - p.width + 1);
    insert_primitive(series, p, start, label == 0 ? m0 : m1, w);
    data.samples.push_back(assemble(i, label, {series}, {m0, m1}, opts.noise_sigma, rng));
  }
  return data;
}

Dataset gen_lm(std::size_t n, std::size_t w, std::uint64_t seed, const SynthOptions& opts) {
  check_geometry(n, w, opts);
  Dataset data;
  data.spec = base_spec("synthetic-lm", n, w, 2, 3, seed, opts);
  data.spec.background = {{"channel0", {{"kind", "sine"}, {"period", opts.sine_period},
                                        {"amplitude", opts.background_amplitude}}},
                          {"channel1", {{"kind", "polynomial"},
                                        {"max_degree", opts.max_poly_degree},
                                        {"coefficients", "uniform[-1,1]"}}},
                          {"noise", "gaussian"}};
  const Primitive p0{"p0", Waveform::TriangularPulse, 0, opts.primitive_width,
                     opts.primitive_amplitude, true};
  const Primitive p1{"p1", Waveform::GaussianBumpUp, 1, opts.primitive_width,
                     opts.primitive_amplitude, true};
  data.spec.primitives = {p0, p1};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, i);
    const int label = static_cast<int>(rng.below(3));
    std::vector<std::vector<double>> channels{
        sine_wave(w, opts.sine_period, opts.background_amplitude, rng),
        polynomial(w, opts.max_poly_degree, rng)};
    Mask m0(2 * w, 0), m1(2 * w, 0);
    if (label == 0) {
      insert_primitive(channels[0], p0, rng.below(w - p0.width + 1), m0, w);
    } else if (label == 1) {
      insert_primitive(channels[1], p1, rng.below(w - p1.width + 1), m1, w);
    }
    data.samples.push_back(assemble(i, label, channels, {m0, m1}, opts.noise_sigma, rng));
  }
  return data;
}

Dataset generate(const std::string& name, std::size_t n, std::size_t w, std::uint64_t seed,
                 const SynthOptions& opts) {
  if (name == "synthetic-l2") return gen_l2(n, w, seed, opts);
  if (name == "synthetic-l4") return gen_l4(n, w, seed, opts);
  if (name == "synthetic-lm") return gen_lm(n, w, seed, opts);
  throw ValidationError("unknown synthetic dataset '" + name + "'");
}

}  // namespace ecladts
