#pragma once

#include <cstdint>
#include <string>

#include "ecladts/dataset.hpp"

namespace ecladts {

// Generator knobs. Defaults give primitives that stand clear of the noise
// while staying local relative to the series length.
struct SynthOptions {
  std::size_t primitive_width = 24;
  double primitive_amplitude = 2.0;
  double background_amplitude = 1.0;
  double noise_sigma = 0.1;
  std::size_t square_period = 32;
  std::size_t sine_period = 64;
  std::size_t max_poly_degree = 5;
};

// Two classes over a square-wave background. Class 0 carries p0 (triangular
// pulse); class 1 is background only. p1 marks the uninterrupted background.
Dataset gen_l2(std::size_t n, std::size_t w, std::uint64_t seed, const SynthOptions& opts = {});

// Two classes over a sine background: p0 (bump up) in class 0, p1 (bump
// down) in class 1.
Dataset gen_l4(std::size_t n, std::size_t w, std::uint64_t seed, const SynthOptions& opts = {});

// Two channels, three equiprobable classes: p0 on channel 0 (class 0), p1 on
// channel 1 (class 1), neither (class 2). Channel 0 background is a sine,
// channel 1 a random polynomial.
Dataset gen_lm(std::size_t n, std::size_t w, std::uint64_t seed, const SynthOptions& opts = {});

// Dispatch on "synthetic-l2" | "synthetic-l4" | "synthetic-lm".
Dataset generate(const std::string& name, std::size_t n, std::size_t w, std::uint64_t seed,
                 const SynthOptions& opts = {});

}  // namespace ecladts
