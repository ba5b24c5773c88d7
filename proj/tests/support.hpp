#pragma once

// Helpers shared by the unit tests and the acceptance harness.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ecladts/autodiff.hpp"
#include "ecladts/rng.hpp"
#include "ecladts/tensor.hpp"

namespace ecladts::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero gradients from
// turning round-off into huge ratios.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

using ScalarBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Reverse-mode gradients of the scalar built by `f` against central
// differences with step h, for every entry of every input (or at most
// `max_entries` evenly spaced entries per input).
inline GradCheck check_gradients(const ScalarBuilder& f, std::vector<Tensor> inputs,
                                 double h = 1e-5, std::size_t max_entries = 0) {
  auto evaluate = [&](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& x : xs) leaves.push_back(tape.leaf(x, false));
    return f(tape, leaves).value().item();
  };

  Tape tape;
  std::vector<Var> leaves;
  for (const Tensor& x : inputs) leaves.push_back(tape.leaf(x, true));
  tape.backward(f(tape, leaves));

  GradCheck out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor* g = leaves[i].grad();
    const std::size_t n = inputs[i].size();
    const std::size_t step = max_entries && n > max_entries ? n / max_entries : 1;
    for (std::size_t e = 0; e < n; e += step) {
      const double saved = inputs[i][e];
      inputs[i][e] = saved + h;
      const double up = evaluate(inputs);
      inputs[i][e] = saved - h;
      const double down = evaluate(inputs);
      inputs[i][e] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = g ? (*g)[e] : 0.0;
      const double err = relative_error(analytic, numeric);
      ++out.checked;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = "input " + std::to_string(i) + " entry " + std::to_string(e) +
                    ": analytic " + std::to_string(analytic) + " numeric " +
                    std::to_string(numeric);
      }
    }
  }
  return out;
}

}  // namespace ecladts::testing
