#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecladts/autodiff.hpp"

namespace ecladts::ops {

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var sum(const Var& a);
Var mean(const Var& a);

Var relu(const Var& input);

// input [batch, ch_in, w], kernel [ch_out, ch_in, k], bias [ch_out]
// -> [batch, ch_out, floor((w + 2*padding - k) / stride) + 1]. Zero padding.
Var conv1d(const Var& input, const Var& kernel, const Var& bias, std::size_t stride,
           std::size_t padding);

// input [batch, n], weight [m, n], bias [m] -> [batch, m]
Var linear(const Var& input, const Var& weight, const Var& bias);

// [batch, ch, w] -> [batch, ch]
Var global_avg_pool(const Var& input);

// [batch, ch, w] -> [batch, ch, floor((w - k) / stride) + 1]; first maximum wins ties.
Var max_pool1d(const Var& input, std::size_t kernel, std::size_t stride);

// Concatenate [batch, ch_i, w] tensors along the channel axis.
Var concat_channels(const std::vector<Var>& inputs);

// Running statistics of a batchnorm layer, updated in place during training.
struct BatchNormState {
  Tensor& running_mean;
  Tensor& running_var;
};

// Normalizes [batch, ch, w] per channel. In training mode uses batch
// statistics and updates state with the given momentum; otherwise uses the
// running statistics in state.
Var batchnorm1d(const Var& input, const Var& gamma, const Var& beta, BatchNormState state,
                bool training, double momentum = 0.1, double eps = 1e-5);

// Mean negative log-likelihood of softmax(logits) for integer targets.
Var softmax_nll(const Var& logits, std::span<const int> targets);

// sign * sum over the batch of ||y 1^T - 1 y^T||_F for logits [batch, n_k].
// The subgradient at all-equal logits is zero.
Var logit_spread(const Var& logits, double sign = 1.0);

}  // namespace ecladts::ops
