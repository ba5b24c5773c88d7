#include "ecladts/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ecladts/error.hpp"

namespace ecladts::ops {
namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void require_rank(const Var& v, std::size_t rank, const char* op, const char* what) {
  if (v.shape().size() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape_string(v.shape()));
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out.add_inplace(b.value());
  return a.tape()->record(std::move(out), {a, b}, [](const Tensor& g, BackwardContext& ctx) {
    if (ctx.needs_grad(0)) ctx.adjoint(0).add_inplace(g);
    if (ctx.needs_grad(1)) ctx.adjoint(1).add_inplace(g);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [](const Tensor& g, BackwardContext& ctx) {
    for (std::size_t side = 0; side < 2; ++side) {
      if (!ctx.needs_grad(side)) continue;
      const Tensor& other = ctx.input(1 - side);
      Tensor& adj = ctx.adjoint(side);
      for (std::size_t i = 0; i < g.size(); ++i) adj[i] += g[i] * other[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return a.tape()->record(std::move(out), {a},
                          [factor](const Tensor& g, BackwardContext& ctx) {
                            Tensor& adj = ctx.adjoint(0);
                            for (std::size_t i = 0; i < g.size(); ++i) adj[i] += factor * g[i];
                          });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape()->record(Tensor::scalar(total), {a},
                          [](const Tensor& g, BackwardContext& ctx) {
                            const double s = g[0];
                            for (double& v : ctx.adjoint(0).values()) v += s;
                          });
}

Var mean(const Var& a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var relu(const Var& input) {
  Tensor out = input.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return input.tape()->record(std::move(out), {input},
                              [](const Tensor& g, BackwardContext& ctx) {
                                const Tensor& x = ctx.input(0);
                                Tensor& adj = ctx.adjoint(0);
                                for (std::size_t i = 0; i < g.size(); ++i) {
                                  if (x[i] > 0.0) adj[i] += g[i];
                                }
                              });
}

namespace {

struct ConvGeometry {
  std::size_t batch, ch_in, width, ch_out, k, stride, padding, out_w;

  // Output positions t for which t*stride + kk - padding lies in [0, width).
  std::pair<std::size_t, std::size_t> valid_range(std::size_t kk) const {
    const long pad = static_cast<long>(padding);
    const long off = static_cast<long>(kk) - pad;
    const long s = static_cast<long>(stride);
    long lo = off >= 0 ? 0 : (-off + s - 1) / s;
    long hi_excl = (static_cast<long>(width) - 1 - off) >= 0
                       ? (static_cast<long>(width) - 1 - off) / s + 1
                       : 0;
    hi_excl = std::min<long>(hi_excl, static_cast<long>(out_w));
    if (hi_excl < lo) hi_excl = lo;
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi_excl)};
  }
};

}  // namespace

Var conv1d(const Var& input, const Var& kernel, const Var& bias, std::size_t stride,
           std::size_t padding) {
  require_rank(input, 3, "conv1d", "input");
  require_rank(kernel, 3, "conv1d", "kernel");
  require_rank(bias, 1, "conv1d", "bias");
  if (stride < 1) throw ValidationError("conv1d: stride must be >= 1");
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  if (ks[1] != is[1]) {
    throw DimensionError("conv1d: input has " + std::to_string(is[1]) +
                         " channels but kernel expects " + std::to_string(ks[1]));
  }
  if (bias.shape()[0] != ks[0]) {
    throw DimensionError("conv1d: bias length does not match output channels");
  }
  if (ks[2] > is[2] + 2 * padding) {
    throw DimensionError("conv1d: kernel width " + std::to_string(ks[2]) +
                         " exceeds padded input width " + std::to_string(is[2] + 2 * padding));
  }
  ConvGeometry geo{is[0], is[1], is[2], ks[0], ks[2], stride, padding, 0};
  geo.out_w = (geo.width + 2 * padding - geo.k) / stride + 1;

  Tensor out(Shape{geo.batch, geo.ch_out, geo.out_w});
  const double* x = input.value().data();
  const double* wt = kernel.value().data();
  const double* bs = bias.value().data();
  double* y = out.data();
  for (std::size_t b = 0; b < geo.batch; ++b) {
    for (std::size_t co = 0; co < geo.ch_out; ++co) {
      double* yrow = y + (b * geo.ch_out + co) * geo.out_w;
      std::fill(yrow, yrow + geo.out_w, bs[co]);
      for (std::size_t ci = 0; ci < geo.ch_in; ++ci) {
        const double* xrow = x + (b * geo.ch_in + ci) * geo.width;
        const double* wrow = wt + (co * geo.ch_in + ci) * geo.k;
        for (std::size_t kk = 0; kk < geo.k; ++kk) {
          const auto [lo, hi] = geo.valid_range(kk);
          if (lo >= hi) continue;
          const double wv = wrow[kk];
          const double* xs = xrow + (lo * stride + kk - geo.padding);
          double* ys = yrow + lo;
          const std::size_t n = hi - lo;
          if (stride == 1) {
            for (std::size_t i = 0; i < n; ++i) ys[i] += wv * xs[i];
          } else {
            for (std::size_t i = 0; i < n; ++i) ys[i] += wv * xs[i * stride];
          }
        }
      }
    }
  }

  return input.tape()->record(
      std::move(out), {input, kernel, bias}, [geo](const Tensor& g, BackwardContext& ctx) {
        const double* x = ctx.input(0).data();
        const double* wt = ctx.input(1).data();
        const double* gy = g.data();
        double* gx = ctx.needs_grad(0) ? ctx.adjoint(0).data() : nullptr;
        double* gw = ctx.needs_grad(1) ? ctx.adjoint(1).data() : nullptr;
        double* gb = ctx.needs_grad(2) ? ctx.adjoint(2).data() : nullptr;
        for (std::size_t b = 0; b < geo.batch; ++b) {
          for (std::size_t co = 0; co < geo.ch_out; ++co) {
            const double* grow = gy + (b * geo.ch_out + co) * geo.out_w;
            if (gb) {
              double acc = 0.0;
              for (std::size_t t = 0; t < geo.out_w; ++t) acc += grow[t];
              gb[co] += acc;
            }
            for (std::size_t ci = 0; ci < geo.ch_in; ++ci) {
              const std::size_t xoff = (b * geo.ch_in + ci) * geo.width;
              const std::size_t woff = (co * geo.ch_in + ci) * geo.k;
              for (std::size_t kk = 0; kk < geo.k; ++kk) {
                const auto [lo, hi] = geo.valid_range(kk);
                if (lo >= hi) continue;
                const std::size_t start = xoff + lo * geo.stride + kk - geo.padding;
                const std::size_t n = hi - lo;
                const double* gs = grow + lo;
                if (gw) {
                  double acc = 0.0;
                  const double* xs = x + start;
                  for (std::size_t i = 0; i < n; ++i) acc += gs[i] * xs[i * geo.stride];
                  gw[woff + kk] += acc;
                }
                if (gx) {
                  const double wv = wt[woff + kk];
                  double* gxs = gx + start;
                  for (std::size_t i = 0; i < n; ++i) gxs[i * geo.stride] += wv * gs[i];
                }
              }
            }
          }
        }
      });
}

Var linear(const Var& input, const Var& weight, const Var& bias) {
  require_rank(input, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  require_rank(bias, 1, "linear", "bias");
  const std::size_t batch = input.shape()[0];
  const std::size_t n = input.shape()[1];
  const std::size_t m = weight.shape()[0];
  if (weight.shape()[1] != n || bias.shape()[0] != m) {
    throw DimensionError("linear: incompatible shapes " + shape_string(input.shape()) + ", " +
                         shape_string(weight.shape()) + ", " + shape_string(bias.shape()));
  }
  Tensor out(Shape{batch, m});
  const double* x = input.value().data();
  const double* w = weight.value().data();
  const double* bs = bias.value().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = bs[j];
      for (std::size_t i = 0; i < n; ++i) acc += w[j * n + i] * x[b * n + i];
      out[b * m + j] = acc;
    }
  }
  return input.tape()->record(
      std::move(out), {input, weight, bias},
      [batch, n, m](const Tensor& g, BackwardContext& ctx) {
        const double* x = ctx.input(0).data();
        const double* w = ctx.input(1).data();
        double* gx = ctx.needs_grad(0) ? ctx.adjoint(0).data() : nullptr;
        double* gw = ctx.needs_grad(1) ? ctx.adjoint(1).data() : nullptr;
        double* gb = ctx.needs_grad(2) ? ctx.adjoint(2).data() : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < m; ++j) {
            const double gv = g[b * m + j];
            if (gb) gb[j] += gv;
            for (std::size_t i = 0; i < n; ++i) {
              if (gw) gw[j * n + i] += gv * x[b * n + i];
              if (gx) gx[b * n + i] += gv * w[j * n + i];
            }
          }
        }
      });
}

Var global_avg_pool(const Var& input) {
  require_rank(input, 3, "global_avg_pool", "input");
  const std::size_t batch = input.shape()[0], ch = input.shape()[1], w = input.shape()[2];
  if (w == 0) throw DimensionError("global_avg_pool: empty width");
  Tensor out(Shape{batch, ch});
  const double* x = input.value().data();
  for (std::size_t r = 0; r < batch * ch; ++r) {
    double acc = 0.0;
    for (std::size_t t = 0; t < w; ++t) acc += x[r * w + t];
    out[r] = acc / static_cast<double>(w);
  }
  return input.tape()->record(std::move(out), {input},
                              [batch, ch, w](const Tensor& g, BackwardContext& ctx) {
                                double* gx = ctx.adjoint(0).data();
                                const double inv = 1.0 / static_cast<double>(w);
                                for (std::size_t r = 0; r < batch * ch; ++r) {
                                  for (std::size_t t = 0; t < w; ++t) gx[r * w + t] += g[r] * inv;
                                }
                              });
}

Var max_pool1d(const Var& input, std::size_t kernel, std::size_t stride) {
  require_rank(input, 3, "max_pool1d", "input");
  if (kernel < 1 || stride < 1) throw ValidationError("max_pool1d: kernel and stride must be >= 1");
  const std::size_t batch = input.shape()[0], ch = input.shape()[1], w = input.shape()[2];
  if (kernel > w) {
    throw DimensionError("max_pool1d: window " + std::to_string(kernel) +
                         " larger than input width " + std::to_string(w));
  }
  const std::size_t out_w = (w - kernel) / stride + 1;
  Tensor out(Shape{batch, ch, out_w});
  std::vector<std::size_t> argmax(batch * ch * out_w);
  const double* x = input.value().data();
  for (std::size_t r = 0; r < batch * ch; ++r) {
    for (std::size_t t = 0; t < out_w; ++t) {
      std::size_t best = r * w + t * stride;
      for (std::size_t kk = 1; kk < kernel; ++kk) {
        const std::size_t idx = r * w + t * stride + kk;
        if (x[idx] > x[best]) best = idx;
      }
      out[r * out_w + t] = x[best];
      argmax[r * out_w + t] = best;
    }
  }
  return input.tape()->record(std::move(out), {input},
                              [argmax = std::move(argmax)](const Tensor& g, BackwardContext& ctx) {
                                double* gx = ctx.adjoint(0).data();
                                for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += g[i];
                              });
}

Var concat_channels(const std::vector<Var>& inputs) {
  if (inputs.empty()) throw ValidationError("concat_channels: no inputs");
  const std::size_t batch = inputs[0].shape().at(0);
  const std::size_t w = inputs[0].shape().at(2);
  std::vector<std::size_t> chans;
  std::size_t total = 0;
  for (const Var& v : inputs) {
    require_rank(v, 3, "concat_channels", "input");
    if (v.shape()[0] != batch || v.shape()[2] != w) {
      throw DimensionError("concat_channels: batch/width mismatch " + shape_string(v.shape()));
    }
    chans.push_back(v.shape()[1]);
    total += v.shape()[1];
  }
  Tensor out(Shape{batch, total, w});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double* x = inputs[i].value().data();
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(x + b * chans[i] * w, chans[i] * w, out.data() + (b * total + offset) * w);
    }
    offset += chans[i];
  }
  return inputs[0].tape()->record(
      std::move(out), inputs, [chans, batch, total, w](const Tensor& g, BackwardContext& ctx) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < chans.size(); ++i) {
          if (ctx.needs_grad(i)) {
            double* gx = ctx.adjoint(i).data();
            for (std::size_t b = 0; b < batch; ++b) {
              const double* src = g.data() + (b * total + offset) * w;
              double* dst = gx + b * chans[i] * w;
              for (std::size_t j = 0; j < chans[i] * w; ++j) dst[j] += src[j];
            }
          }
          offset += chans[i];
        }
      });
}

Var batchnorm1d(const Var& input, const Var& gamma, const Var& beta, BatchNormState state,
                bool training, double momentum, double eps) {
  require_rank(input, 3, "batchnorm1d", "input");
  const std::size_t batch = input.shape()[0], ch = input.shape()[1], w = input.shape()[2];
  if (gamma.shape() != Shape{ch} || beta.shape() != Shape{ch} ||
      state.running_mean.shape() != Shape{ch} || state.running_var.shape() != Shape{ch}) {
    throw DimensionError("batchnorm1d: parameter shapes must be [" + std::to_string(ch) + "]");
  }
  const std::size_t count = batch * w;
  if (training && count < 2) throw DimensionError("batchnorm1d: need >1 value per channel");

  const double* x = input.value().data();
  std::vector<double> mu(ch), inv_std(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    if (training) {
      double m = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < w; ++t) m += x[(b * ch + c) * w + t];
      m /= static_cast<double>(count);
      double v = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < w; ++t) {
          const double d = x[(b * ch + c) * w + t] - m;
          v += d * d;
        }
      const double var_biased = v / static_cast<double>(count);
      const double var_unbiased = v / static_cast<double>(count - 1);
      mu[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var_biased + eps);
      state.running_mean[c] = (1.0 - momentum) * state.running_mean[c] + momentum * m;
      state.running_var[c] = (1.0 - momentum) * state.running_var[c] + momentum * var_unbiased;
    } else {
      mu[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + eps);
    }
  }

  Tensor xhat(input.shape());
  Tensor out(input.shape());
  const double* gm = gamma.value().data();
  const double* bt = beta.value().data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t t = 0; t < w; ++t) {
        const std::size_t i = (b * ch + c) * w + t;
        xhat[i] = (x[i] - mu[c]) * inv_std[c];
        out[i] = gm[c] * xhat[i] + bt[c];
      }

  return input.tape()->record(
      std::move(out), {input, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), batch, ch, w, count, training](
          const Tensor& g, BackwardContext& ctx) {
        const double* gm = ctx.input(1).data();
        std::vector<double> sum_g(ch, 0.0), sum_gx(ch, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t c = 0; c < ch; ++c)
            for (std::size_t t = 0; t < w; ++t) {
              const std::size_t i = (b * ch + c) * w + t;
              sum_g[c] += g[i];
              sum_gx[c] += g[i] * xhat[i];
            }
        if (ctx.needs_grad(1)) {
          double* gg = ctx.adjoint(1).data();
          for (std::size_t c = 0; c < ch; ++c) gg[c] += sum_gx[c];
        }
        if (ctx.needs_grad(2)) {
          double* gb = ctx.adjoint(2).data();
          for (std::size_t c = 0; c < ch; ++c) gb[c] += sum_g[c];
        }
        if (ctx.needs_grad(0)) {
          double* gx = ctx.adjoint(0).data();
          const double n = static_cast<double>(count);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < ch; ++c)
              for (std::size_t t = 0; t < w; ++t) {
                const std::size_t i = (b * ch + c) * w + t;
                if (training) {
                  gx[i] += gm[c] * inv_std[c] *
                           (g[i] - sum_g[c] / n - xhat[i] * sum_gx[c] / n);
                } else {
                  gx[i] += gm[c] * inv_std[c] * g[i];
                }
              }
        }
      });
}

Var softmax_nll(const Var& logits, std::span<const int> targets) {
  require_rank(logits, 2, "softmax_nll", "logits");
  const std::size_t batch = logits.shape()[0], k = logits.shape()[1];
  if (targets.size() != batch) {
    throw DimensionError("softmax_nll: " + std::to_string(targets.size()) + " targets for batch " +
                         std::to_string(batch));
  }
  const double* y = logits.value().data();
  Tensor probs(Shape{batch, k});
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int target = targets[b];
    if (target < 0 || static_cast<std::size_t>(target) >= k) {
      throw ValidationError("softmax_nll: target " + std::to_string(target) +
                            " outside class range [0," + std::to_string(k) + ")");
    }
    const double* row = y + b * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double log_z = std::log(z) + mx;
    for (std::size_t j = 0; j < k; ++j) probs[b * k + j] = std::exp(row[j] - log_z);
    loss += log_z - row[target];
  }
  loss /= static_cast<double>(batch);
  std::vector<int> tgt(targets.begin(), targets.end());
  return logits.tape()->record(
      Tensor::scalar(loss), {logits},
      [probs = std::move(probs), tgt = std::move(tgt), batch, k](const Tensor& g,
                                                                 BackwardContext& ctx) {
        double* gx = ctx.adjoint(0).data();
        const double s = g[0] / static_cast<double>(batch);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < k; ++j) {
            const double indicator = static_cast<int>(j) == tgt[b] ? 1.0 : 0.0;
            gx[b * k + j] += s * (probs[b * k + j] - indicator);
          }
        }
      });
}

Var logit_spread(const Var& logits, double sign) {
  require_rank(logits, 2, "logit_spread", "logits");
  const std::size_t batch = logits.shape()[0], k = logits.shape()[1];
  if (k < 2) throw ValidationError("logit_spread: need at least 2 classes");
  const double* y = logits.value().data();
  std::vector<double> norms(batch);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = y + b * k;
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const double d = row[i] - row[j];
        acc += d * d;
      }
    norms[b] = std::sqrt(acc);
    total += norms[b];
  }
  return logits.tape()->record(
      Tensor::scalar(sign * total), {logits},
      [norms = std::move(norms), batch, k, sign](const Tensor& g, BackwardContext& ctx) {
        const double* y = ctx.input(0).data();
        double* gx = ctx.adjoint(0).data();
        // d||Y||_F / dy_i = 2 k (y_i - mean(y)) / ||Y||_F
        for (std::size_t b = 0; b < batch; ++b) {
          if (norms[b] == 0.0) continue;
          const double* row = y + b * k;
          double m = 0.0;
          for (std::size_t i = 0; i < k; ++i) m += row[i];
          m /= static_cast<double>(k);
          const double f = sign * g[0] * 2.0 * static_cast<double>(k) / norms[b];
          for (std::size_t i = 0; i < k; ++i) gx[b * k + i] += f * (row[i] - m);
        }
      });
}

}  // namespace ecladts::ops
