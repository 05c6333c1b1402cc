#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "magcnn/grid.hpp"
#include "magcnn/rng.hpp"
#include "magcnn/tensor.hpp"

namespace magcnn {

inline constexpr double kLossEpsilon = 1e-12;

enum class Activation { kRelu, kLeakyRelu, kSigmoid, kSoftmax };

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// In-place softmax over a contiguous range, stabilized by max subtraction.
inline void softmax_inplace(double* begin, std::size_t count) {
  double max = begin[0];
  for (std::size_t i = 1; i < count; ++i) max = std::max(max, begin[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    begin[i] = std::exp(begin[i] - max);
    sum += begin[i];
  }
  for (std::size_t i = 0; i < count; ++i) begin[i] /= sum;
}

// SOFTMAX applies over the last dimension; the others are elementwise.
inline Tensor apply_activation(Activation kind, const Tensor& x,
                               double leaky_slope = 0.2) {
  Tensor out = x;
  switch (kind) {
    case Activation::kRelu:
      for (double& v : out.values) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kLeakyRelu:
      for (double& v : out.values) v = v > 0.0 ? v : leaky_slope * v;
      break;
    case Activation::kSigmoid:
      for (double& v : out.values) v = sigmoid(v);
      break;
    case Activation::kSoftmax: {
      if (out.rank() == 0 || out.dims.back() == 0) break;
      const std::size_t row = out.dims.back();
      for (std::size_t off = 0; off < out.size(); off += row) {
        softmax_inplace(out.values.data() + off, row);
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convolution layer 1: kernel width 3 (one motif row) across all d channels,
// horizontal stride 3, vertical stride 1. grid (W x 3N x d) -> (K1 x N x W).
// Subgraph column triples never mix.
// ---------------------------------------------------------------------------

inline void conv_layer1_forward(const GridTensor& grid, const Tensor& kernels,
                                const Tensor& bias, Tensor& pre,
                                Tensor& post) {
  if (kernels.rank() != 3 || kernels.dims[1] != 3 ||
      kernels.dims[2] != static_cast<std::size_t>(grid.channels)) {
    throw ShapeError("conv1: kernels " + shape_string(kernels) +
                     " incompatible with grid channels d=" +
                     std::to_string(grid.channels));
  }
  if (bias.size() != kernels.dims[0]) {
    throw ShapeError("conv1: bias " + shape_string(bias) +
                     " does not match kernel count " +
                     std::to_string(kernels.dims[0]));
  }
  if (grid.cols % 3 != 0) throw ShapeError("conv1: grid columns not 3N");
  const std::size_t k1 = kernels.dims[0];
  const std::size_t n = static_cast<std::size_t>(grid.cols) / 3;
  const std::size_t w = static_cast<std::size_t>(grid.rows);
  const std::size_t d = static_cast<std::size_t>(grid.channels);
  pre = Tensor({k1, n, w});
  for (std::size_t k = 0; k < k1; ++k) {
    const double* kern = kernels.data() + k * 3 * d;
    const double b = bias.values[k];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < w; ++r) {
        const double* cell = grid.values.data() + (r * n * 3 + i * 3) * d;
        double acc = b;
        for (std::size_t sd = 0; sd < 3 * d; ++sd) acc += kern[sd] * cell[sd];
        pre.at3(k, i, r) = acc;
      }
    }
  }
  post = pre;
  for (double& v : post.values) v = v > 0.0 ? v : 0.0;
}

inline void conv_layer1_backward(const GridTensor& grid, const Tensor& pre,
                                 const Tensor& d_post, Tensor& d_kernels,
                                 Tensor& d_bias) {
  const std::size_t k1 = pre.dims[0];
  const std::size_t n = pre.dims[1];
  const std::size_t w = pre.dims[2];
  const std::size_t d = static_cast<std::size_t>(grid.channels);
  for (std::size_t k = 0; k < k1; ++k) {
    double* dk = d_kernels.data() + k * 3 * d;
    double db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < w; ++r) {
        if (pre.at3(k, i, r) <= 0.0) continue;
        const double gpre = d_post.at3(k, i, r);
        db += gpre;
        const double* cell = grid.values.data() + (r * n * 3 + i * 3) * d;
        for (std::size_t sd = 0; sd < 3 * d; ++sd) dk[sd] += gpre * cell[sd];
      }
    }
    d_bias.values[k] += db;
  }
}

// ---------------------------------------------------------------------------
// Convolution layer 2: kernel spans 3 consecutive rows and all K1 channels
// of one subgraph column; vertical stride 3, horizontal stride 1.
// fmap (K1 x N x W) -> (N x K2 x T), T = W/3. No pooling anywhere.
// ---------------------------------------------------------------------------

inline void conv_layer2_forward(const Tensor& fmap, const Tensor& kernels,
                                const Tensor& bias, Tensor& pre,
                                Tensor& post) {
  if (fmap.dims[2] % 3 != 0) {
    throw ConfigError("conv2: feature-map height not divisible by 3");
  }
  if (kernels.rank() != 3 || kernels.dims[1] != fmap.dims[0] ||
      kernels.dims[2] != 3) {
    throw ShapeError("conv2: kernels " + shape_string(kernels) +
                     " incompatible with feature map " + shape_string(fmap));
  }
  if (bias.size() != kernels.dims[0]) {
    throw ShapeError("conv2: bias " + shape_string(bias) +
                     " does not match kernel count " +
                     std::to_string(kernels.dims[0]));
  }
  const std::size_t k1 = fmap.dims[0];
  const std::size_t n = fmap.dims[1];
  const std::size_t w = fmap.dims[2];
  const std::size_t k2 = kernels.dims[0];
  const std::size_t t = w / 3;
  pre = Tensor({n, k2, t});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < k2; ++k) {
      for (std::size_t tt = 0; tt < t; ++tt) {
        double acc = bias.values[k];
        for (std::size_t q = 0; q < k1; ++q) {
          const double* f = fmap.values.data() + (q * n + i) * w + 3 * tt;
          const double* kern = kernels.data() + (k * k1 + q) * 3;
          acc += kern[0] * f[0] + kern[1] * f[1] + kern[2] * f[2];
        }
        pre.at3(i, k, tt) = acc;
      }
    }
  }
  post = pre;
  for (double& v : post.values) v = v > 0.0 ? v : 0.0;
}

inline void conv_layer2_backward(const Tensor& fmap, const Tensor& kernels,
                                 const Tensor& pre, const Tensor& d_post,
                                 Tensor& d_kernels, Tensor& d_bias,
                                 Tensor& d_fmap) {
  const std::size_t k1 = fmap.dims[0];
  const std::size_t n = fmap.dims[1];
  const std::size_t w = fmap.dims[2];
  const std::size_t k2 = kernels.dims[0];
  const std::size_t t = w / 3;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < k2; ++k) {
      for (std::size_t tt = 0; tt < t; ++tt) {
        if (pre.at3(i, k, tt) <= 0.0) continue;
        const double gpre = d_post.at3(i, k, tt);
        d_bias.values[k] += gpre;
        for (std::size_t q = 0; q < k1; ++q) {
          const double* f = fmap.values.data() + (q * n + i) * w + 3 * tt;
          double* df = d_fmap.values.data() + (q * n + i) * w + 3 * tt;
          const double* kern = kernels.data() + (k * k1 + q) * 3;
          double* dkern = d_kernels.data() + (k * k1 + q) * 3;
          for (int j = 0; j < 3; ++j) {
            dkern[j] += gpre * f[j];
            df[j] += gpre * kern[j];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Dense layer: y = W x + b with W of shape (out x in).
// ---------------------------------------------------------------------------

inline void affine_forward(const std::vector<double>& x, const Tensor& weight,
                           const Tensor& bias, std::vector<double>& y) {
  const std::size_t out = weight.dims[0];
  const std::size_t in = weight.dims[1];
  if (x.size() != in) {
    throw ShapeError("affine: input length " + std::to_string(x.size()) +
                     " != weight columns " + std::to_string(in));
  }
  if (bias.size() != out) {
    throw ShapeError("affine: bias " + shape_string(bias) +
                     " does not match weight rows " + std::to_string(out));
  }
  y.assign(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double* wrow = weight.data() + o * in;
    double acc = bias.values[o];
    for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * x[i];
    y[o] = acc;
  }
}

inline void affine_backward(const std::vector<double>& x,
                            const Tensor& weight,
                            const std::vector<double>& d_y, Tensor& d_weight,
                            Tensor& d_bias, std::vector<double>& d_x) {
  const std::size_t out = weight.dims[0];
  const std::size_t in = weight.dims[1];
  d_x.assign(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double g = d_y[o];
    d_bias.values[o] += g;
    const double* wrow = weight.data() + o * in;
    double* dwrow = d_weight.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      dwrow[i] += g * x[i];
      d_x[i] += g * wrow[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

inline double cross_entropy(const std::vector<double>& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw ArgumentError("cross_entropy: label " + std::to_string(label) +
                        " out of range");
  }
  return -std::log(probs[static_cast<std::size_t>(label)] + kLossEpsilon);
}

// d(-log(p_y + eps))/d(logits) through the softmax, exact in eps.
inline std::vector<double> softmax_xent_logit_grad(
    const std::vector<double>& probs, int label) {
  const double py = probs[static_cast<std::size_t>(label)];
  const double factor = py / (py + kLossEpsilon);
  std::vector<double> dz(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c) {
    dz[c] = factor *
            (probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
  }
  return dz;
}

// ---------------------------------------------------------------------------
// Dropout: inverted scaling, mask entries are 0 or 1/keep.
// ---------------------------------------------------------------------------

inline std::vector<double> make_dropout_scale(Rng& rng, std::size_t count,
                                              double keep) {
  if (keep <= 0.0 || keep > 1.0) {
    throw ConfigError("dropout keep probability must be in (0, 1]");
  }
  std::vector<double> scale(count, 1.0);
  if (keep == 1.0) return scale;
  const double inv = 1.0 / keep;
  for (double& s : scale) s = rng.uniform() < keep ? inv : 0.0;
  return scale;
}

// ---------------------------------------------------------------------------
// Momentum SGD: v <- momentum * v - lr * g; theta <- theta + v.
// Gradients already carry the L2 term, so no decay is applied here.
// ---------------------------------------------------------------------------

struct SgdHyper {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 0.01;  // consumed by the gradient computation
};

struct OptimizerState {
  SgdHyper hyper;
  std::vector<Tensor> velocity;

  static OptimizerState init(const SgdHyper& hyper,
                             const std::vector<const Tensor*>& params) {
    OptimizerState state;
    state.hyper = hyper;
    state.velocity.reserve(params.size());
    for (const Tensor* p : params) state.velocity.emplace_back(p->dims);
    return state;
  }
};

inline void sgd_momentum_step(OptimizerState& state,
                              const std::vector<Tensor*>& params,
                              const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size() ||
      params.size() != state.velocity.size()) {
    throw ShapeError("sgd: parameter/gradient/velocity count mismatch");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    require_same_shape(*params[t], *grads[t], "sgd");
    require_same_shape(*params[t], state.velocity[t], "sgd");
    Tensor& v = state.velocity[t];
    Tensor& p = *params[t];
    const Tensor& g = *grads[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      v.values[i] = state.hyper.momentum * v.values[i] -
                    state.hyper.learning_rate * g.values[i];
      p.values[i] += v.values[i];
    }
  }
}

}  // namespace magcnn
