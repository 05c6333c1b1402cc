#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "magcnn/nn.hpp"

namespace magcnn {

enum class ModelKind { kMgcnn, kMagcnn };

inline const char* model_kind_name(ModelKind kind) {
  return kind == ModelKind::kMgcnn ? "mgcnn" : "magcnn";
}

struct ModelDims {
  int subgraphs = 0;      // N
  int grid_rows = 0;      // W = w1+w2+w3
  int channels = 0;       // d
  int conv1_kernels = 0;  // K1
  int conv2_kernels = 0;  // K2
  int fc1 = 128;          // F1 (dense head only)
  int fc2 = 64;           // F2
  int heads = 8;          // S (attention head only)
  int classes = 0;        // C; also F' of each attention head
  double leaky_slope = 0.2;

  int row_triples() const { return grid_rows / 3; }          // T
  int subgraph_vector() const {                              // F = K2 * T
    return conv2_kernels * row_triples();
  }
  int flat_size() const { return subgraphs * subgraph_vector(); }

  void validate() const {
    if (subgraphs < 2) throw ConfigError("model: N must be >= 2");
    if (grid_rows < 3 || grid_rows % 3 != 0) {
      throw ConfigError("model: grid rows must be a positive multiple of 3");
    }
    if (channels < 1 || conv1_kernels < 1 || conv2_kernels < 1) {
      throw ConfigError("model: d, K1, K2 must be positive");
    }
    if (classes < 2) throw ConfigError("model: class count must be >= 2");
  }
};

// One self-attention head: W (F' x F) projects subgraph vectors, a (2F')
// scores concatenated projected pairs. F' equals the class count, so summing
// attended outputs over subgraphs yields class scores directly.
struct AttentionHead {
  Tensor weight;  // (C, F)
  Tensor attn;    // (2C)
};

struct ModelParams {
  ModelKind kind = ModelKind::kMgcnn;
  ModelDims dims;

  Tensor conv1_kernel;  // (K1, 3, d)
  Tensor conv1_bias;    // (K1)
  Tensor conv2_kernel;  // (K2, K1, 3)
  Tensor conv2_bias;    // (K2)

  // dense head (M-GCNN)
  Tensor fc1_weight, fc1_bias;  // (F1, N*K2*T), (F1)
  Tensor fc2_weight, fc2_bias;  // (F2, F1), (F2)
  Tensor out_weight, out_bias;  // (C, F2), (C)

  // attention head (MA-GCNN)
  std::vector<AttentionHead> heads;

  struct NamedTensor {
    std::string name;
    Tensor* tensor;
    bool decay;  // weight decay applies (kernels/weights, not biases)
  };

  std::vector<NamedTensor> named_tensors() {
    std::vector<NamedTensor> out{
        {"conv1.kernel", &conv1_kernel, true},
        {"conv1.bias", &conv1_bias, false},
        {"conv2.kernel", &conv2_kernel, true},
        {"conv2.bias", &conv2_bias, false},
    };
    if (kind == ModelKind::kMgcnn) {
      out.push_back({"fc1.weight", &fc1_weight, true});
      out.push_back({"fc1.bias", &fc1_bias, false});
      out.push_back({"fc2.weight", &fc2_weight, true});
      out.push_back({"fc2.bias", &fc2_bias, false});
      out.push_back({"out.weight", &out_weight, true});
      out.push_back({"out.bias", &out_bias, false});
    } else {
      for (std::size_t s = 0; s < heads.size(); ++s) {
        out.push_back({"att" + std::to_string(s) + ".W", &heads[s].weight,
                       true});
        out.push_back({"att" + std::to_string(s) + ".a", &heads[s].attn,
                       true});
      }
    }
    return out;
  }

  std::vector<NamedTensor> named_tensors() const {
    return const_cast<ModelParams*>(this)->named_tensors();
  }

  // Same tensor shapes, all zeros; used as a gradient holder.
  ModelParams zeros_like() const {
    ModelParams g = *this;
    for (auto& nt : g.named_tensors()) nt.tensor->zero();
    return g;
  }
};

namespace detail {

inline void fill_uniform(Tensor& t, double half_width, Rng& rng) {
  for (double& v : t.values) v = rng.uniform(-half_width, half_width);
}

inline double glorot(double fan_in, double fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

}  // namespace detail

// Zero biases; weights uniform in +-sqrt(6/(fan_in+fan_out)), drawn from the
// run's generator in declaration order.
inline ModelParams init_params(ModelKind kind, const ModelDims& dims,
                               Rng& rng) {
  dims.validate();
  ModelParams p;
  p.kind = kind;
  p.dims = dims;
  const std::size_t k1 = static_cast<std::size_t>(dims.conv1_kernels);
  const std::size_t k2 = static_cast<std::size_t>(dims.conv2_kernels);
  const std::size_t d = static_cast<std::size_t>(dims.channels);
  const std::size_t c = static_cast<std::size_t>(dims.classes);
  const std::size_t f = static_cast<std::size_t>(dims.subgraph_vector());

  p.conv1_kernel = Tensor({k1, 3, d});
  p.conv1_bias = Tensor({k1});
  detail::fill_uniform(p.conv1_kernel, detail::glorot(3.0 * d, 3.0 * k1),
                       rng);
  p.conv2_kernel = Tensor({k2, k1, 3});
  p.conv2_bias = Tensor({k2});
  detail::fill_uniform(p.conv2_kernel, detail::glorot(3.0 * k1, 3.0 * k2),
                       rng);

  if (kind == ModelKind::kMgcnn) {
    const std::size_t flat = static_cast<std::size_t>(dims.flat_size());
    const std::size_t f1 = static_cast<std::size_t>(dims.fc1);
    const std::size_t f2 = static_cast<std::size_t>(dims.fc2);
    p.fc1_weight = Tensor({f1, flat});
    p.fc1_bias = Tensor({f1});
    detail::fill_uniform(p.fc1_weight, detail::glorot(flat, f1), rng);
    p.fc2_weight = Tensor({f2, f1});
    p.fc2_bias = Tensor({f2});
    detail::fill_uniform(p.fc2_weight, detail::glorot(f1, f2), rng);
    p.out_weight = Tensor({c, f2});
    p.out_bias = Tensor({c});
    detail::fill_uniform(p.out_weight, detail::glorot(f2, c), rng);
  } else {
    if (dims.heads < 1) throw ConfigError("model: S must be >= 1");
    p.heads.resize(static_cast<std::size_t>(dims.heads));
    for (auto& head : p.heads) {
      head.weight = Tensor({c, f});
      detail::fill_uniform(head.weight, detail::glorot(f, c), rng);
      head.attn = Tensor({2 * c});
      detail::fill_uniform(head.attn, detail::glorot(2.0 * c, 1.0), rng);
    }
  }
  return p;
}

// Per-graph dropout masks, fixed for the duration of one gradient
// computation. Meaning depends on the model: dense head uses fc1/fc2 ones,
// the attention head masks the subgraph vectors.
struct DropoutMasks {
  std::vector<double> fc1, fc2;  // (F1), (F2)
  std::vector<double> h;         // (N*F)
};

inline DropoutMasks make_dropout_masks(ModelKind kind, const ModelDims& dims,
                                       double keep, Rng& rng) {
  DropoutMasks m;
  if (kind == ModelKind::kMgcnn) {
    m.fc1 = make_dropout_scale(rng, static_cast<std::size_t>(dims.fc1), keep);
    m.fc2 = make_dropout_scale(rng, static_cast<std::size_t>(dims.fc2), keep);
  } else {
    m.h = make_dropout_scale(
        rng, static_cast<std::size_t>(dims.flat_size()), keep);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Attention pieces (exposed for direct use and tests)
// ---------------------------------------------------------------------------

// (N x K2 x T) feature map -> N subgraph vectors of length F = K2*T, each
// the (channel, position) flattening of its slice.
inline Tensor subgraph_features(const Tensor& fmap) {
  if (fmap.rank() != 3) {
    throw ShapeError("subgraph_features: expected rank-3 feature map, got " +
                     shape_string(fmap));
  }
  Tensor h({fmap.dims[0], fmap.dims[1] * fmap.dims[2]});
  h.values = fmap.values;
  return h;
}

// Row-stochastic attention coefficients, Eq.-style: softmax over j != i of
// LeakyReLU(a . [W h_i || W h_j]); the diagonal stays zero.
struct AttentionTrace {
  Tensor projected;  // U = H W^T, (N, C)
  Tensor raw;        // r_ij before LeakyReLU, (N, N)
  Tensor alpha;      // (N, N)
};

inline void attention_coefficients_traced(const Tensor& h,
                                          const AttentionHead& head,
                                          double leaky_slope,
                                          AttentionTrace& trace) {
  const std::size_t n = h.dims[0];
  const std::size_t f = h.dims[1];
  const std::size_t c = head.weight.dims[0];
  if (n < 2) {
    throw ConfigError("attention needs at least two subgraphs");
  }
  if (head.weight.dims[1] != f || head.attn.dims[0] != 2 * c) {
    throw ShapeError("attention head shapes inconsistent with input " +
                     shape_string(h));
  }
  trace.projected = Tensor({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    const double* hi = h.data() + i * f;
    for (std::size_t o = 0; o < c; ++o) {
      const double* wrow = head.weight.data() + o * f;
      double acc = 0.0;
      for (std::size_t q = 0; q < f; ++q) acc += wrow[q] * hi[q];
      trace.projected.at2(i, o) = acc;
    }
  }
  // a . [U_i || U_j] = a_left . U_i + a_right . U_j
  std::vector<double> left(n, 0.0), right(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double l = 0.0, r = 0.0;
    for (std::size_t o = 0; o < c; ++o) {
      l += head.attn.values[o] * trace.projected.at2(i, o);
      r += head.attn.values[c + o] * trace.projected.at2(i, o);
    }
    left[i] = l;
    right[i] = r;
  }
  trace.raw = Tensor({n, n});
  trace.alpha = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    double row_max = -HUGE_VAL;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double raw = left[i] + right[j];
      trace.raw.at2(i, j) = raw;
      const double e = raw > 0.0 ? raw : leaky_slope * raw;
      trace.alpha.at2(i, j) = e;
      row_max = std::max(row_max, e);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double e = std::exp(trace.alpha.at2(i, j) - row_max);
      trace.alpha.at2(i, j) = e;
      denom += e;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      trace.alpha.at2(i, j) /= denom;
    }
  }
}

inline Tensor attention_coefficients(const Tensor& h,
                                     const AttentionHead& head,
                                     double leaky_slope = 0.2) {
  AttentionTrace trace;
  attention_coefficients_traced(h, head, leaky_slope, trace);
  return trace.alpha;
}

// h'_i = sigmoid((1/S) sum_s sum_{t != i} alpha^s_it W^s h_t); (N, C).
inline Tensor attention_output(const Tensor& h,
                               const std::vector<AttentionHead>& heads,
                               double leaky_slope = 0.2) {
  const std::size_t n = h.dims[0];
  const std::size_t c = heads.front().weight.dims[0];
  Tensor pre({n, c});
  for (const AttentionHead& head : heads) {
    AttentionTrace trace;
    attention_coefficients_traced(h, head, leaky_slope, trace);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < n; ++t) {
        if (t == i) continue;
        const double a = trace.alpha.at2(i, t);
        for (std::size_t o = 0; o < c; ++o) {
          pre.at2(i, o) += a * trace.projected.at2(t, o);
        }
      }
    }
  }
  const double inv_s = 1.0 / static_cast<double>(heads.size());
  for (double& v : pre.values) v = sigmoid(inv_s * v);
  return pre;
}

// ---------------------------------------------------------------------------
// Forward traces
// ---------------------------------------------------------------------------

struct ForwardTrace {
  Tensor conv1_pre, conv1_post;  // (K1, N, W)
  Tensor conv2_pre, conv2_post;  // (N, K2, T)

  // dense head
  std::vector<double> flat, fc1_pre, fc1_post, fc1_dropped;
  std::vector<double> fc2_pre, fc2_post, fc2_dropped;

  // attention head
  Tensor h_dropped;                   // (N, F)
  std::vector<AttentionTrace> heads;  // per head
  Tensor attn_pre;                    // (N, C) pre-sigmoid averages
  Tensor attn_out;                    // (N, C) = h'

  std::vector<double> logits, probs;  // (C)
};

inline void check_grid_dims(const GridTensor& grid, const ModelDims& dims) {
  if (grid.rows != dims.grid_rows || grid.cols != 3 * dims.subgraphs ||
      grid.channels != dims.channels) {
    throw ShapeError("grid " + std::to_string(grid.rows) + "x" +
                     std::to_string(grid.cols) + "x" +
                     std::to_string(grid.channels) +
                     " does not match model dims " +
                     std::to_string(dims.grid_rows) + "x" +
                     std::to_string(3 * dims.subgraphs) + "x" +
                     std::to_string(dims.channels));
  }
}

// Forward pass for either model. `masks` enables training mode (inverted
// dropout with the given fixed masks); null means evaluation.
inline void model_forward(const ModelParams& params, const GridTensor& grid,
                          const DropoutMasks* masks, ForwardTrace& trace) {
  const ModelDims& dims = params.dims;
  check_grid_dims(grid, dims);
  conv_layer1_forward(grid, params.conv1_kernel, params.conv1_bias,
                      trace.conv1_pre, trace.conv1_post);
  conv_layer2_forward(trace.conv1_post, params.conv2_kernel,
                      params.conv2_bias, trace.conv2_pre, trace.conv2_post);
  const std::size_t n = static_cast<std::size_t>(dims.subgraphs);
  const std::size_t f = static_cast<std::size_t>(dims.subgraph_vector());

  if (params.kind == ModelKind::kMgcnn) {
    trace.flat = trace.conv2_post.values;  // (N*K2*T), row-major
    affine_forward(trace.flat, params.fc1_weight, params.fc1_bias,
                   trace.fc1_pre);
    trace.fc1_post = trace.fc1_pre;
    for (double& v : trace.fc1_post) v = v > 0.0 ? v : 0.0;
    trace.fc1_dropped = trace.fc1_post;
    if (masks) {
      for (std::size_t i = 0; i < trace.fc1_dropped.size(); ++i) {
        trace.fc1_dropped[i] *= masks->fc1[i];
      }
    }
    affine_forward(trace.fc1_dropped, params.fc2_weight, params.fc2_bias,
                   trace.fc2_pre);
    trace.fc2_post = trace.fc2_pre;
    for (double& v : trace.fc2_post) v = v > 0.0 ? v : 0.0;
    trace.fc2_dropped = trace.fc2_post;
    if (masks) {
      for (std::size_t i = 0; i < trace.fc2_dropped.size(); ++i) {
        trace.fc2_dropped[i] *= masks->fc2[i];
      }
    }
    affine_forward(trace.fc2_dropped, params.out_weight, params.out_bias,
                   trace.logits);
  } else {
    // subgraph vectors: h_i = conv2_post[i] flattened (channel, position)
    trace.h_dropped = Tensor({n, f});
    trace.h_dropped.values = trace.conv2_post.values;
    if (masks) {
      for (std::size_t i = 0; i < trace.h_dropped.values.size(); ++i) {
        trace.h_dropped.values[i] *= masks->h[i];
      }
    }
    const std::size_t s_count = params.heads.size();
    trace.heads.assign(s_count, {});
    const std::size_t c = static_cast<std::size_t>(dims.classes);
    trace.attn_pre = Tensor({n, c});
    for (std::size_t s = 0; s < s_count; ++s) {
      attention_coefficients_traced(trace.h_dropped, params.heads[s],
                                    dims.leaky_slope, trace.heads[s]);
      const AttentionTrace& at = trace.heads[s];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < n; ++t) {
          if (t == i) continue;
          const double a = at.alpha.at2(i, t);
          for (std::size_t o = 0; o < c; ++o) {
            trace.attn_pre.at2(i, o) += a * at.projected.at2(t, o);
          }
        }
      }
    }
    const double inv_s = 1.0 / static_cast<double>(s_count);
    for (double& v : trace.attn_pre.values) v *= inv_s;
    trace.attn_out = trace.attn_pre;
    for (double& v : trace.attn_out.values) v = sigmoid(v);
    // class scores: sum the per-subgraph output features
    trace.logits.assign(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < c; ++o) {
        trace.logits[o] += trace.attn_out.at2(i, o);
      }
    }
  }
  trace.probs = trace.logits;
  softmax_inplace(trace.probs.data(), trace.probs.size());
}

inline std::vector<double> model_forward(const ModelParams& params,
                                         const GridTensor& grid) {
  ForwardTrace trace;
  model_forward(params, grid, nullptr, trace);
  return trace.probs;
}

// Deterministic argmax with smallest-index tie-break.
inline int predict_class(const std::vector<double>& probs) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c) {
    if (probs[static_cast<std::size_t>(c)] >
        probs[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

namespace detail {

inline void backward_one_graph(const ModelParams& params,
                               const GridTensor& grid,
                               const ForwardTrace& trace,
                               const DropoutMasks* masks, int label,
                               double scale, ModelParams& grads) {
  const ModelDims& dims = params.dims;
  std::vector<double> d_logits =
      softmax_xent_logit_grad(trace.probs, label);
  for (double& v : d_logits) v *= scale;

  Tensor d_conv2_post(trace.conv2_post.dims);

  if (params.kind == ModelKind::kMgcnn) {
    std::vector<double> d_fc2_dropped;
    affine_backward(trace.fc2_dropped, params.out_weight, d_logits,
                    grads.out_weight, grads.out_bias, d_fc2_dropped);
    std::vector<double> d_fc2_post = std::move(d_fc2_dropped);
    if (masks) {
      for (std::size_t i = 0; i < d_fc2_post.size(); ++i) {
        d_fc2_post[i] *= masks->fc2[i];
      }
    }
    for (std::size_t i = 0; i < d_fc2_post.size(); ++i) {
      if (trace.fc2_pre[i] <= 0.0) d_fc2_post[i] = 0.0;
    }
    std::vector<double> d_fc1_dropped;
    affine_backward(trace.fc1_dropped, params.fc2_weight, d_fc2_post,
                    grads.fc2_weight, grads.fc2_bias, d_fc1_dropped);
    std::vector<double> d_fc1_post = std::move(d_fc1_dropped);
    if (masks) {
      for (std::size_t i = 0; i < d_fc1_post.size(); ++i) {
        d_fc1_post[i] *= masks->fc1[i];
      }
    }
    for (std::size_t i = 0; i < d_fc1_post.size(); ++i) {
      if (trace.fc1_pre[i] <= 0.0) d_fc1_post[i] = 0.0;
    }
    std::vector<double> d_flat;
    affine_backward(trace.flat, params.fc1_weight, d_fc1_post,
                    grads.fc1_weight, grads.fc1_bias, d_flat);
    d_conv2_post.values = std::move(d_flat);
  } else {
    const std::size_t n = static_cast<std::size_t>(dims.subgraphs);
    const std::size_t c = static_cast<std::size_t>(dims.classes);
    const std::size_t f = static_cast<std::size_t>(dims.subgraph_vector());
    const std::size_t s_count = params.heads.size();
    const double inv_s = 1.0 / static_cast<double>(s_count);

    // d logits -> d h'_i (same for every i) -> d pre-sigmoid
    Tensor d_attn_pre({n, c});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < c; ++o) {
        const double y = trace.attn_out.at2(i, o);
        d_attn_pre.at2(i, o) = d_logits[o] * y * (1.0 - y);
      }
    }

    Tensor d_h({n, f});
    for (std::size_t s = 0; s < s_count; ++s) {
      const AttentionTrace& at = trace.heads[s];
      const AttentionHead& head = params.heads[s];
      AttentionHead& d_head_w = grads.heads[s];

      // pre_i includes (1/S) * sum_t alpha_it U_t
      Tensor d_u({n, c});
      Tensor d_alpha({n, n});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < n; ++t) {
          if (t == i) continue;
          const double a = at.alpha.at2(i, t);
          double da = 0.0;
          for (std::size_t o = 0; o < c; ++o) {
            const double dm = d_attn_pre.at2(i, o) * inv_s;
            da += dm * at.projected.at2(t, o);
            d_u.at2(t, o) += dm * a;
          }
          d_alpha.at2(i, t) = da;
        }
      }
      // softmax rows (excluding the diagonal)
      Tensor d_raw({n, n});
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == i) continue;
          dot += d_alpha.at2(i, k) * at.alpha.at2(i, k);
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const double de =
              at.alpha.at2(i, j) * (d_alpha.at2(i, j) - dot);
          const double slope =
              at.raw.at2(i, j) > 0.0 ? 1.0 : dims.leaky_slope;
          d_raw.at2(i, j) = de * slope;
        }
      }
      // raw_ij = a_left . U_i + a_right . U_j
      std::vector<double> d_left(n, 0.0), d_right(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          d_left[i] += d_raw.at2(i, j);
          d_right[j] += d_raw.at2(i, j);
        }
      }
      Tensor& d_attn_vec = d_head_w.attn;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < c; ++o) {
          d_attn_vec.values[o] += d_left[i] * at.projected.at2(i, o);
          d_attn_vec.values[c + o] += d_right[i] * at.projected.at2(i, o);
          d_u.at2(i, o) += d_left[i] * head.attn.values[o] +
                           d_right[i] * head.attn.values[c + o];
        }
      }
      // U = Hd W^T
      for (std::size_t i = 0; i < n; ++i) {
        const double* hrow = trace.h_dropped.data() + i * f;
        for (std::size_t o = 0; o < c; ++o) {
          const double g = d_u.at2(i, o);
          if (g == 0.0) continue;
          double* wgrad = d_head_w.weight.data() + o * f;
          const double* wrow = head.weight.data() + o * f;
          double* dh = d_h.data() + i * f;
          for (std::size_t q = 0; q < f; ++q) {
            wgrad[q] += g * hrow[q];
            dh[q] += g * wrow[q];
          }
        }
      }
    }
    if (masks) {
      for (std::size_t i = 0; i < d_h.values.size(); ++i) {
        d_h.values[i] *= masks->h[i];
      }
    }
    d_conv2_post.values = std::move(d_h.values);
  }

  Tensor d_conv1_post(trace.conv1_post.dims);
  conv_layer2_backward(trace.conv1_post, params.conv2_kernel,
                       trace.conv2_pre, d_conv2_post, grads.conv2_kernel,
                       grads.conv2_bias, d_conv1_post);
  conv_layer1_backward(grid, trace.conv1_pre, d_conv1_post,
                       grads.conv1_kernel, grads.conv1_bias);
}

}  // namespace detail

// Mean cross-entropy over the batch plus (weight_decay/2) * ||weights||^2.
// Dropout masks are fixed per call, one per graph, so the function being
// differentiated is deterministic. Pass grads = nullptr for loss only.
inline double model_batch_loss(const ModelParams& params,
                               const std::vector<const GridTensor*>& grids,
                               const std::vector<int>& labels,
                               const std::vector<DropoutMasks>* masks,
                               double weight_decay, ModelParams* grads) {
  if (grids.empty() || grids.size() != labels.size()) {
    throw ArgumentError("batch: grids/labels size mismatch");
  }
  if (masks && masks->size() != grids.size()) {
    throw ArgumentError("batch: one dropout mask set per graph required");
  }
  const double scale = 1.0 / static_cast<double>(grids.size());
  double loss = 0.0;
  ForwardTrace trace;
  for (std::size_t b = 0; b < grids.size(); ++b) {
    const DropoutMasks* m = masks ? &(*masks)[b] : nullptr;
    model_forward(params, *grids[b], m, trace);
    for (double z : trace.logits) {
      if (!std::isfinite(z)) {
        throw NumericError(std::string("non-finite logits after the ") +
                           (params.kind == ModelKind::kMgcnn
                                ? "dense output layer"
                                : "attention head"));
      }
    }
    loss += scale * cross_entropy(trace.probs, labels[b]);
    if (grads) {
      detail::backward_one_graph(params, *grids[b], trace, m, labels[b],
                                 scale, *grads);
    }
  }
  if (weight_decay != 0.0) {
    auto named = params.named_tensors();
    auto grad_named = grads ? grads->named_tensors()
                            : std::vector<ModelParams::NamedTensor>{};
    for (std::size_t t = 0; t < named.size(); ++t) {
      if (!named[t].decay) continue;
      const Tensor& w = *named[t].tensor;
      double sq = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        sq += w.values[i] * w.values[i];
        if (grads) {
          grad_named[t].tensor->values[i] += weight_decay * w.values[i];
        }
      }
      loss += 0.5 * weight_decay * sq;
    }
  }
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss in " +
                       std::string(model_kind_name(params.kind)));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification
// ---------------------------------------------------------------------------

struct FdReport {
  struct Entry {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t checked = 0;
  };
  std::vector<Entry> per_tensor;
  double max_rel_err = 0.0;
};

// Smallest |preactivation| over every ReLU / LeakyReLU kink reached by the
// batch. Central differences straddle a kink whenever this falls below the
// step size, producing bogus mismatches against a correct gradient; pick an
// evaluation point where the distance clears the step by a safe factor.
inline double kink_distance(const ModelParams& params,
                            const std::vector<const GridTensor*>& grids,
                            const std::vector<DropoutMasks>* masks) {
  double closest = HUGE_VAL;
  auto scan = [&closest](const std::vector<double>& values) {
    for (double v : values) closest = std::min(closest, std::abs(v));
  };
  ForwardTrace trace;
  for (std::size_t b = 0; b < grids.size(); ++b) {
    model_forward(params, *grids[b], masks ? &(*masks)[b] : nullptr, trace);
    scan(trace.conv1_pre.values);
    scan(trace.conv2_pre.values);
    if (params.kind == ModelKind::kMgcnn) {
      scan(trace.fc1_pre);
      scan(trace.fc2_pre);
    } else {
      const std::size_t n = static_cast<std::size_t>(params.dims.subgraphs);
      for (const AttentionTrace& at : trace.heads) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (i != j) closest = std::min(closest,
                                           std::abs(at.raw.at2(i, j)));
          }
        }
      }
    }
  }
  return closest;
}

// Central differences against the analytic gradients. All coordinates for
// tensors up to 500 entries, 100 sampled coordinates otherwise.
inline FdReport finite_difference_check(
    ModelParams& params, const std::vector<const GridTensor*>& grids,
    const std::vector<int>& labels, const std::vector<DropoutMasks>* masks,
    double weight_decay, double step, Rng& coord_rng) {
  ModelParams grads = params.zeros_like();
  model_batch_loss(params, grids, labels, masks, weight_decay, &grads);

  FdReport report;
  auto named = params.named_tensors();
  auto grad_named = grads.named_tensors();
  for (std::size_t t = 0; t < named.size(); ++t) {
    Tensor& tensor = *named[t].tensor;
    const Tensor& grad = *grad_named[t].tensor;
    std::vector<std::size_t> coords;
    if (tensor.size() <= 500) {
      coords.resize(tensor.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      coords.reserve(100);
      for (int i = 0; i < 100; ++i) {
        coords.push_back(static_cast<std::size_t>(
            coord_rng.below(static_cast<std::uint64_t>(tensor.size()))));
      }
    }
    FdReport::Entry entry;
    entry.name = named[t].name;
    entry.checked = coords.size();
    for (std::size_t idx : coords) {
      const double saved = tensor.values[idx];
      tensor.values[idx] = saved + step;
      const double up = model_batch_loss(params, grids, labels, masks,
                                         weight_decay, nullptr);
      tensor.values[idx] = saved - step;
      const double down = model_batch_loss(params, grids, labels, masks,
                                           weight_decay, nullptr);
      tensor.values[idx] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = grad.values[idx];
      const double rel =
          std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_tensor.push_back(std::move(entry));
  }
  return report;
}

}  // namespace magcnn
