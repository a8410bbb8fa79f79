#pragma once

// Gated recurrent cell shared by the policy network and the neural detector.
//
//   z      = W [x; h_prev] + b           (W is 4H x (I + H), row-major)
//   i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)
//   g      = tanh(z_g)
//   c      = f * c_prev + i * g
//   h      = o * tanh(c)
//
// Gate blocks are stored in the order input, forget, cell, output.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rng.hpp"

namespace pkdga {

enum Gate : std::size_t { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };

template <typename T>
struct LstmLayer {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<T> w;     // 4H x (I + H)
  std::vector<T> bias;  // 4H

  LstmLayer() = default;
  LstmLayer(std::size_t in, std::size_t hidden)
      : input_dim(in), hidden_dim(hidden), w(4 * hidden * (in + hidden), T(0)), bias(4 * hidden, T(0)) {}

  std::size_t row_width() const noexcept { return input_dim + hidden_dim; }
  std::size_t parameter_count() const noexcept { return w.size() + bias.size(); }
  friend bool operator==(const LstmLayer&, const LstmLayer&) = default;
};

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Pre-activation gates for B > 1. [x; h_prev] is transposed to width x B so
// the inner loop runs across the batch and vectorizes; each element still
// sums bias, x, h in the same order as the single-row path.
template <typename T>
void batched_gates(const LstmLayer<T>& layer, std::size_t batch, std::span<const T> x,
                   std::span<const T> h_prev, std::span<T> gates) {
  const std::size_t in = layer.input_dim;
  const std::size_t hd = layer.hidden_dim;
  const std::size_t width = layer.row_width();
  const std::size_t rows = 4 * hd;
  thread_local std::vector<T> xt, acc;
  xt.resize(width * batch);
  acc.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < in; ++k) xt[k * batch + b] = x[b * in + k];
    for (std::size_t k = 0; k < hd; ++k) xt[(in + k) * batch + b] = h_prev[b * hd + k];
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* wr = layer.w.data() + r * width;
    T* a = acc.data();
    for (std::size_t b = 0; b < batch; ++b) a[b] = layer.bias[r];
    for (std::size_t k = 0; k < width; ++k) {
      const T w = wr[k];
      const T* col = xt.data() + k * batch;
      for (std::size_t b = 0; b < batch; ++b) a[b] += w * col[b];
    }
    for (std::size_t b = 0; b < batch; ++b) gates[b * rows + r] = a[b];
  }
}

// Forward over a batch of B independent sequences at one time step. Every
// output element accumulates in the same order regardless of B, so batched
// and single-sequence results are bitwise equal.
//   x: B x I, h_prev/c_prev: B x H, gates: B x 4H (post-activation), c/h: B x H
template <typename T>
void lstm_forward_batch(const LstmLayer<T>& layer, std::size_t batch, std::span<const T> x,
                        std::span<const T> h_prev, std::span<const T> c_prev, std::span<T> gates,
                        std::span<T> c, std::span<T> h) {
  const std::size_t in = layer.input_dim;
  const std::size_t hd = layer.hidden_dim;
  const std::size_t width = layer.row_width();
  const std::size_t rows = 4 * hd;
  if (batch == 1) {
    for (std::size_t r = 0; r < rows; ++r) {
      const T* wr = layer.w.data() + r * width;
      T acc = layer.bias[r];
      for (std::size_t k = 0; k < in; ++k) acc += wr[k] * x[k];
      for (std::size_t k = 0; k < hd; ++k) acc += wr[in + k] * h_prev[k];
      gates[r] = acc;
    }
  } else {
    batched_gates(layer, batch, x, h_prev, gates);
  }
  for (std::size_t b = 0; b < batch; ++b) {
    T* gb = gates.data() + b * rows;
    for (std::size_t j = 0; j < hd; ++j) {
      const T i = sigmoid(gb[kGateInput * hd + j]);
      const T f = sigmoid(gb[kGateForget * hd + j]);
      const T g = std::tanh(gb[kGateCell * hd + j]);
      const T o = sigmoid(gb[kGateOutput * hd + j]);
      gb[kGateInput * hd + j] = i;
      gb[kGateForget * hd + j] = f;
      gb[kGateCell * hd + j] = g;
      gb[kGateOutput * hd + j] = o;
      const T cn = f * c_prev[b * hd + j] + i * g;
      c[b * hd + j] = cn;
      h[b * hd + j] = o * std::tanh(cn);
    }
  }
}

template <typename T>
void lstm_forward(const LstmLayer<T>& layer, std::span<const T> x, std::span<const T> h_prev,
                  std::span<const T> c_prev, std::span<T> gates, std::span<T> c, std::span<T> h) {
  lstm_forward_batch(layer, 1, x, h_prev, c_prev, gates, c, h);
}

// One-step backward. dh is dL/dh for this step (from above and from t+1),
// dc_next is dL/dc carried from t+1. Accumulates into grad; overwrites dx,
// dh_prev, dc_prev.
template <typename T>
void lstm_backward(const LstmLayer<T>& layer, std::span<const T> x, std::span<const T> h_prev,
                   std::span<const T> c_prev, std::span<const T> gates, std::span<const T> c,
                   std::span<const T> dh, std::span<const T> dc_next, LstmLayer<T>& grad,
                   std::span<T> dx, std::span<T> dh_prev, std::span<T> dc_prev) {
  const std::size_t in = layer.input_dim;
  const std::size_t hd = layer.hidden_dim;
  const std::size_t width = layer.row_width();
  std::vector<T> dz(4 * hd);
  for (std::size_t j = 0; j < hd; ++j) {
    const T i = gates[kGateInput * hd + j];
    const T f = gates[kGateForget * hd + j];
    const T g = gates[kGateCell * hd + j];
    const T o = gates[kGateOutput * hd + j];
    const T tc = std::tanh(c[j]);
    const T dct = dh[j] * o * (T(1) - tc * tc) + dc_next[j];
    dz[kGateOutput * hd + j] = dh[j] * tc * o * (T(1) - o);
    dz[kGateInput * hd + j] = dct * g * i * (T(1) - i);
    dz[kGateForget * hd + j] = dct * c_prev[j] * f * (T(1) - f);
    dz[kGateCell * hd + j] = dct * i * (T(1) - g * g);
    dc_prev[j] = dct * f;
  }
  for (std::size_t k = 0; k < in; ++k) dx[k] = T(0);
  for (std::size_t k = 0; k < hd; ++k) dh_prev[k] = T(0);
  for (std::size_t r = 0; r < 4 * hd; ++r) {
    const T d = dz[r];
    if (d == T(0)) continue;
    grad.bias[r] += d;
    const T* wr = layer.w.data() + r * width;
    T* gr = grad.w.data() + r * width;
    for (std::size_t k = 0; k < in; ++k) {
      gr[k] += d * x[k];
      dx[k] += d * wr[k];
    }
    for (std::size_t k = 0; k < hd; ++k) {
      gr[in + k] += d * h_prev[k];
      dh_prev[k] += d * wr[in + k];
    }
  }
}

template <typename T>
void fill_uniform(std::span<T> values, Rng& rng, double lo, double hi) {
  for (T& v : values) v = static_cast<T>(rng.uniform(lo, hi));
}

template <typename T>
bool all_finite(std::span<const T> values) {
  for (T v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace pkdga
