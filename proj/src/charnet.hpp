#pragma once

// Character-level recurrent classifier used by the neural detector:
// embedding -> stacked recurrent layers (optionally a second, reversed
// stack) -> mean-pool over time -> affine -> sigmoid.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "lstm.hpp"

namespace pkdga {

template <typename T>
struct CharNet {
  std::size_t vocab = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t layers = 0;
  bool bidirectional = false;
  std::vector<T> embedding;  // vocab x d_e
  std::vector<LstmLayer<T>> forward_layers;
  std::vector<LstmLayer<T>> backward_layers;  // empty unless bidirectional
  std::vector<T> out_w;                       // feature_dim
  std::vector<T> out_b;                       // 1

  static CharNet zeros(std::size_t vocab, std::size_t embed_dim, std::size_t hidden_dim,
                       std::size_t layers, bool bidirectional) {
    require(vocab > 0 && embed_dim > 0 && hidden_dim > 0 && layers > 0, ErrorCode::kContract,
            "neural detector dimensions must be positive");
    CharNet n;
    n.vocab = vocab;
    n.embed_dim = embed_dim;
    n.hidden_dim = hidden_dim;
    n.layers = layers;
    n.bidirectional = bidirectional;
    n.embedding.assign(vocab * embed_dim, T(0));
    for (std::size_t l = 0; l < layers; ++l) {
      n.forward_layers.emplace_back(l == 0 ? embed_dim : hidden_dim, hidden_dim);
      if (bidirectional) n.backward_layers.emplace_back(l == 0 ? embed_dim : hidden_dim, hidden_dim);
    }
    n.out_w.assign(n.feature_dim(), T(0));
    n.out_b.assign(1, T(0));
    return n;
  }

  std::size_t feature_dim() const { return hidden_dim * (bidirectional ? 2 : 1); }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn(std::string("embedding"), std::span<T>(embedding));
    for (std::size_t l = 0; l < forward_layers.size(); ++l) {
      fn("fw." + std::to_string(l) + ".weight", std::span<T>(forward_layers[l].w));
      fn("fw." + std::to_string(l) + ".bias", std::span<T>(forward_layers[l].bias));
    }
    for (std::size_t l = 0; l < backward_layers.size(); ++l) {
      fn("bw." + std::to_string(l) + ".weight", std::span<T>(backward_layers[l].w));
      fn("bw." + std::to_string(l) + ".bias", std::span<T>(backward_layers[l].bias));
    }
    fn(std::string("out.weight"), std::span<T>(out_w));
    fn(std::string("out.bias"), std::span<T>(out_b));
  }

  CharNet zeros_like() const {
    return zeros(vocab, embed_dim, hidden_dim, layers, bidirectional);
  }
};

namespace charnet_detail {

template <typename T>
struct StackCache {
  // [t][l]
  std::vector<std::vector<std::vector<T>>> x, h_prev, c_prev, gates, c, h;
};

// Runs one direction over the sequence (already ordered) and returns the
// mean of the top-layer hidden states.
template <typename T>
std::vector<T> run_stack(const CharNet<T>& net, const std::vector<LstmLayer<T>>& stack,
                         std::span<const TokenId> seq, StackCache<T>* cache) {
  const std::size_t steps = seq.size();
  const std::size_t hd = net.hidden_dim;
  const std::size_t nl = stack.size();
  std::vector<std::vector<T>> h(nl, std::vector<T>(hd, T(0))), c = h;
  std::vector<T> pooled(hd, T(0));
  std::vector<T> gates(4 * hd), nh(hd), nc(hd), x(net.embed_dim);
  if (cache) {
    for (auto* v : {&cache->x, &cache->h_prev, &cache->c_prev, &cache->gates, &cache->c, &cache->h})
      v->assign(steps, std::vector<std::vector<T>>(nl));
  }
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(net.embedding.data() + seq[t] * net.embed_dim, net.embed_dim, x.begin());
    for (std::size_t l = 0; l < nl; ++l) {
      std::span<const T> in = l == 0 ? std::span<const T>(x) : std::span<const T>(h[l - 1]);
      if (cache) {
        cache->x[t][l].assign(in.begin(), in.end());
        cache->h_prev[t][l] = h[l];
        cache->c_prev[t][l] = c[l];
      }
      lstm_forward<T>(stack[l], in, h[l], c[l], gates, nc, nh);
      h[l] = nh;
      c[l] = nc;
      if (cache) {
        cache->gates[t][l] = gates;
        cache->c[t][l] = nc;
        cache->h[t][l] = nh;
      }
    }
    for (std::size_t k = 0; k < hd; ++k) pooled[k] += h[nl - 1][k];
  }
  for (T& v : pooled) v /= static_cast<T>(steps);
  return pooled;
}

template <typename T>
void backprop_stack(const CharNet<T>& net, const std::vector<LstmLayer<T>>& stack,
                    std::vector<LstmLayer<T>>& grad_stack, std::vector<T>& grad_embedding,
                    std::span<const TokenId> seq, const StackCache<T>& cache,
                    std::span<const T> dpooled) {
  const std::size_t steps = seq.size();
  const std::size_t hd = net.hidden_dim;
  const std::size_t nl = stack.size();
  std::vector<std::vector<T>> dh_next(nl, std::vector<T>(hd, T(0))), dc_next = dh_next;
  std::vector<T> dh(hd), dh_prev(hd), dc_prev(hd), from_above(hd), dx;
  const T inv = T(1) / static_cast<T>(steps);
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t k = 0; k < hd; ++k) from_above[k] = dpooled[k] * inv;
    for (std::size_t l = nl; l-- > 0;) {
      for (std::size_t k = 0; k < hd; ++k) dh[k] = from_above[k] + dh_next[l][k];
      dx.assign(stack[l].input_dim, T(0));
      lstm_backward<T>(stack[l], cache.x[t][l], cache.h_prev[t][l], cache.c_prev[t][l],
                       cache.gates[t][l], cache.c[t][l], dh, dc_next[l], grad_stack[l], dx,
                       dh_prev, dc_prev);
      dh_next[l] = dh_prev;
      dc_next[l] = dc_prev;
      if (l > 0) from_above.assign(dx.begin(), dx.end());
    }
    T* row = grad_embedding.data() + seq[t] * net.embed_dim;
    for (std::size_t k = 0; k < net.embed_dim; ++k) row[k] += dx[k];
  }
}

template <typename T>
std::vector<TokenId> reversed(std::span<const TokenId> seq) {
  return std::vector<TokenId>(seq.rbegin(), seq.rend());
}

}  // namespace charnet_detail

// Pre-sigmoid output.
template <typename T>
T charnet_logit(const CharNet<T>& net, std::span<const TokenId> seq) {
  using namespace charnet_detail;
  require(!seq.empty(), ErrorCode::kContract, "empty input sequence");
  auto feat = run_stack(net, net.forward_layers, seq, static_cast<StackCache<T>*>(nullptr));
  if (net.bidirectional) {
    const auto rev = reversed<T>(seq);
    const auto bw = run_stack(net, net.backward_layers, std::span<const TokenId>(rev),
                              static_cast<StackCache<T>*>(nullptr));
    feat.insert(feat.end(), bw.begin(), bw.end());
  }
  T z = net.out_b[0];
  for (std::size_t k = 0; k < feat.size(); ++k) z += net.out_w[k] * feat[k];
  return z;
}

// Binary cross-entropy of sigmoid(logit) against target in {0, 1}; adds the
// gradient into `grad` and returns the loss.
template <typename T>
double charnet_loss_grad(const CharNet<T>& net, std::span<const TokenId> seq, double target,
                         CharNet<T>& grad) {
  using namespace charnet_detail;
  require(!seq.empty(), ErrorCode::kContract, "empty input sequence");
  StackCache<T> fw_cache, bw_cache;
  auto feat = run_stack(net, net.forward_layers, seq, &fw_cache);
  std::vector<TokenId> rev;
  if (net.bidirectional) {
    rev = reversed<T>(seq);
    const auto bw = run_stack(net, net.backward_layers, std::span<const TokenId>(rev), &bw_cache);
    feat.insert(feat.end(), bw.begin(), bw.end());
  }
  T z = net.out_b[0];
  for (std::size_t k = 0; k < feat.size(); ++k) z += net.out_w[k] * feat[k];
  const double zd = static_cast<double>(z);
  // log(1 + e^-|z|) form keeps the loss finite for large |z|.
  const double loss = std::max(zd, 0.0) - zd * target + std::log1p(std::exp(-std::abs(zd)));
  const T dz = static_cast<T>(1.0 / (1.0 + std::exp(-zd)) - target);
  grad.out_b[0] += dz;
  std::vector<T> dfeat(feat.size());
  for (std::size_t k = 0; k < feat.size(); ++k) {
    grad.out_w[k] += dz * feat[k];
    dfeat[k] = dz * net.out_w[k];
  }
  const std::size_t hd = net.hidden_dim;
  backprop_stack(net, net.forward_layers, grad.forward_layers, grad.embedding, seq, fw_cache,
                 std::span<const T>(dfeat.data(), hd));
  if (net.bidirectional)
    backprop_stack(net, net.backward_layers, grad.backward_layers, grad.embedding,
                   std::span<const TokenId>(rev), bw_cache, std::span<const T>(dfeat.data() + hd, hd));
  return loss;
}

}  // namespace pkdga
