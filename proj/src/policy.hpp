#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "domain.hpp"
#include "lstm.hpp"
#include "rng.hpp"

namespace pkdga {

struct PolicyShape {
  std::size_t layers = 1;       // N_l
  std::size_t embed_dim = 32;   // d_e
  std::size_t hidden_dim = 64;  // d_h
  std::size_t output_dim = 37;  // d_y == n

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

// Weights of the stacked recurrent policy. The embedding has n + 1 rows: one
// per token plus the start marker. Seed vectors enter through a dense
// projection, embed(seed) = E[n] + sum_i seed_i * E[i].
template <typename T>
struct PolicyParamsT {
  PolicyShape shape;
  std::vector<T> embedding;           // (d_y + 1) x d_e
  std::vector<LstmLayer<T>> layers;   // layer 0 reads d_e, the rest read d_h
  std::vector<T> projection;          // d_h x d_y
  std::vector<T> projection_bias;     // d_y

  // All-zero parameters of the given shape. Throws kContract on zero dims.
  static PolicyParamsT zeros(const PolicyShape& shape);

  std::size_t parameter_count() const;

  // fn(name, span) over every tensor in a fixed order.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn(std::string("embedding"), std::span<T>(embedding));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      fn("lstm." + std::to_string(l) + ".weight", std::span<T>(layers[l].w));
      fn("lstm." + std::to_string(l) + ".bias", std::span<T>(layers[l].bias));
    }
    fn(std::string("projection.weight"), std::span<T>(projection));
    fn(std::string("projection.bias"), std::span<T>(projection_bias));
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<PolicyParamsT*>(this)->for_each_tensor(
        [&](const std::string& name, std::span<T> v) { fn(name, std::span<const T>(v)); });
  }

  bool finite() const;
  friend bool operator==(const PolicyParamsT&, const PolicyParamsT&) = default;
};

using PolicyParams = PolicyParamsT<float>;

// Closed-form parameter count for a shape.
std::size_t policy_parameter_count(const PolicyShape& shape);

template <typename To, typename From>
PolicyParamsT<To> cast_params(const PolicyParamsT<From>& p) {
  auto out = PolicyParamsT<To>::zeros(p.shape);
  std::vector<std::span<const From>> src;
  p.for_each_tensor([&](const std::string&, std::span<const From> v) { src.push_back(v); });
  std::size_t i = 0;
  out.for_each_tensor([&](const std::string&, std::span<To> v) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<To>(src[i][k]);
    ++i;
  });
  return out;
}

// dst += alpha * src, tensor by tensor.
template <typename T>
void axpy(PolicyParamsT<T>& dst, T alpha, const PolicyParamsT<T>& src) {
  std::vector<std::span<const T>> s;
  src.for_each_tensor([&](const std::string&, std::span<const T> v) { s.push_back(v); });
  std::size_t i = 0;
  dst.for_each_tensor([&](const std::string&, std::span<T> v) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += alpha * s[i][k];
    ++i;
  });
}

template <typename T>
void scale(PolicyParamsT<T>& p, T factor) {
  p.for_each_tensor([&](const std::string&, std::span<T> v) {
    for (T& x : v) x *= factor;
  });
}

template <typename T>
double l2_norm(const PolicyParamsT<T>& p) {
  double acc = 0.0;
  p.for_each_tensor([&](const std::string&, std::span<const T> v) {
    for (T x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  });
  return std::sqrt(acc);
}

// Uniform [-0.08, 0.08] from counter-derived streams, one per tensor.
// Throws kContract when shape.output_dim != dict.size().
PolicyParams init_params(const PolicyShape& shape, const TokenDict& dict, std::uint64_t seed);

template <typename T>
struct HiddenState {
  std::vector<std::vector<T>> h;  // per layer, d_h each
  std::vector<std::vector<T>> c;

  static HiddenState zeros(const PolicyShape& shape);
  friend bool operator==(const HiddenState&, const HiddenState&) = default;
};

template <typename T>
struct ActionDistribution {
  std::vector<T> probs;

  // Probabilities non-negative and summing to 1 within a precision-aware tolerance.
  bool valid(double tolerance = std::is_same_v<T, float> ? 1e-5 : 1e-9) const;
};

inline constexpr std::uint64_t kAllTokens = ~std::uint64_t{0};

// Bans the hyphen at the first and last position so every emitted label
// is a valid LDH label.
std::uint64_t edge_mask(const TokenDict& dict, std::size_t position, std::size_t length);

// External input of one step: the seed vector (first step) or the previous
// token index (< n + 1, where n is the start marker).
using PolicyInput = std::variant<TokenId, std::span<const double>>;

// One step of the stacked cell followed by a softmax over the allowed tokens
// of the output projection of the top-layer hidden state. Throws kNumeric
// on a non-finite distribution.
template <typename T>
std::pair<ActionDistribution<T>, HiddenState<T>> forward_step(const PolicyParamsT<T>& p,
                                                              const PolicyInput& input,
                                                              const HiddenState<T>& hs,
                                                              std::uint64_t allowed = kAllTokens);

enum class SelectMode { kArgmax, kSample };

// Argmax breaks ties toward the lowest index.
template <typename T>
TokenId select_action(const ActionDistribution<T>& d, SelectMode mode, Rng& rng);

// A completed token sequence with the seed that started it and the token
// mask applied at each step.
struct Trajectory {
  std::vector<double> seed_vec;
  std::vector<TokenId> tokens;        // y_1..y_T
  std::vector<std::uint64_t> allowed; // per step; empty means unmasked
};

// Backpropagation through time of an arbitrary objective given its gradient
// with respect to the pre-softmax logits at every step (T x d_y, row-major).
template <typename T>
PolicyParamsT<T> backprop_logits(const PolicyParamsT<T>& p, const Trajectory& traj,
                                 std::span<const T> dlogits);

// sum_t w_t * grad log pi(y_t | s_t).  Throws kContract on a dimension mismatch.
template <typename T>
PolicyParamsT<T> logprob_grad(const PolicyParamsT<T>& p, const Trajectory& traj,
                              std::span<const T> weights);

// sum_t w_t * log pi(y_t | s_t); the scalar that logprob_grad differentiates.
template <typename T>
double sequence_logprob(const PolicyParamsT<T>& p, const Trajectory& traj,
                        std::span<const T> weights);

// Per-step action distributions of a trajectory (teacher-forced).
template <typename T>
std::vector<ActionDistribution<T>> trajectory_distributions(const PolicyParamsT<T>& p,
                                                            const Trajectory& traj);

// Generates B sequences of `length` tokens in lock step. Row b starts from
// seeds[b] and samples from rngs[b]; results equal running forward_step and
// select_action per row.
template <typename T>
std::vector<std::vector<TokenId>> generate_batch(const PolicyParamsT<T>& p,
                                                 std::span<const std::vector<double>> seeds,
                                                 std::size_t length, SelectMode mode,
                                                 std::span<Rng> rngs, const TokenDict& dict);

}  // namespace pkdga
