#include "policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace pkdga {

namespace {

void check_shape(const PolicyShape& s) {
  require(s.layers > 0 && s.embed_dim > 0 && s.hidden_dim > 0 && s.output_dim >= 2,
          ErrorCode::kContract, "policy dimensions must be positive");
  require(s.output_dim <= 64, ErrorCode::kContract, "policy output dimension limited to 64");
}

template <typename T>
void embed(const PolicyParamsT<T>& p, const PolicyInput& input, T* out) {
  const std::size_t de = p.shape.embed_dim;
  const std::size_t n = p.shape.output_dim;
  if (const auto* tok = std::get_if<TokenId>(&input)) {
    require(*tok <= n, ErrorCode::kContract, "policy input index out of range");
    std::copy_n(p.embedding.data() + *tok * de, de, out);
    return;
  }
  const auto seed = std::get<std::span<const double>>(input);
  require(seed.size() == n, ErrorCode::kContract, "seed vector dimension must equal d_y");
  std::copy_n(p.embedding.data() + n * de, de, out);
  for (std::size_t i = 0; i < n; ++i) {
    if (seed[i] == 0.0) continue;
    const T s = static_cast<T>(seed[i]);
    const T* row = p.embedding.data() + i * de;
    for (std::size_t k = 0; k < de; ++k) out[k] += s * row[k];
  }
}

template <typename T>
void project(const PolicyParamsT<T>& p, const T* h, T* logits) {
  const std::size_t hd = p.shape.hidden_dim;
  const std::size_t n = p.shape.output_dim;
  for (std::size_t j = 0; j < n; ++j) {
    T acc = p.projection_bias[j];
    for (std::size_t k = 0; k < hd; ++k) acc += h[k] * p.projection[k * n + j];
    logits[j] = acc;
  }
}

template <typename T>
void masked_softmax(const T* logits, std::size_t n, std::uint64_t allowed, T* probs) {
  T mx = -std::numeric_limits<T>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (!((allowed >> j) & 1U)) continue;
    any = true;
    mx = std::max(mx, logits[j]);
  }
  require(any, ErrorCode::kContract, "token mask leaves no allowed action");
  T sum = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    probs[j] = ((allowed >> j) & 1U) ? std::exp(logits[j] - mx) : T(0);
    sum += probs[j];
  }
  require(std::isfinite(sum) && sum > T(0), ErrorCode::kNumeric, "non-finite policy logits");
  for (std::size_t j = 0; j < n; ++j) probs[j] /= sum;
}

template <typename T>
struct StepCache {
  std::vector<std::vector<T>> x, h_prev, c_prev, gates, c, h;  // per layer
  std::vector<T> probs;
};

void check_trajectory(const PolicyShape& s, const Trajectory& traj) {
  require(traj.seed_vec.size() == s.output_dim, ErrorCode::kContract,
          "trajectory seed dimension must equal d_y");
  require(!traj.tokens.empty(), ErrorCode::kContract, "trajectory is empty");
  require(traj.allowed.empty() || traj.allowed.size() == traj.tokens.size(), ErrorCode::kContract,
          "trajectory mask length mismatch");
  for (TokenId y : traj.tokens)
    require(y < s.output_dim, ErrorCode::kContract, "trajectory token out of range");
}

template <typename T>
std::vector<StepCache<T>> run_forward(const PolicyParamsT<T>& p, const Trajectory& traj) {
  check_trajectory(p.shape, traj);
  const auto& s = p.shape;
  const std::size_t steps = traj.tokens.size();
  std::vector<StepCache<T>> cache(steps);
  std::vector<std::vector<T>> h(s.layers, std::vector<T>(s.hidden_dim, T(0)));
  std::vector<std::vector<T>> c = h;
  std::vector<T> logits(s.output_dim);
  for (std::size_t t = 0; t < steps; ++t) {
    auto& sc = cache[t];
    sc.x.resize(s.layers);
    sc.h_prev.resize(s.layers);
    sc.c_prev.resize(s.layers);
    sc.gates.resize(s.layers);
    sc.c.resize(s.layers);
    sc.h.resize(s.layers);
    sc.x[0].resize(s.embed_dim);
    if (t == 0)
      embed(p, PolicyInput(std::span<const double>(traj.seed_vec)), sc.x[0].data());
    else
      embed(p, PolicyInput(traj.tokens[t - 1]), sc.x[0].data());
    for (std::size_t l = 0; l < s.layers; ++l) {
      if (l > 0) sc.x[l] = sc.h[l - 1];
      sc.h_prev[l] = h[l];
      sc.c_prev[l] = c[l];
      sc.gates[l].resize(4 * s.hidden_dim);
      sc.c[l].resize(s.hidden_dim);
      sc.h[l].resize(s.hidden_dim);
      lstm_forward<T>(p.layers[l], sc.x[l], sc.h_prev[l], sc.c_prev[l], sc.gates[l], sc.c[l],
                      sc.h[l]);
      h[l] = sc.h[l];
      c[l] = sc.c[l];
    }
    project(p, sc.h[s.layers - 1].data(), logits.data());
    sc.probs.resize(s.output_dim);
    const std::uint64_t allowed = traj.allowed.empty() ? kAllTokens : traj.allowed[t];
    masked_softmax(logits.data(), s.output_dim, allowed, sc.probs.data());
  }
  return cache;
}

}  // namespace

template <typename T>
PolicyParamsT<T> PolicyParamsT<T>::zeros(const PolicyShape& shape) {
  check_shape(shape);
  PolicyParamsT p;
  p.shape = shape;
  p.embedding.assign((shape.output_dim + 1) * shape.embed_dim, T(0));
  for (std::size_t l = 0; l < shape.layers; ++l)
    p.layers.emplace_back(l == 0 ? shape.embed_dim : shape.hidden_dim, shape.hidden_dim);
  p.projection.assign(shape.hidden_dim * shape.output_dim, T(0));
  p.projection_bias.assign(shape.output_dim, T(0));
  return p;
}

template <typename T>
std::size_t PolicyParamsT<T>::parameter_count() const {
  std::size_t total = 0;
  for_each_tensor([&](const std::string&, std::span<const T> v) { total += v.size(); });
  return total;
}

template <typename T>
bool PolicyParamsT<T>::finite() const {
  bool ok = true;
  for_each_tensor([&](const std::string&, std::span<const T> v) { ok = ok && all_finite(v); });
  return ok;
}

std::size_t policy_parameter_count(const PolicyShape& s) {
  std::size_t total = (s.output_dim + 1) * s.embed_dim;
  for (std::size_t l = 0; l < s.layers; ++l) {
    const std::size_t in = l == 0 ? s.embed_dim : s.hidden_dim;
    total += 4 * s.hidden_dim * (in + s.hidden_dim) + 4 * s.hidden_dim;
  }
  return total + s.hidden_dim * s.output_dim + s.output_dim;
}

PolicyParams init_params(const PolicyShape& shape, const TokenDict& dict, std::uint64_t seed) {
  require(shape.output_dim == dict.size(), ErrorCode::kContract,
          "d_y (" + std::to_string(shape.output_dim) + ") must equal dictionary size (" +
              std::to_string(dict.size()) + ")");
  auto p = PolicyParams::zeros(shape);
  std::uint64_t index = 0;
  p.for_each_tensor([&](const std::string&, std::span<float> v) {
    Rng rng(derive_stream(seed, {0x706f6c696379ULL, index++}));
    fill_uniform(v, rng, -0.08, 0.08);
  });
  return p;
}

template <typename T>
HiddenState<T> HiddenState<T>::zeros(const PolicyShape& shape) {
  HiddenState hs;
  hs.h.assign(shape.layers, std::vector<T>(shape.hidden_dim, T(0)));
  hs.c = hs.h;
  return hs;
}

template <typename T>
bool ActionDistribution<T>::valid(double tolerance) const {
  double sum = 0.0;
  for (T v : probs) {
    if (!(v >= T(0)) || !std::isfinite(v)) return false;
    sum += static_cast<double>(v);
  }
  return std::abs(sum - 1.0) <= tolerance;
}

std::uint64_t edge_mask(const TokenDict& dict, std::size_t position, std::size_t length) {
  std::uint64_t mask = dict.size() >= 64 ? kAllTokens : ((std::uint64_t{1} << dict.size()) - 1);
  const auto hy = dict.hyphen();
  if (hy && (position == 0 || position + 1 == length)) mask &= ~(std::uint64_t{1} << *hy);
  return mask;
}

template <typename T>
std::pair<ActionDistribution<T>, HiddenState<T>> forward_step(const PolicyParamsT<T>& p,
                                                              const PolicyInput& input,
                                                              const HiddenState<T>& hs,
                                                              std::uint64_t allowed) {
  const auto& s = p.shape;
  require(hs.h.size() == s.layers && hs.c.size() == s.layers, ErrorCode::kContract,
          "hidden state layer count mismatch");
  HiddenState<T> next = HiddenState<T>::zeros(s);
  std::vector<T> x(s.embed_dim);
  embed(p, input, x.data());
  std::vector<T> gates(4 * s.hidden_dim);
  for (std::size_t l = 0; l < s.layers; ++l) {
    std::span<const T> in = l == 0 ? std::span<const T>(x) : std::span<const T>(next.h[l - 1]);
    lstm_forward<T>(p.layers[l], in, hs.h[l], hs.c[l], gates, next.c[l], next.h[l]);
  }
  std::vector<T> logits(s.output_dim);
  project(p, next.h.back().data(), logits.data());
  ActionDistribution<T> dist;
  dist.probs.resize(s.output_dim);
  masked_softmax(logits.data(), s.output_dim, allowed, dist.probs.data());
  return {std::move(dist), std::move(next)};
}

template <typename T>
TokenId select_action(const ActionDistribution<T>& d, SelectMode mode, Rng& rng) {
  if (mode == SelectMode::kArgmax) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < d.probs.size(); ++j)
      if (d.probs[j] > d.probs[best]) best = j;
    return static_cast<TokenId>(best);
  }
  return static_cast<TokenId>(sample_discrete<T>(d.probs, rng));
}

template <typename T>
PolicyParamsT<T> backprop_logits(const PolicyParamsT<T>& p, const Trajectory& traj,
                                 std::span<const T> dlogits) {
  const auto& s = p.shape;
  const auto cache = run_forward(p, traj);
  const std::size_t steps = traj.tokens.size();
  require(dlogits.size() == steps * s.output_dim, ErrorCode::kContract,
          "logit gradient has wrong size");
  auto grad = PolicyParamsT<T>::zeros(s);
  const std::size_t hd = s.hidden_dim;
  const std::size_t n = s.output_dim;
  const std::size_t de = s.embed_dim;
  std::vector<std::vector<T>> dh_next(s.layers, std::vector<T>(hd, T(0)));
  std::vector<std::vector<T>> dc_next = dh_next;
  std::vector<T> dh(hd), dx, dh_prev(hd), dc_prev(hd), from_above(hd);
  for (std::size_t t = steps; t-- > 0;) {
    const auto& sc = cache[t];
    const T* dl = dlogits.data() + t * n;
    const auto& top = sc.h[s.layers - 1];
    std::fill(from_above.begin(), from_above.end(), T(0));
    for (std::size_t j = 0; j < n; ++j) {
      if (dl[j] == T(0)) continue;
      grad.projection_bias[j] += dl[j];
      for (std::size_t k = 0; k < hd; ++k) {
        grad.projection[k * n + j] += top[k] * dl[j];
        from_above[k] += p.projection[k * n + j] * dl[j];
      }
    }
    for (std::size_t l = s.layers; l-- > 0;) {
      for (std::size_t k = 0; k < hd; ++k) dh[k] = from_above[k] + dh_next[l][k];
      dx.assign(p.layers[l].input_dim, T(0));
      lstm_backward<T>(p.layers[l], sc.x[l], sc.h_prev[l], sc.c_prev[l], sc.gates[l], sc.c[l], dh,
                       dc_next[l], grad.layers[l], dx, dh_prev, dc_prev);
      dh_next[l] = dh_prev;
      dc_next[l] = dc_prev;
      if (l > 0) from_above.assign(dx.begin(), dx.end());
    }
    if (t == 0) {
      T* start_row = grad.embedding.data() + n * de;
      for (std::size_t k = 0; k < de; ++k) start_row[k] += dx[k];
      for (std::size_t i = 0; i < n; ++i) {
        if (traj.seed_vec[i] == 0.0) continue;
        const T sv = static_cast<T>(traj.seed_vec[i]);
        T* row = grad.embedding.data() + i * de;
        for (std::size_t k = 0; k < de; ++k) row[k] += sv * dx[k];
      }
    } else {
      T* row = grad.embedding.data() + traj.tokens[t - 1] * de;
      for (std::size_t k = 0; k < de; ++k) row[k] += dx[k];
    }
  }
  return grad;
}

template <typename T>
PolicyParamsT<T> logprob_grad(const PolicyParamsT<T>& p, const Trajectory& traj,
                              std::span<const T> weights) {
  check_trajectory(p.shape, traj);
  require(weights.size() == traj.tokens.size(), ErrorCode::kContract,
          "one weight per step required");
  const std::size_t n = p.shape.output_dim;
  const auto dists = trajectory_distributions(p, traj);
  std::vector<T> dlogits(traj.tokens.size() * n, T(0));
  for (std::size_t t = 0; t < traj.tokens.size(); ++t) {
    if (weights[t] == T(0)) continue;
    for (std::size_t j = 0; j < n; ++j) dlogits[t * n + j] = -weights[t] * dists[t].probs[j];
    dlogits[t * n + traj.tokens[t]] += weights[t];
  }
  return backprop_logits<T>(p, traj, dlogits);
}

template <typename T>
double sequence_logprob(const PolicyParamsT<T>& p, const Trajectory& traj,
                        std::span<const T> weights) {
  require(weights.size() == traj.tokens.size(), ErrorCode::kContract,
          "one weight per step required");
  const auto cache = run_forward(p, traj);
  double total = 0.0;
  for (std::size_t t = 0; t < cache.size(); ++t)
    total += static_cast<double>(weights[t]) *
             std::log(static_cast<double>(cache[t].probs[traj.tokens[t]]));
  return total;
}

template <typename T>
std::vector<ActionDistribution<T>> trajectory_distributions(const PolicyParamsT<T>& p,
                                                            const Trajectory& traj) {
  auto cache = run_forward(p, traj);
  std::vector<ActionDistribution<T>> out(cache.size());
  for (std::size_t t = 0; t < cache.size(); ++t) out[t].probs = std::move(cache[t].probs);
  return out;
}

template <typename T>
std::vector<std::vector<TokenId>> generate_batch(const PolicyParamsT<T>& p,
                                                 std::span<const std::vector<double>> seeds,
                                                 std::size_t length, SelectMode mode,
                                                 std::span<Rng> rngs, const TokenDict& dict) {
  const auto& s = p.shape;
  require(dict.size() == s.output_dim, ErrorCode::kContract, "dictionary does not match policy");
  require(rngs.size() == seeds.size(), ErrorCode::kContract, "one RNG stream per row required");
  const std::size_t batch = seeds.size();
  const std::size_t hd = s.hidden_dim;
  const std::size_t n = s.output_dim;
  std::vector<std::vector<TokenId>> out(batch);
  if (batch == 0) return out;
  std::vector<T> x(batch * s.embed_dim);
  std::vector<std::vector<T>> h(s.layers, std::vector<T>(batch * hd, T(0)));
  std::vector<std::vector<T>> c = h;
  std::vector<T> nh(batch * hd), nc(batch * hd), gates(batch * 4 * hd);
  std::vector<T> logits(n);
  ActionDistribution<T> dist;
  dist.probs.resize(n);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const PolicyInput in = t == 0 ? PolicyInput(std::span<const double>(seeds[b]))
                                    : PolicyInput(out[b].back());
      embed(p, in, x.data() + b * s.embed_dim);
    }
    for (std::size_t l = 0; l < s.layers; ++l) {
      std::span<const T> in = l == 0 ? std::span<const T>(x) : std::span<const T>(h[l - 1]);
      lstm_forward_batch<T>(p.layers[l], batch, in, h[l], c[l], gates, nc, nh);
      h[l].swap(nh);
      c[l].swap(nc);
    }
    const std::uint64_t allowed = edge_mask(dict, t, length);
    for (std::size_t b = 0; b < batch; ++b) {
      project(p, h.back().data() + b * hd, logits.data());
      masked_softmax(logits.data(), n, allowed, dist.probs.data());
      out[b].push_back(select_action(dist, mode, rngs[b]));
    }
  }
  return out;
}

#define PKDGA_INSTANTIATE(T)                                                                      \
  template struct PolicyParamsT<T>;                                                               \
  template struct HiddenState<T>;                                                                 \
  template struct ActionDistribution<T>;                                                          \
  template std::pair<ActionDistribution<T>, HiddenState<T>> forward_step(                         \
      const PolicyParamsT<T>&, const PolicyInput&, const HiddenState<T>&, std::uint64_t);         \
  template TokenId select_action(const ActionDistribution<T>&, SelectMode, Rng&);                 \
  template PolicyParamsT<T> backprop_logits(const PolicyParamsT<T>&, const Trajectory&,           \
                                            std::span<const T>);                                  \
  template PolicyParamsT<T> logprob_grad(const PolicyParamsT<T>&, const Trajectory&,              \
                                         std::span<const T>);                                     \
  template double sequence_logprob(const PolicyParamsT<T>&, const Trajectory&,                    \
                                   std::span<const T>);                                           \
  template std::vector<ActionDistribution<T>> trajectory_distributions(const PolicyParamsT<T>&,   \
                                                                       const Trajectory&);        \
  template std::vector<std::vector<TokenId>> generate_batch(                                      \
      const PolicyParamsT<T>&, std::span<const std::vector<double>>, std::size_t, SelectMode,     \
      std::span<Rng>, const TokenDict&);

PKDGA_INSTANTIATE(float)
PKDGA_INSTANTIATE(double)

#undef PKDGA_INSTANTIATE

}  // namespace pkdga
