#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "checkpoint.hpp"
#include "errors.hpp"

namespace pkdga {

namespace {

constexpr std::uint64_t kEpisodeStream = 0x657069736f6465ULL;
constexpr std::uint64_t kRolloutStream = 0x726f6c6c6f7574ULL;
constexpr std::uint64_t kDateStream = 0x64617465ULL;

// An episode plus the hidden state after each step, so rollouts can branch
// from any prefix without replaying it.
struct EpisodeRun {
  EpisodeTrace trace;
  std::vector<HiddenState<float>> hidden;
};

EpisodeRun run_episode(const PolicyParams& p, const Date& date, const TokenDict& dict,
                       const SeedSpace& space, std::size_t length, SelectMode mode, Rng& rng,
                       std::string_view tld) {
  require(length >= 1, ErrorCode::kContract, "episode length must be positive");
  EpisodeRun run;
  auto& tr = run.trace;
  tr.date = date;
  tr.trajectory.seed_vec = encode_seed(date, dict, space).vec;
  auto hs = HiddenState<float>::zeros(p.shape);
  for (std::size_t t = 0; t < length; ++t) {
    const PolicyInput in = t == 0 ? PolicyInput(std::span<const double>(tr.trajectory.seed_vec))
                                  : PolicyInput(tr.trajectory.tokens.back());
    const auto allowed = edge_mask(dict, t, length);
    auto [dist, next] = forward_step(p, in, hs, allowed);
    tr.trajectory.tokens.push_back(select_action(dist, mode, rng));
    tr.trajectory.allowed.push_back(allowed);
    tr.distributions.push_back(std::move(dist));
    hs = next;
    run.hidden.push_back(std::move(next));
  }
  tr.fqdn = sequence_fqdn(tr.trajectory.tokens, dict, tld);
  return run;
}

// Continues from the hidden state that produced step t's distribution.
std::vector<std::vector<TokenId>> rollouts_from(const PolicyParams& p,
                                                const HiddenState<float>& hs_t,
                                                std::span<const TokenId> prefix, TokenId action,
                                                std::size_t m, std::size_t length,
                                                const TokenDict& dict, std::uint64_t master) {
  const std::size_t t = prefix.size();
  require(t < length, ErrorCode::kContract, "rollout prefix must be shorter than the episode");
  std::vector<TokenId> base(prefix.begin(), prefix.end());
  base.push_back(action);
  std::vector<std::vector<TokenId>> out(m, base);
  if (t + 1 == length) return out;
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng(derive_stream(master, {t, action, j}));
    auto hs = hs_t;
    auto& seq = out[j];
    while (seq.size() < length) {
      auto [dist, next] = forward_step(p, PolicyInput(seq.back()), hs,
                                       edge_mask(dict, seq.size(), length));
      seq.push_back(select_action(dist, SelectMode::kSample, rng));
      hs = std::move(next);
    }
  }
  return out;
}

HiddenState<float> replay_prefix(const PolicyParams& p, std::span<const double> seed_vec,
                                 std::span<const TokenId> prefix) {
  // Hidden state that produced the distribution for position prefix.size().
  auto hs = HiddenState<float>::zeros(p.shape);
  hs = forward_step(p, PolicyInput(seed_vec), hs).second;
  for (TokenId tok : prefix) hs = forward_step(p, PolicyInput(tok), hs).second;
  return hs;
}

// A reward estimate needed for step t of episode i with the given action.
struct Request {
  std::size_t episode;
  std::size_t step;
  TokenId action;
  std::size_t first = 0;  // index of its first name in the registration list
  std::size_t count = 0;
};

void set_hp(TrainConfig& cfg, const std::string& name, double v) {
  const auto as_size = [&] {
    require(v >= 1.0 && v == std::floor(v), ErrorCode::kUsage, "HP " + name + " must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  if (name == "layers") cfg.shape.layers = as_size();
  else if (name == "embed") cfg.shape.embed_dim = as_size();
  else if (name == "hidden") cfg.shape.hidden_dim = as_size();
  else if (name == "mc") cfg.mc = as_size();
  else if (name == "batch") cfg.batch = as_size();
  else if (name == "lr") cfg.lr = v;
  else fail(ErrorCode::kUsage, "unknown hyperparameter '" + name + "'");
}

}  // namespace

void TrainConfig::validate(const TokenDict& dict) const {
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::kUsage, "learning rate must be positive");
  require(batch >= 1, ErrorCode::kUsage, "batch size must be at least 1");
  require(mc >= 1, ErrorCode::kUsage, "MC search count must be at least 1");
  require(length >= 1 && length <= kMaxEpisodeLength, ErrorCode::kUsage,
          "episode length outside [1, 24]");
  require(shape.output_dim == dict.size(), ErrorCode::kUsage, "policy output must match dictionary");
  require(!full_enumeration || dict.size() <= 8, ErrorCode::kUsage,
          "full enumeration is limited to dictionaries of at most 8 tokens");
  require(max_norm >= 0.0, ErrorCode::kUsage, "max_norm must be non-negative");
}

std::vector<double> RewardSource::rewards(std::span<const std::string> fqdns,
                                          std::vector<DnsFeedback>* feedback) {
  auto fb = env_.register_batch(fqdns);
  std::vector<double> out(fb.size());
  for (std::size_t i = 0; i < fb.size(); ++i) {
    if (scorer_ != nullptr) out[i] = fb[i].n_factor * std::clamp(scorer_->score(fqdns[i]), 0.0, 1.0);
    else out[i] = fb[i].outcome;
  }
  if (feedback != nullptr) *feedback = std::move(fb);
  return out;
}

std::string sequence_fqdn(std::span<const TokenId> tokens, const TokenDict& dict,
                          std::string_view tld) {
  return dict.detokenize(tokens) + "." + std::string(tld);
}

EpisodeTrace generate_episode(const PolicyParams& p, const Date& date, const TokenDict& dict,
                              const SeedSpace& space, std::size_t length, SelectMode mode,
                              Rng& rng, std::string_view tld) {
  return run_episode(p, date, dict, space, length, mode, rng, tld).trace;
}

std::vector<std::vector<TokenId>> mc_rollouts(const PolicyParams& p,
                                              std::span<const double> seed_vec,
                                              std::span<const TokenId> prefix, TokenId action,
                                              std::size_t m, std::size_t length,
                                              const TokenDict& dict, std::uint64_t master_seed) {
  require(action < dict.size(), ErrorCode::kContract, "action outside the dictionary");
  return rollouts_from(p, replay_prefix(p, seed_vec, prefix), prefix, action, m, length, dict,
                       master_seed);
}

double estimate_action_reward(RewardSource& rewards, const PolicyParams& p,
                              std::span<const double> seed_vec, std::span<const TokenId> prefix,
                              TokenId action, const TrainConfig& cfg, const TokenDict& dict,
                              std::uint64_t master_seed) {
  const bool terminal = prefix.size() + 1 == cfg.length;
  const auto seqs = mc_rollouts(p, seed_vec, prefix, action, terminal ? 1 : cfg.mc, cfg.length,
                                dict, master_seed);
  std::vector<std::string> names;
  for (const auto& s : seqs) names.push_back(sequence_fqdn(s, dict, cfg.tld));
  const auto r = rewards.rewards(names);
  double total = 0.0;
  for (double v : r) total += v;
  return total / static_cast<double>(r.size());
}

TrainResult train(FeedbackEnv& env, const TrainConfig& cfg, const TokenDict& dict,
                  const SeedSpace& space, std::uint64_t seed, const TrainOptions& options) {
  cfg.validate(dict);
  require(space.encoding_dim() == dict.size(), ErrorCode::kContract,
          "seed space dimension must match dictionary");
  require(cfg.reward_mode == RewardMode::kBinary || options.scorer != nullptr, ErrorCode::kUsage,
          "shaped rewards need a detector scorer");
  RewardSource source(env, cfg.reward_mode == RewardMode::kShaped ? options.scorer : nullptr);

  TrainResult result;
  PolicyParams p = options.initial ? *options.initial : init_params(cfg.shape, dict, seed);
  require(p.shape == cfg.shape, ErrorCode::kContract, "warm-start shape differs from config");
  result.best = p;
  double best_reward = -1.0;
  const std::size_t T = cfg.length;
  const std::size_t n = dict.size();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // 1. Sample the batch.
    std::vector<EpisodeRun> runs(cfg.batch);
    parallel_for(cfg.batch, [&](std::size_t i) {
      Rng date_rng(derive_stream(seed, {kDateStream, epoch, i}));
      const Date date = space.date_at(static_cast<std::int64_t>(
          date_rng.below(static_cast<std::uint64_t>(space.span_days()))));
      Rng rng(derive_stream(seed, {kEpisodeStream, epoch, i}));
      runs[i] = run_episode(p, date, dict, space, T, SelectMode::kSample, rng, cfg.tld);
    });

    // 2. Completions for every (episode, step, action) that needs a reward.
    // The terminal names of the episodes are registered first.
    std::vector<std::string> names;
    for (const auto& r : runs) names.push_back(r.trace.fqdn);
    std::vector<Request> requests;
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      const auto& tr = runs[i].trace.trajectory;
      for (std::size_t t = 0; t < T; ++t) {
        for (TokenId a = 0; a < n; ++a) {
          const bool taken = a == tr.tokens[t];
          if (!cfg.full_enumeration && !taken) continue;
          if (!(tr.allowed[t] >> a & 1U)) continue;
          if (taken && t + 1 == T) continue;  // the terminal name itself
          requests.push_back({i, t, a, 0, t + 1 == T ? 1 : cfg.mc});
        }
      }
    }
    std::vector<std::vector<std::vector<TokenId>>> completions(requests.size());
    parallel_for(requests.size(), [&](std::size_t k) {
      const auto& rq = requests[k];
      const auto& run = runs[rq.episode];
      const std::span<const TokenId> prefix(run.trace.trajectory.tokens.data(), rq.step);
      const std::uint64_t master = derive_stream(seed, {kRolloutStream, epoch, rq.episode});
      completions[k] = rollouts_from(p, run.hidden[rq.step], prefix, rq.action, rq.count, T,
                                     dict, master);
    });
    for (std::size_t k = 0; k < requests.size(); ++k) {
      requests[k].first = names.size();
      for (const auto& seq : completions[k]) names.push_back(sequence_fqdn(seq, dict, cfg.tld));
    }

    // 3. Feedback, applied in a fixed order.
    std::vector<DnsFeedback> feedback;
    const auto rewards = source.rewards(names, &feedback);

    // 4. Per-step weights and the update.
    double epoch_reward = 0.0;
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      auto& tr = runs[i].trace;
      tr.feedback = feedback[i];
      tr.rewards.assign(T, 0.0);
      tr.rewards[T - 1] = rewards[i];
      epoch_reward += rewards[i];
      if (tr.feedback.outcome == 1) result.registered.push_back(tr.fqdn);
    }
    epoch_reward /= static_cast<double>(cfg.batch);
    // action_reward[i][t * n + a]
    std::vector<std::vector<double>> action_reward(cfg.batch, std::vector<double>(T * n, 0.0));
    for (const auto& rq : requests) {
      double mean = 0.0;
      for (std::size_t j = 0; j < rq.count; ++j) mean += rewards[rq.first + j];
      mean /= static_cast<double>(rq.count);
      action_reward[rq.episode][rq.step * n + rq.action] = mean;
      if (runs[rq.episode].trace.trajectory.tokens[rq.step] == rq.action)
        runs[rq.episode].trace.rewards[rq.step] = mean;
    }
    for (std::size_t i = 0; i < cfg.batch; ++i)
      action_reward[i][(T - 1) * n + runs[i].trace.trajectory.tokens[T - 1]] = rewards[i];

    result.curve.mean_reward.push_back(epoch_reward);
    if (epoch_reward > best_reward) {
      best_reward = epoch_reward;
      result.best = p;
      result.best_epoch = epoch;
      if (!options.checkpoint.empty()) save_policy(options.checkpoint, p);
    }
    if (options.on_epoch) options.on_epoch(epoch, epoch_reward);

    std::vector<Trajectory> trajs;
    for (const auto& r : runs) trajs.push_back(r.trace.trajectory);
    if (!cfg.full_enumeration) {
      std::vector<std::vector<float>> weights(cfg.batch);
      for (std::size_t i = 0; i < cfg.batch; ++i)
        weights[i].assign(runs[i].trace.rewards.begin(), runs[i].trace.rewards.end());
      policy_gradient_step<float>(p, trajs, weights, cfg.lr, cfg.max_norm);
    } else {
      // sum_t sum_i grad pi(a_i | s_t) R_i, via dlogit_k = pi_k (R_k - E_pi[R]).
      std::vector<PolicyParams> slots(cfg.batch);
      parallel_for(cfg.batch, [&](std::size_t i) {
        const auto& tr = runs[i].trace;
        std::vector<float> dlogits(T * n, 0.0f);
        for (std::size_t t = 0; t < T; ++t) {
          const auto& probs = tr.distributions[t].probs;
          double expected = 0.0;
          for (std::size_t a = 0; a < n; ++a) expected += probs[a] * action_reward[i][t * n + a];
          for (std::size_t a = 0; a < n; ++a)
            dlogits[t * n + a] =
                static_cast<float>(probs[a] * (action_reward[i][t * n + a] - expected));
        }
        slots[i] = backprop_logits<float>(p, tr.trajectory, dlogits);
      });
      PolicyParams total = PolicyParams::zeros(p.shape);
      for (const auto& g : slots) axpy(total, 1.0f, g);
      scale(total, 1.0f / static_cast<float>(cfg.batch));
      apply_gradient(p, std::move(total), cfg.lr, cfg.max_norm);
    }
  }
  result.last = std::move(p);
  return result;
}

GridResult grid_search(const EnvFactory& make_env, const TrainConfig& defaults,
                       std::span<const HpCandidates> space, const TokenDict& dict,
                       const SeedSpace& seeds, std::uint64_t seed) {
  GridResult out;
  out.best = defaults;
  for (const auto& hp : space) {
    require(!hp.values.empty(), ErrorCode::kUsage, "HP " + hp.name + " has no candidates");
    double best_reward = -1.0;
    double best_value = hp.values.front();
    for (double v : hp.values) {
      TrainConfig cfg = out.best;
      set_hp(cfg, hp.name, v);
      auto env = make_env();
      const auto r = train(*env, cfg, dict, seeds, seed);
      const double reward = r.curve.mean_reward.empty()
                                ? 0.0
                                : *std::max_element(r.curve.mean_reward.begin(), r.curve.mean_reward.end());
      out.log.push_back({out.log.size() + 1, cfg, reward});
      if (reward > best_reward) {
        best_reward = reward;
        best_value = v;
      }
    }
    set_hp(out.best, hp.name, best_value);
  }
  return out;
}

std::string tuning_log_tsv(std::span<const TuningRow> rows) {
  std::ostringstream os;
  os << "#\tN_l\td_e\td_h\tm\tlr\tb\treward\n";
  for (const auto& r : rows) {
    os << r.run << '\t' << r.cfg.shape.layers << '\t' << r.cfg.shape.embed_dim << '\t'
       << r.cfg.shape.hidden_dim << '\t' << r.cfg.mc << '\t' << r.cfg.lr << '\t' << r.cfg.batch
       << '\t' << r.reward << '\n';
  }
  return os.str();
}

std::vector<std::string> pkdga_candidates(const PolicyParams& p, const TokenDict& dict,
                                          const SeedSpace& space, const Date& date,
                                          std::size_t k, std::size_t length,
                                          std::string_view tld) {
  const auto enc = encode_seed(date, dict, space);
  std::vector<std::vector<double>> seeds(k, enc.vec);
  std::vector<Rng> rngs;
  for (std::size_t j = 0; j < k; ++j) rngs.emplace_back(derive_stream(enc.rng_seed, {j}));
  const auto seqs = generate_batch<float>(p, seeds, length, SelectMode::kSample, rngs, dict);
  std::vector<std::string> out;
  for (const auto& s : seqs) out.push_back(sequence_fqdn(s, dict, tld));
  return out;
}

std::vector<std::string> pkdga_generate(const PolicyParams& p, const TokenDict& dict,
                                        const SeedSpace& space, std::size_t count,
                                        std::size_t length, std::uint64_t seed,
                                        std::string_view tld) {
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  std::vector<std::vector<std::string>> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(count, begin + kChunk);
    std::vector<std::vector<double>> seeds;
    std::vector<Rng> rngs;
    for (std::size_t i = begin; i < end; ++i) {
      Rng pick(derive_stream(seed, {kDateStream, i}));
      const Date date = space.date_at(
          static_cast<std::int64_t>(pick.below(static_cast<std::uint64_t>(space.span_days()))));
      seeds.push_back(encode_seed(date, dict, space).vec);
      rngs.emplace_back(derive_stream(seed, {kEpisodeStream, i}));
    }
    for (const auto& s : generate_batch<float>(p, seeds, length, SelectMode::kSample, rngs, dict))
      parts[c].push_back(sequence_fqdn(s, dict, tld));
  });
  std::vector<std::string> out;
  out.reserve(count);
  for (auto& part : parts)
    for (auto& s : part) out.push_back(std::move(s));
  return out;
}

}  // namespace pkdga
