#pragma once

// Feedback-only policy-gradient training of the domain generator:
// episodes sampled from the policy, per-step rewards estimated by
// Monte-Carlo completion against the registration oracle, and
// likelihood-ratio ascent on the expected reward.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "env.hpp"
#include "parallel.hpp"
#include "policy.hpp"

namespace pkdga {

enum class RewardMode { kBinary, kShaped };

struct TrainConfig {
  PolicyShape shape;
  double lr = 0.01;
  std::size_t batch = 16;
  std::size_t mc = 10;
  std::size_t length = kDefaultEpisodeLength;
  std::size_t epochs = 100;
  RewardMode reward_mode = RewardMode::kBinary;
  bool full_enumeration = false;  // every action per step, small dictionaries only
  double max_norm = 0.0;          // gradient clipping; 0 disables
  std::string tld = std::string(kDefaultTld);

  // Throws kUsage on out-of-range values.
  void validate(const TokenDict& dict) const;
};

struct EpisodeTrace {
  Date date;
  Trajectory trajectory;
  std::vector<ActionDistribution<float>> distributions;  // one per step
  std::string fqdn;
  std::vector<double> rewards;  // per-step estimates, filled by the trainer
  DnsFeedback feedback;         // terminal registration outcome
};

struct RewardCurve {
  std::vector<double> mean_reward;  // one entry per epoch
};

// Supplies rewards for names: the binary outcome, or in the shaped ablation
// the detector score of novel names through the white-box scorer.
class RewardSource {
 public:
  explicit RewardSource(FeedbackEnv& env, const DetectorScorer* scorer = nullptr)
      : env_(env), scorer_(scorer) {}

  std::vector<double> rewards(std::span<const std::string> fqdns,
                              std::vector<DnsFeedback>* feedback = nullptr);
  FeedbackEnv& env() { return env_; }

 private:
  FeedbackEnv& env_;
  const DetectorScorer* scorer_;
};

std::string sequence_fqdn(std::span<const TokenId> tokens, const TokenDict& dict,
                          std::string_view tld);

// One episode of `length` tokens from the date's seed. Sample mode draws
// from `rng`; argmax ignores it.
EpisodeTrace generate_episode(const PolicyParams& p, const Date& date, const TokenDict& dict,
                              const SeedSpace& space, std::size_t length, SelectMode mode,
                              Rng& rng, std::string_view tld = kDefaultTld);

// Completes prefix + action to `length` tokens m times. Rollout j samples
// from the stream derive_stream(master_seed, {t, action, j}) where
// t = prefix.size().
std::vector<std::vector<TokenId>> mc_rollouts(const PolicyParams& p,
                                              std::span<const double> seed_vec,
                                              std::span<const TokenId> prefix, TokenId action,
                                              std::size_t m, std::size_t length,
                                              const TokenDict& dict, std::uint64_t master_seed);

// Mean reward of m completions, or the direct reward when the action ends
// the sequence.
double estimate_action_reward(RewardSource& rewards, const PolicyParams& p,
                              std::span<const double> seed_vec, std::span<const TokenId> prefix,
                              TokenId action, const TrainConfig& cfg, const TokenDict& dict,
                              std::uint64_t master_seed);

// Ascent step p += lr * grad after optional max-norm clipping. Throws
// kNumeric on a non-finite gradient, leaving p untouched.
template <typename T>
void apply_gradient(PolicyParamsT<T>& p, PolicyParamsT<T> grad, double lr, double max_norm) {
  require(grad.finite(), ErrorCode::kNumeric, "non-finite policy gradient");
  if (max_norm > 0.0) {
    const double norm = l2_norm(grad);
    if (norm > max_norm) scale(grad, static_cast<T>(max_norm / norm));
  }
  if (lr == 0.0) return;
  axpy(p, static_cast<T>(lr), grad);
}

// Batch-averaged sampled likelihood-ratio gradient with per-step weights.
template <typename T>
PolicyParamsT<T> batch_gradient(const PolicyParamsT<T>& p, std::span<const Trajectory> trajs,
                                std::span<const std::vector<T>> weights) {
  require(!trajs.empty() && trajs.size() == weights.size(), ErrorCode::kContract,
          "batch needs one weight vector per trajectory");
  std::vector<PolicyParamsT<T>> slots(trajs.size());
  parallel_for(trajs.size(), [&](std::size_t i) {
    slots[i] = logprob_grad(p, trajs[i], std::span<const T>(weights[i]));
  });
  PolicyParamsT<T> total = PolicyParamsT<T>::zeros(p.shape);
  for (const auto& g : slots) axpy(total, T{1}, g);
  scale(total, static_cast<T>(1.0 / static_cast<double>(trajs.size())));
  return total;
}

template <typename T>
void policy_gradient_step(PolicyParamsT<T>& p, std::span<const Trajectory> trajs,
                          std::span<const std::vector<T>> weights, double lr, double max_norm) {
  bool any = false;
  for (const auto& w : weights)
    for (T v : w) any = any || v != T{0};
  if (!any) return;
  apply_gradient(p, batch_gradient(p, trajs, weights), lr, max_norm);
}

struct TrainOptions {
  std::optional<PolicyParams> initial;      // warm start
  const DetectorScorer* scorer = nullptr;   // required for shaped rewards
  std::filesystem::path checkpoint;         // best params written here when set
  std::function<void(std::size_t epoch, double reward)> on_epoch;
};

struct TrainResult {
  PolicyParams best;
  PolicyParams last;
  RewardCurve curve;
  std::size_t best_epoch = 0;
  std::vector<std::string> registered;  // names that went through, in order
};

// Runs cfg.epochs epochs of {sample batch, estimate rewards, update}. The
// best-reward parameters are the ones that generated the best epoch.
TrainResult train(FeedbackEnv& env, const TrainConfig& cfg, const TokenDict& dict,
                  const SeedSpace& space, std::uint64_t seed, const TrainOptions& options = {});

// Coordinate-wise hyperparameter search. Each HP is swept in order with the
// others fixed, every candidate trained from scratch on a fresh environment,
// and the best value locked in before moving on.
struct HpCandidates {
  std::string name;  // layers, embed, hidden, mc, lr, batch
  std::vector<double> values;
};

struct TuningRow {
  std::size_t run = 0;
  TrainConfig cfg;
  double reward = 0.0;
};

struct GridResult {
  TrainConfig best;
  std::vector<TuningRow> log;
};

using EnvFactory = std::function<std::unique_ptr<FeedbackEnv>()>;

GridResult grid_search(const EnvFactory& make_env, const TrainConfig& defaults,
                       std::span<const HpCandidates> space, const TokenDict& dict,
                       const SeedSpace& seeds, std::uint64_t seed);

std::string tuning_log_tsv(std::span<const TuningRow> rows);

// ------------------------------------------------------------ inference

// The ordered candidate list for one date: candidate j is sampled from the
// stream derive_stream(rng_seed(date), {j}).
std::vector<std::string> pkdga_candidates(const PolicyParams& p, const TokenDict& dict,
                                          const SeedSpace& space, const Date& date,
                                          std::size_t k, std::size_t length,
                                          std::string_view tld = kDefaultTld);

// `count` fresh names on dates drawn uniformly from the seed space.
std::vector<std::string> pkdga_generate(const PolicyParams& p, const TokenDict& dict,
                                        const SeedSpace& space, std::size_t count,
                                        std::size_t length, std::uint64_t seed,
                                        std::string_view tld = kDefaultTld);

}  // namespace pkdga
