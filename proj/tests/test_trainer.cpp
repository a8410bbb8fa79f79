#include <gtest/gtest.h>

#include <numeric>

#include "parallel.hpp"
#include "policy_oracle.hpp"
#include "test_util.hpp"
#include "trainer.hpp"
#include "trainer_envs.hpp"

namespace pkdga {
namespace {

using namespace std::chrono_literals;

SeedSpace space_for(const TokenDict& dict) {
  return SeedSpace(Date{2020y / 1 / 1}, Date{2020y / 12 / 31}, dict.size());
}

bool always(std::string_view) { return true; }
bool never(std::string_view) { return false; }

TEST(RlTrainer, SingleTokenEpisode) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 4, 4, 37}, dict, 1);
  Rng rng(5);
  const auto tr = generate_episode(p, Date{2020y / 3 / 1}, dict, space_for(dict), 1,
                                   SelectMode::kSample, rng);
  EXPECT_EQ(tr.trajectory.tokens.size(), 1u);
  EXPECT_EQ(tr.distributions.size(), 1u);
  EXPECT_EQ(tr.fqdn, std::string(1, dict.token(tr.trajectory.tokens[0])) + ".com");
}

TEST(RlTrainer, ZeroWeightsArgmaxRepeatsFirstToken) {
  TokenDict dict;
  const auto p = PolicyParams::zeros(PolicyShape{1, 4, 4, 37});
  Rng rng(0);
  const auto tr = generate_episode(p, Date{2020y / 3 / 1}, dict, space_for(dict), 12,
                                   SelectMode::kArgmax, rng);
  EXPECT_EQ(tr.trajectory.tokens, std::vector<TokenId>(12, 0));
  EXPECT_EQ(tr.fqdn, "aaaaaaaaaaaa.com");
}

TEST(RlTrainer, SampledEpisodeIsDeterministic) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 8, 8, 37}, dict, 2);
  Rng a(77), b(77);
  const auto x = generate_episode(p, Date{2020y / 5 / 5}, dict, space_for(dict), 12, SelectMode::kSample, a);
  const auto y = generate_episode(p, Date{2020y / 5 / 5}, dict, space_for(dict), 12, SelectMode::kSample, b);
  EXPECT_EQ(x.trajectory.tokens, y.trajectory.tokens);
  EXPECT_EQ(x.fqdn, y.fqdn);
  EXPECT_TRUE(validate_domain(x.fqdn));
}

TEST(RlTrainer, TerminalRolloutsAreTheCompletedSequence) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 4, 4, 37}, dict, 3);
  const auto seed = encode_seed(Date{2020y / 1 / 9}, dict, space_for(dict)).vec;
  const std::vector<TokenId> prefix{1, 2, 3, 4};
  const auto r = mc_rollouts(p, seed, prefix, 7, 4, 5, dict, 99);
  ASSERT_EQ(r.size(), 4u);
  for (const auto& s : r) EXPECT_EQ(s, (std::vector<TokenId>{1, 2, 3, 4, 7}));
}

TEST(RlTrainer, RolloutsFollowTheirDerivedStreams) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 6, 6, 37}, dict, 4);
  const auto seed = encode_seed(Date{2020y / 2 / 2}, dict, space_for(dict)).vec;
  const std::vector<TokenId> prefix{5, 6};
  const std::uint64_t master = 1234;
  const auto r = mc_rollouts(p, seed, prefix, 8, 3, 8, dict, master);
  EXPECT_EQ(r, mc_rollouts(p, seed, prefix, 8, 3, 8, dict, master));
  for (std::size_t j = 0; j < 3; ++j) {
    // Replay by hand from the documented stream.
    auto hs = HiddenState<float>::zeros(p.shape);
    hs = forward_step(p, PolicyInput(std::span<const double>(seed)), hs).second;
    std::vector<TokenId> seq(prefix);
    for (TokenId tok : prefix) hs = forward_step(p, PolicyInput(tok), hs).second;
    seq.push_back(8);
    Rng rng(derive_stream(master, {2, 8, j}));
    while (seq.size() < 8) {
      auto [d, next] = forward_step(p, PolicyInput(seq.back()), hs, edge_mask(dict, seq.size(), 8));
      seq.push_back(select_action(d, SelectMode::kSample, rng));
      hs = next;
    }
    EXPECT_EQ(r[j], seq) << "rollout " << j;
  }
}

TEST(RlTrainer, DeterministicPolicyRolloutsAgree) {
  TokenDict dict;
  auto p = PolicyParams::zeros(PolicyShape{1, 4, 4, 37});
  p.projection_bias[4] = 60.0f;
  const auto seed = encode_seed(Date{2020y / 2 / 2}, dict, space_for(dict)).vec;
  const auto r = mc_rollouts(p, seed, std::vector<TokenId>{}, 0, 6, 10, dict, 5);
  for (const auto& s : r) EXPECT_EQ(s, r.front());
  EXPECT_EQ(r.front().back(), 4);
}

TEST(RlTrainer, ActionRewardCeilingAndFloor) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 4, 4, 37}, dict, 5);
  const auto seed = encode_seed(Date{2020y / 2 / 2}, dict, space_for(dict)).vec;
  TrainConfig cfg;
  cfg.shape = p.shape;
  cfg.mc = 4;
  cfg.length = 8;
  test::PredicateEnv yes(always), no(never);
  RewardSource ry(yes), rn(no);
  const std::vector<TokenId> prefix{1, 2};
  EXPECT_EQ(estimate_action_reward(ry, p, seed, prefix, 3, cfg, dict, 1), 1.0);
  EXPECT_EQ(estimate_action_reward(rn, p, seed, prefix, 3, cfg, dict, 1), 0.0);
  EXPECT_EQ(yes.query_count(), 4u);
  // Terminal action: one direct registration.
  const std::vector<TokenId> full{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(estimate_action_reward(ry, p, seed, full, 3, cfg, dict, 1), 1.0);
  EXPECT_EQ(yes.query_count(), 5u);
}

TEST(RlTrainer, ActionRewardOnTwoTokenDictionary) {
  // Every completion of prefix "a" starts with 'a'; every completion of "b"
  // starts with 'b', so the estimates are exactly 1 and 0.
  TokenDict dict("ab");
  const auto p = init_params(PolicyShape{1, 3, 3, 2}, dict, 6);
  const auto seed = encode_seed(Date{2020y / 2 / 2}, dict, space_for(dict)).vec;
  TrainConfig cfg;
  cfg.shape = p.shape;
  cfg.mc = 5;
  cfg.length = 6;
  test::PredicateEnv env([](std::string_view core) { return core.front() == 'a'; });
  RewardSource rs(env);
  EXPECT_EQ(estimate_action_reward(rs, p, seed, std::vector<TokenId>{}, 0, cfg, dict, 3), 1.0);
  EXPECT_EQ(estimate_action_reward(rs, p, seed, std::vector<TokenId>{}, 1, cfg, dict, 3), 0.0);
}

TEST(RlTrainer, EstimateVarianceShrinksWithMoreRollouts) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 8, 8, 37}, dict, 8);
  const auto seed = encode_seed(Date{2020y / 7 / 7}, dict, space_for(dict)).vec;
  test::PredicateEnv env([](std::string_view core) {
    return std::count_if(core.begin(), core.end(), [](char c) { return c >= 'a' && c <= 'm'; }) >= 4;
  });
  RewardSource rs(env);
  auto variance = [&](std::size_t m) {
    TrainConfig cfg;
    cfg.shape = p.shape;
    cfg.mc = m;
    cfg.length = 10;
    std::vector<double> v;
    for (std::uint64_t trial = 0; trial < 300; ++trial)
      v.push_back(estimate_action_reward(rs, p, seed, std::vector<TokenId>{3}, 2, cfg, dict, trial));
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / (v.size() - 1);
  };
  const double v5 = variance(5), v20 = variance(20);
  EXPECT_GT(v5, 0.0);
  EXPECT_LE(v20, v5);
}

TEST(RlTrainer, ZeroRewardsOrZeroLearningRateLeaveParamsUnchanged) {
  const auto tc = oracle::random_tiny_case(31);
  const std::vector<Trajectory> trajs{tc.traj};
  auto p = tc.params;
  const std::vector<std::vector<double>> zero{std::vector<double>(tc.traj.tokens.size(), 0.0)};
  policy_gradient_step<double>(p, trajs, zero, 0.5, 0.0);
  EXPECT_TRUE(p == tc.params);
  const std::vector<std::vector<double>> w{tc.weights};
  policy_gradient_step<double>(p, trajs, w, 0.0, 0.0);
  EXPECT_TRUE(p == tc.params);
}

TEST(RlTrainer, PolicyGradientStepMatchesFiniteDifferenceAscent) {
  const auto tc = oracle::random_tiny_case(41);
  const double lr = 0.05;
  auto p = tc.params;
  policy_gradient_step<double>(p, std::vector<Trajectory>{tc.traj},
                               std::vector<std::vector<double>>{tc.weights}, lr, 0.0);
  const auto fd = oracle::numeric_gradient(
      tc.params,
      [&](const PolicyParamsT<double>& q) { return oracle::weighted_logprob(q, tc.traj, tc.weights); },
      1e-5);
  const auto before = oracle::flatten(tc.params), after = oracle::flatten(p);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i] + lr * fd[i], 1e-6);
}

TEST(RlTrainer, BatchGradientIsTheMean) {
  const auto a = oracle::random_tiny_case(51);
  auto b = a;
  b.traj.tokens.back() = static_cast<TokenId>((b.traj.tokens.back() + 1) % a.params.shape.output_dim);
  if (!b.traj.allowed.empty()) b.traj.allowed.assign(b.traj.allowed.size(), ~std::uint64_t{0} >> (64 - a.params.shape.output_dim));
  const std::vector<Trajectory> trajs{a.traj, b.traj};
  const std::vector<std::vector<double>> w{a.weights, b.weights};
  const auto g = oracle::flatten(batch_gradient<double>(a.params, trajs, w));
  const auto ga = oracle::flatten(logprob_grad(a.params, a.traj, std::span<const double>(a.weights)));
  const auto gb = oracle::flatten(logprob_grad(a.params, b.traj, std::span<const double>(b.weights)));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 0.5 * (ga[i] + gb[i]), 1e-14);
}

TEST(RlTrainer, NonFiniteGradientAbortsWithoutUpdate) {
  auto p = PolicyParamsT<double>::zeros(PolicyShape{1, 2, 2, 3});
  auto g = p;
  g.projection_bias[1] = std::numeric_limits<double>::quiet_NaN();
  const auto keep = p;
  EXPECT_PKDGA_ERROR(apply_gradient(p, g, 0.1, 0.0), ErrorCode::kNumeric);
  EXPECT_TRUE(p == keep);
}

TEST(RlTrainer, GradientClippingBoundsTheStep) {
  auto p = PolicyParamsT<double>::zeros(PolicyShape{1, 2, 2, 3});
  auto g = p;
  g.projection_bias = {3.0, 4.0, 0.0};
  apply_gradient(p, g, 1.0, 1.0);
  EXPECT_NEAR(l2_norm(p), 1.0, 1e-12);
  EXPECT_NEAR(p.projection_bias[0], 0.6, 1e-12);
}

TEST(RlTrainer, EverythingRewardedGivesConstantCurve) {
  TokenDict dict;
  TrainConfig cfg;
  cfg.shape = PolicyShape{1, 4, 4, 37};
  cfg.batch = 4;
  cfg.mc = 2;
  cfg.length = 7;
  cfg.epochs = 5;
  test::PredicateEnv env(always);
  const auto r = train(env, cfg, dict, space_for(dict), 11);
  EXPECT_EQ(r.curve.mean_reward, std::vector<double>(5, 1.0));
  EXPECT_EQ(r.best_epoch, 0u);
  EXPECT_EQ(r.registered.size(), 20u);
}

TrainConfig sanity_config() {
  TrainConfig cfg;
  cfg.shape = PolicyShape{1, 4, 8, 2};
  cfg.batch = 16;
  cfg.mc = 4;
  cfg.length = 7;
  cfg.epochs = 200;
  cfg.lr = 0.1;
  return cfg;
}

bool all_a(std::string_view core) { return core.find_first_not_of('a') == std::string_view::npos; }

void expect_learns(const RewardCurve& c) {
  const auto& r = c.mean_reward;
  ASSERT_EQ(r.size(), 200u);
  EXPECT_GE(*std::max_element(r.begin(), r.end()), 0.95);
  const double first = std::accumulate(r.begin(), r.begin() + 50, 0.0) / 50.0;
  const double last = std::accumulate(r.end() - 50, r.end(), 0.0) / 50.0;
  EXPECT_GT(last, first);
}

TEST(RlTrainer, LearnsClosedWorldSanityEnvironment) {
  TokenDict dict("ab");
  test::PredicateEnv env(all_a);
  const auto r = train(env, sanity_config(), dict, space_for(dict), 2024);
  expect_learns(r.curve);
}

TEST(RlTrainer, FullEnumerationLearnsSanityEnvironment) {
  TokenDict dict("ab");
  auto cfg = sanity_config();
  cfg.full_enumeration = true;
  test::PredicateEnv env(all_a);
  const auto r = train(env, cfg, dict, space_for(dict), 2024);
  expect_learns(r.curve);
}

TEST(RlTrainer, ConfigValidation) {
  TokenDict dict;
  TrainConfig cfg;
  cfg.shape.output_dim = 37;
  cfg.full_enumeration = true;
  EXPECT_PKDGA_ERROR(cfg.validate(dict), ErrorCode::kUsage);
  cfg.full_enumeration = false;
  cfg.length = 25;
  EXPECT_PKDGA_ERROR(cfg.validate(dict), ErrorCode::kUsage);
  cfg.length = 12;
  cfg.lr = 0.0;
  EXPECT_PKDGA_ERROR(cfg.validate(dict), ErrorCode::kUsage);
  cfg.lr = 0.01;
  cfg.reward_mode = RewardMode::kShaped;
  cfg.epochs = 1;
  test::PredicateEnv env(always);
  EXPECT_PKDGA_ERROR(train(env, cfg, dict, space_for(dict), 1), ErrorCode::kUsage);
}

TEST(RlTrainer, TrainingIsIndependentOfThreadCount) {
  TokenDict dict;
  TrainConfig cfg;
  cfg.shape = PolicyShape{1, 6, 8, 37};
  cfg.batch = 6;
  cfg.mc = 3;
  cfg.length = 8;
  cfg.epochs = 4;
  cfg.lr = 0.05;
  auto run = [&](std::size_t threads) {
    set_thread_count(threads);
    test::PredicateEnv env([](std::string_view c) { return c.find_first_of("0123456789") == std::string_view::npos; },
                           true);
    auto r = train(env, cfg, dict, space_for(dict), 5);
    set_thread_count(0);
    return r;
  };
  const auto a = run(1), b = run(4);
  EXPECT_EQ(a.curve.mean_reward, b.curve.mean_reward);
  EXPECT_TRUE(a.last == b.last);
  EXPECT_TRUE(a.best == b.best);
  EXPECT_EQ(a.registered, b.registered);
}

TEST(RlTrainer, CheckpointHoldsBestParameters) {
  TokenDict dict("ab");
  test::TempDir dir("train");
  auto cfg = sanity_config();
  cfg.epochs = 20;
  test::PredicateEnv env(all_a);
  TrainOptions opt;
  opt.checkpoint = dir / "best.ckpt";
  std::size_t calls = 0;
  opt.on_epoch = [&](std::size_t, double) { ++calls; };
  const auto r = train(env, cfg, dict, space_for(dict), 3, opt);
  EXPECT_EQ(calls, 20u);
  EXPECT_TRUE(load_policy(opt.checkpoint) == r.best);
  const auto& c = r.curve.mean_reward;
  EXPECT_EQ(static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin()), r.best_epoch);
}

TEST(RlTrainer, GridSearchRunCounts) {
  TokenDict dict;
  TrainConfig defaults;
  defaults.shape = PolicyShape{1, 4, 4, 37};
  defaults.batch = 2;
  defaults.mc = 1;
  defaults.length = 7;
  defaults.epochs = 1;
  std::size_t envs = 0;
  const EnvFactory factory = [&] {
    ++envs;
    return std::make_unique<test::PredicateEnv>(always);
  };
  const std::vector<HpCandidates> one{{"hidden", {6}}};
  const auto g1 = grid_search(factory, defaults, one, dict, space_for(dict), 1);
  EXPECT_EQ(g1.log.size(), 1u);
  EXPECT_EQ(envs, 1u);
  EXPECT_EQ(g1.best.shape.hidden_dim, 6u);
  envs = 0;
  const std::vector<HpCandidates> two{{"embed", {4, 8}}, {"lr", {0.1, 0.001}}};
  const auto g2 = grid_search(factory, defaults, two, dict, space_for(dict), 1);
  EXPECT_EQ(g2.log.size(), 4u);
  EXPECT_EQ(envs, 4u);
  const auto tsv = tuning_log_tsv(g2.log);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "#\tN_l\td_e\td_h\tm\tlr\tb\treward");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 5);
  const std::vector<HpCandidates> bad{{"dropout", {0.1}}};
  EXPECT_PKDGA_ERROR(grid_search(factory, defaults, bad, dict, space_for(dict), 1), ErrorCode::kUsage);
}

TEST(RlTrainer, CandidateListsAreSeedSynchronized) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 8, 8, 37}, dict, 12);
  const auto space = space_for(dict);
  const auto cc = pkdga_candidates(p, dict, space, Date{2020y / 4 / 1}, 20, 12);
  const auto bot = pkdga_candidates(p, dict, space, Date{2020y / 4 / 1}, 20, 12);
  EXPECT_EQ(cc, bot);
  EXPECT_NE(cc, pkdga_candidates(p, dict, space, Date{2020y / 4 / 2}, 20, 12));
  for (const auto& name : cc) EXPECT_TRUE(validate_domain(name)) << name;
}

TEST(RlTrainer, GenerateIsDeterministicAndValid) {
  TokenDict dict;
  const auto p = init_params(PolicyShape{1, 8, 8, 37}, dict, 13);
  const auto a = pkdga_generate(p, dict, space_for(dict), 600, 12, 4);
  EXPECT_EQ(a.size(), 600u);
  set_thread_count(1);
  const auto b = pkdga_generate(p, dict, space_for(dict), 600, 12, 4);
  set_thread_count(0);
  EXPECT_EQ(a, b);
  for (const auto& name : a) EXPECT_TRUE(validate_domain(name)) << name;
}

}  // namespace
}  // namespace pkdga
