#include "workflows.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>
#include <unordered_set>

#include "checkpoint.hpp"
#include "errors.hpp"
#include "manifest.hpp"
#include "parallel.hpp"

#ifndef PKDGA_BUNDLED_DATA_DIR
#define PKDGA_BUNDLED_DATA_DIR "data"
#endif

namespace pkdga {

namespace {

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::filesystem::path prepare_out(const std::filesystem::path& out_dir) {
  require(!out_dir.empty(), ErrorCode::kUsage, "an output directory is required");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  return out_dir;
}

void apply_threads(const Config& cfg) { set_thread_count(cfg.get_size("run.threads")); }

std::filesystem::path absolute_path(const std::string& p) {
  return std::filesystem::absolute(std::filesystem::path(p)).lexically_normal();
}

std::vector<std::string> clean_corpus(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& l : lines)
    if (validate_domain(l) && seen.insert(l).second) out.push_back(l);
  return out;
}

// Benign and AGD names for a single-generator detector corpus.
LabeledCorpus detector_corpus(const LabResources& res, const Config& cfg, std::uint64_t seed) {
  const std::size_t n = cfg.get_size("detector.samples");
  require(n >= 2, ErrorCode::kUsage, "detector.samples must be at least 2");
  require(n <= res.benign.size(), ErrorCode::kData, "not enough benign names for detector.samples");
  std::vector<std::string> benign(res.benign.begin(), res.benign.begin() + static_cast<std::ptrdiff_t>(n));
  const auto dga = parse_dga(cfg.get("detector.dga"));
  const auto agd = baseline_domains(dga, res.words, derive_stream(seed, {0x6167}) % Lcg::kModulus, n);
  return make_corpus(benign, agd);
}

void write_text(const std::filesystem::path& path, const std::string& text) { write_file(path, text); }

std::string tsv_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PKDGA_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return PKDGA_BUNDLED_DATA_DIR;
}

ResolvedInputs resolve_inputs(Config& cfg) {
  const std::filesystem::path dir =
      cfg.get("data.dir").empty() ? default_data_dir() : std::filesystem::path(cfg.get("data.dir"));
  if (cfg.get("data.benign").empty()) cfg.set("data.benign", (dir / "benign_domains.txt").string());
  if (cfg.get("data.words").empty()) cfg.set("data.words", (dir / "words.txt").string());
  cfg.set("data.benign", absolute_path(cfg.get("data.benign")).string());
  cfg.set("data.words", absolute_path(cfg.get("data.words")).string());
  cfg.set("data.dir", absolute_path(dir.string()).string());
  ResolvedInputs r{cfg.get("data.benign"), cfg.get("data.words")};
  require(std::filesystem::exists(r.benign), ErrorCode::kIo, "benign corpus not found: " + r.benign.string());
  require(std::filesystem::exists(r.words), ErrorCode::kIo, "word list not found: " + r.words.string());
  return r;
}

LabResources load_resources(const Config& cfg) {
  auto benign = clean_corpus(read_lines(cfg.get("data.benign")));
  require(!benign.empty(), ErrorCode::kData, "benign corpus is empty");
  TokenDict dict;
  SeedSpace seeds(parse_date(cfg.get("seed.start")), parse_date(cfg.get("seed.end")), dict.size());
  return LabResources{std::move(benign), WordDict::load(cfg.get("data.words")), dict, seeds};
}

TrainConfig train_config(const Config& cfg) {
  TrainConfig t;
  t.shape.layers = cfg.get_size("policy.layers");
  t.shape.embed_dim = cfg.get_size("policy.embed");
  t.shape.hidden_dim = cfg.get_size("policy.hidden");
  t.shape.output_dim = TokenDict().size();
  t.lr = cfg.get_double("train.lr");
  t.batch = cfg.get_size("train.batch");
  t.mc = cfg.get_size("train.mc");
  t.length = cfg.get_size("train.length");
  t.epochs = cfg.get_size("train.epochs");
  const auto mode = cfg.get("train.reward_mode");
  require(mode == "binary" || mode == "shaped", ErrorCode::kUsage, "train.reward_mode must be binary or shaped");
  t.reward_mode = mode == "binary" ? RewardMode::kBinary : RewardMode::kShaped;
  t.full_enumeration = cfg.get_bool("train.full_enumeration");
  t.max_norm = cfg.get_double("train.max_norm");
  t.tld = cfg.get("train.tld");
  require(is_allowed_tld(t.tld), ErrorCode::kUsage, "train.tld is not on the allow-list");
  require(t.length >= kMinEpisodeLength && t.length <= kMaxEpisodeLength, ErrorCode::kUsage,
          "train.length outside [7, 24]");
  t.validate(TokenDict());
  return t;
}

DetectorHyper detector_hyper(const Config& cfg) {
  DetectorHyper hp;
  hp.reference_count = cfg.get_size("detector.references");
  hp.logistic_iterations = cfg.get_size("detector.logistic_iterations");
  hp.trees = cfg.get_size("detector.trees");
  hp.max_depth = cfg.get_size("detector.depth");
  hp.min_repeats = cfg.get_size("detector.min_repeats");
  hp.embed_dim = cfg.get_size("detector.embed");
  hp.hidden_dim = cfg.get_size("detector.hidden");
  hp.layers = cfg.get_size("detector.layers");
  hp.epochs = cfg.get_size("detector.epochs");
  hp.batch = cfg.get_size("detector.batch");
  hp.lr = cfg.get_double("detector.lr");
  hp.dictionary = WordDict::load(cfg.get("data.words")).words();
  return hp;
}

void run_prep(Config cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  apply_threads(cfg);
  const auto in = resolve_inputs(cfg);
  prepare_out(out_dir);
  write_manifest(out_dir, {"prep", cfg, {{"benign", in.benign}, {"words", in.words}}});
  const auto res = load_resources(cfg);
  const auto seed = cfg.get_u64("run.seed");
  write_lines(out_dir / "benign.txt", res.benign);
  const std::size_t n = cfg.get_size("detector.samples");
  for (DgaKind d : {DgaKind::kKraken, DgaKind::kGozi, DgaKind::kSuppobox}) {
    const auto names = baseline_domains(d, res.words, derive_stream(seed, {static_cast<std::uint64_t>(d)}) % Lcg::kModulus, n);
    write_lines(out_dir / (dga_name(d) + ".txt"), names);
  }
  say(log, "prep: " + std::to_string(res.benign.size()) + " benign names");
}

void run_detector_train(Config cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  apply_threads(cfg);
  const auto in = resolve_inputs(cfg);
  prepare_out(out_dir);
  write_manifest(out_dir, {"detector-train", cfg, {{"benign", in.benign}, {"words", in.words}}});
  const auto res = load_resources(cfg);
  const auto seed = cfg.get_u64("run.seed");
  const auto corpus = detector_corpus(res, cfg, seed);
  const auto [train_set, test_set] = split_dataset(corpus, cfg.get_double("detector.split"), seed);
  const auto spec = parse_detector_spec(cfg.get("detector.kind"));
  const auto model = train_detector(spec, train_set, detector_hyper(cfg), seed);
  save_detector(out_dir / "detector.ckpt", model);
  std::vector<ScoredLabel> scored;
  for (const auto& e : test_set) scored.push_back({model.score(e.domain), e.label});
  const auto roc = roc_auc(scored);
  const auto cm = confusion(scored, model.threshold());
  std::ostringstream os;
  os << "detector\ttrain_dga\tauc\tanti_detection\tthreshold\ttp\tfp\ttn\tfn\n"
     << detector_name(spec) << '\t' << cfg.get("detector.dga") << '\t' << tsv_double(roc.auc) << '\t'
     << tsv_double(anti_detection(roc.auc)) << '\t' << tsv_double(model.threshold()) << '\t' << cm.tp
     << '\t' << cm.fp << '\t' << cm.tn << '\t' << cm.fn << '\n';
  write_text(out_dir / "detector_eval.tsv", os.str());
  write_text(out_dir / "roc.csv", roc_csv(roc));
  say(log, detector_name(spec) + " held-out AUC " + tsv_double(roc.auc));
}

void run_train(Config cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  apply_threads(cfg);
  const auto in = resolve_inputs(cfg);
  require(!cfg.get("env.detector").empty(), ErrorCode::kUsage, "train needs env.detector (--env)");
  cfg.set("env.detector", absolute_path(cfg.get("env.detector")).string());
  prepare_out(out_dir);
  write_manifest(out_dir, {"train", cfg,
                           {{"benign", in.benign}, {"words", in.words}, {"detector", cfg.get("env.detector")}}});
  const auto res = load_resources(cfg);
  const auto seed = cfg.get_u64("run.seed");
  const auto tc = train_config(cfg);
  auto detector = std::make_shared<DetectorModel>(load_detector(cfg.get("env.detector")));
  DnsEnvConfig env_cfg;
  env_cfg.query_budget = cfg.get_u64("env.budget");
  if (!cfg.get("env.threshold").empty()) env_cfg.threshold = cfg.get_double("env.threshold");
  if (cfg.get_bool("env.audit_log")) env_cfg.audit_log = out_dir / "audit.tsv";
  DnsEnv env(detector, res.benign, env_cfg);
  DetectorScorer scorer(detector);
  TrainOptions opts;
  opts.scorer = &scorer;
  opts.checkpoint = out_dir / "policy.ckpt";
  opts.on_epoch = [&](std::size_t e, double r) {
    say(log, "epoch " + std::to_string(e) + " reward " + tsv_double(r));
  };
  const auto result = train(env, tc, res.dict, res.seeds, seed, opts);
  std::ostringstream os;
  os << "epoch\tmean_reward\n";
  for (std::size_t e = 0; e < result.curve.mean_reward.size(); ++e)
    os << e << '\t' << tsv_double(result.curve.mean_reward[e]) << '\n';
  write_text(out_dir / "reward_curve.tsv", os.str());
  const auto samples = pkdga_generate(result.best, res.dict, res.seeds, 100, tc.length, seed, tc.tld);
  write_lines(out_dir / "samples.txt", samples);
  say(log, "best epoch " + std::to_string(result.best_epoch) + ", " +
               std::to_string(env.query_count()) + " registration queries");
}

std::vector<std::string> run_generate(Config cfg, const std::string& dga, std::size_t count) {
  apply_threads(cfg);
  resolve_inputs(cfg);
  require(count >= 1, ErrorCode::kUsage, "count must be at least 1");
  const auto kind = parse_dga(dga);
  const auto seed = cfg.get_u64("run.seed");
  if (kind != DgaKind::kPkdga) {
    return baseline_domains(kind, WordDict::load(cfg.get("data.words")), seed, count);
  }
  require(!cfg.get("generate.policy").empty(), ErrorCode::kUsage, "pkdga generation needs --policy");
  const auto policy = load_policy(cfg.get("generate.policy"));
  TokenDict dict;
  SeedSpace seeds(parse_date(cfg.get("seed.start")), parse_date(cfg.get("seed.end")), dict.size());
  const auto length = cfg.get_size("train.length");
  if (!cfg.get("generate.date").empty())
    return pkdga_candidates(policy, dict, seeds, parse_date(cfg.get("generate.date")), count, length,
                            cfg.get("train.tld"));
  return pkdga_generate(policy, dict, seeds, count, length, seed, cfg.get("train.tld"));
}

void run_eval(Config cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  apply_threads(cfg);
  const auto in = resolve_inputs(cfg);
  require(!cfg.get("env.detector").empty(), ErrorCode::kUsage, "eval needs env.detector (--detector)");
  cfg.set("env.detector", absolute_path(cfg.get("env.detector")).string());
  std::vector<std::pair<std::string, std::filesystem::path>> inputs = {
      {"benign", in.benign}, {"words", in.words}, {"detector", cfg.get("env.detector")}};
  if (!cfg.get("eval.policy").empty()) {
    cfg.set("eval.policy", absolute_path(cfg.get("eval.policy")).string());
    inputs.emplace_back("policy", cfg.get("eval.policy"));
  }
  prepare_out(out_dir);
  write_manifest(out_dir, {"eval", cfg, inputs});
  const auto res = load_resources(cfg);
  const auto seed = cfg.get_u64("run.seed");
  const auto detector = load_detector(cfg.get("env.detector"));
  const std::size_t n = cfg.get_size("eval.samples");
  require(n <= res.benign.size(), ErrorCode::kData, "not enough benign names for eval.samples");
  // The tail of the benign list: disjoint from the head used for training.
  std::vector<std::string> benign(res.benign.end() - static_cast<std::ptrdiff_t>(n), res.benign.end());
  Config gen_cfg = cfg;
  gen_cfg.set("generate.policy", cfg.get("eval.policy"));
  gen_cfg.set("run.seed", std::to_string(derive_stream(seed, {0x6576616c}) % Lcg::kModulus));
  const auto agd = run_generate(gen_cfg, cfg.get("eval.dga"), n);
  std::vector<ScoredLabel> scored;
  for (const auto& d : benign) scored.push_back({detector.score(d), Label::kBenign});
  for (const auto& d : agd) scored.push_back({detector.score(d), Label::kAgd});
  const auto roc = roc_auc(scored);
  std::ostringstream os;
  os << "detector\ttest_dga\tauc\tanti_detection\n"
     << detector_name(detector.spec()) << '\t' << cfg.get("eval.dga") << '\t' << tsv_double(roc.auc)
     << '\t' << tsv_double(anti_detection(roc.auc)) << '\n';
  write_text(out_dir / "eval.tsv", os.str());
  write_text(out_dir / "roc.csv", roc_csv(roc));
  say(log, "AUC " + tsv_double(roc.auc));
}

void run_matrix_workflow(Config cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  apply_threads(cfg);
  const auto in = resolve_inputs(cfg);
  prepare_out(out_dir);
  write_manifest(out_dir, {"matrix", cfg, {{"benign", in.benign}, {"words", in.words}}});
  const auto res = load_resources(cfg);
  MatrixConfig mc;
  mc.dgas.clear();
  for (const auto& d : cfg.get_list("matrix.dgas")) mc.dgas.push_back(parse_dga(d));
  for (const auto& d : cfg.get_list("matrix.detectors")) mc.detectors.push_back(parse_detector_spec(d));
  mc.samples = cfg.get_size("matrix.samples");
  mc.split_ratio = cfg.get_double("detector.split");
  mc.detector_hp = detector_hyper(cfg);
  mc.pkdga = train_config(cfg);
  mc.query_budget = cfg.get_u64("env.budget");
  const auto m = run_matrix(res, mc, cfg.get_u64("run.seed"), log);
  write_text(out_dir / "matrix.tsv", matrix_tsv(m));
  write_text(out_dir / "table.tsv", table_tsv(m));
  std::ostringstream os;
  os << "train_dga\ttest_dga\tdetector\tauc\tanti_detection\terror\n";
  for (const auto& c : m.cells)
    os << dga_name(c.train_dga) << '\t' << dga_name(c.test_dga) << '\t' << c.detector << '\t'
       << (c.auc ? tsv_double(*c.auc) : "NA") << '\t' << (c.auc ? tsv_double(1.0 - *c.auc) : "NA")
       << '\t' << c.error << '\n';
  write_text(out_dir / "cells.tsv", os.str());
}

void run_game(Config cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  apply_threads(cfg);
  const auto in = resolve_inputs(cfg);
  std::vector<std::pair<std::string, std::filesystem::path>> inputs = {{"benign", in.benign},
                                                                       {"words", in.words}};
  if (!cfg.get("env.detector").empty()) {
    cfg.set("env.detector", absolute_path(cfg.get("env.detector")).string());
    inputs.emplace_back("detector", cfg.get("env.detector"));
  }
  prepare_out(out_dir);
  write_manifest(out_dir, {"game", cfg, inputs});
  const auto res = load_resources(cfg);
  const auto seed = cfg.get_u64("run.seed");
  const auto hp = detector_hyper(cfg);
  std::optional<DetectorModel> detector;
  if (!cfg.get("env.detector").empty()) {
    detector = load_detector(cfg.get("env.detector"));
  } else {
    const auto corpus = detector_corpus(res, cfg, seed);
    const auto split = split_dataset(corpus, cfg.get_double("detector.split"), seed);
    detector = train_detector(parse_detector_spec(cfg.get("game.detector")), split.first, hp, seed);
  }
  GameConfig gc;
  gc.stages = cfg.get_size("game.stages");
  gc.reward_floor = cfg.get_double("game.reward_floor");
  gc.eval_samples = cfg.get_size("game.eval_samples");
  gc.detector_hp = hp;
  gc.pkdga = train_config(cfg);
  gc.query_budget = cfg.get_u64("env.budget");
  const auto g = game_loop(res, *detector, gc, seed, log);
  write_text(out_dir / "game.tsv", game_tsv(g));
  save_detector(out_dir / "detector.ckpt", g.detector);
  save_policy(out_dir / "policy.ckpt", g.generator);
}

void run_bench(Config cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  apply_threads(cfg);
  prepare_out(out_dir);
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;
  if (!cfg.get("bench.policy").empty()) {
    cfg.set("bench.policy", absolute_path(cfg.get("bench.policy")).string());
    inputs.emplace_back("policy", cfg.get("bench.policy"));
  }
  write_manifest(out_dir, {"bench", cfg, inputs});
  TokenDict dict;
  SeedSpace seeds(parse_date(cfg.get("seed.start")), parse_date(cfg.get("seed.end")), dict.size());
  const auto tc = train_config(cfg);
  const auto policy = cfg.get("bench.policy").empty()
                          ? init_params(tc.shape, dict, cfg.get_u64("run.seed"))
                          : load_policy(cfg.get("bench.policy"));
  std::vector<std::size_t> batches;
  for (const auto& b : cfg.get_list("bench.batches")) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(b.data(), b.data() + b.size(), v);
    require(ec == std::errc() && p == b.data() + b.size() && v > 0, ErrorCode::kUsage,
            "bench.batches: bad batch size '" + b + "'");
    batches.push_back(v);
  }
  const auto rows = bench_inference(policy, dict, seeds, batches, tc.length);
  write_text(out_dir / "bench.tsv", bench_tsv(rows));
  for (const auto& r : rows)
    say(log, "batch " + std::to_string(r.batch) + ": " + tsv_double(r.ms_per_domain) + " ms/domain");
}

}  // namespace pkdga
