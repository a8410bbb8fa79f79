#include "eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"

namespace pkdga {

namespace {

constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
constexpr std::uint64_t kBenignStream = 0x62656e69676eULL;
constexpr std::uint64_t kDgaStream = 0x646761ULL;
constexpr std::uint64_t kDetectorStream = 0x646574ULL;
constexpr std::uint64_t kPkdgaStream = 0x706b646761ULL;
constexpr std::uint64_t kGameStream = 0x67616d65ULL;

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

// Disjoint benign samples drawn from one shuffled copy of the corpus.
std::vector<std::vector<std::string>> benign_pools(std::span<const std::string> benign,
                                                   std::span<const std::size_t> sizes,
                                                   std::uint64_t seed) {
  std::vector<std::string> all(benign.begin(), benign.end());
  Rng rng(derive_stream(seed, {kBenignStream}));
  shuffle(all, rng);
  const std::size_t need = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  require(need <= all.size(), ErrorCode::kData,
          "benign corpus has " + std::to_string(all.size()) + " names, " + std::to_string(need) +
              " needed");
  std::vector<std::vector<std::string>> out;
  std::size_t at = 0;
  for (std::size_t s : sizes) {
    out.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(at),
                     all.begin() + static_cast<std::ptrdiff_t>(at + s));
    at += s;
  }
  return out;
}

TrainResult train_against(const LabResources& res, const DetectorModel& detector,
                          const TrainConfig& cfg, std::uint64_t budget, std::uint64_t seed,
                          const std::optional<PolicyParams>& initial = std::nullopt) {
  DnsEnvConfig env_cfg;
  env_cfg.query_budget = budget;
  DnsEnv env(std::make_shared<DetectorModel>(detector), res.benign, env_cfg);
  TrainOptions opts;
  opts.initial = initial;
  return train(env, cfg, res.dict, res.seeds, seed, opts);
}

}  // namespace

// ------------------------------------------------------------ metrics

double ConfusionCounts::tpr() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ConfusionCounts::fpr() const {
  return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
}

ConfusionCounts confusion(std::span<const ScoredLabel> scored, double threshold) {
  ConfusionCounts c;
  for (const auto& s : scored) {
    const bool predicted_benign = s.score >= threshold;
    if (s.label == Label::kBenign) (predicted_benign ? c.tp : c.fn) += 1;
    else (predicted_benign ? c.fp : c.tn) += 1;
  }
  return c;
}

RocCurve roc_auc(std::span<const ScoredLabel> scored) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : scored) {
    require(std::isfinite(s.score), ErrorCode::kNumeric, "non-finite score");
    (s.label == Label::kBenign ? pos : neg) += 1;
  }
  require(pos > 0 && neg > 0, ErrorCode::kData, "ROC needs both benign and AGD samples");
  std::vector<ScoredLabel> sorted(scored.begin(), scored.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t dtp = 0, dfp = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label == Label::kBenign ? dtp : dfp) += 1;
      ++j;
    }
    // Trapezoid in count units keeps the sum exact until the final division.
    area += static_cast<double>(dfp) * (2.0 * static_cast<double>(tp) + static_cast<double>(dtp));
    tp += dtp;
    fp += dfp;
    roc.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos));
    i = j;
  }
  roc.auc = area / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

std::string roc_csv(const RocCurve& roc) {
  std::ostringstream os;
  os << "fpr,tpr\n" << std::setprecision(17);
  for (const auto& [f, t] : roc.points) os << f << ',' << t << '\n';
  return os.str();
}

double anti_detection(double auc) {
  require(auc >= 0.0 && auc <= 1.0, ErrorCode::kRange, "AUC outside [0, 1]");
  return 1.0 - auc;
}

std::pair<LabeledCorpus, LabeledCorpus> split_dataset(const LabeledCorpus& corpus, double ratio,
                                                      std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::kRange, "split ratio must be in (0, 1)");
  LabeledCorpus train, test;
  for (Label label : {Label::kBenign, Label::kAgd}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus[i].label == label) idx.push_back(i);
    if (idx.empty()) continue;
    require(idx.size() >= 2, ErrorCode::kData, "a class needs at least two samples to stratify");
    Rng rng(derive_stream(seed, {kSplitStream, static_cast<std::uint64_t>(label)}));
    shuffle(idx, rng);
    auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * ratio));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    for (std::size_t k = 0; k < idx.size(); ++k) (k < n_train ? train : test).push_back(corpus[idx[k]]);
  }
  return {std::move(train), std::move(test)};
}

double detector_auc(const DetectorModel& model, std::span<const std::string> benign,
                    std::span<const std::string> agd) {
  std::vector<ScoredLabel> scored(benign.size() + agd.size());
  parallel_for(scored.size(), [&](std::size_t i) {
    const bool is_benign = i < benign.size();
    const auto& name = is_benign ? benign[i] : agd[i - benign.size()];
    scored[i] = {model.score(name), is_benign ? Label::kBenign : Label::kAgd};
  });
  return roc_auc(scored).auc;
}

// ------------------------------------------------------------ experiments

DgaKind parse_dga(std::string_view name) {
  if (name == "kraken") return DgaKind::kKraken;
  if (name == "gozi") return DgaKind::kGozi;
  if (name == "suppobox") return DgaKind::kSuppobox;
  if (name == "pkdga") return DgaKind::kPkdga;
  fail(ErrorCode::kUsage, "unknown DGA '" + std::string(name) + "'");
}

std::string dga_name(DgaKind kind) {
  switch (kind) {
    case DgaKind::kKraken: return "kraken";
    case DgaKind::kGozi: return "gozi";
    case DgaKind::kSuppobox: return "suppobox";
    case DgaKind::kPkdga: return "pkdga";
  }
  return "unknown";
}

std::vector<std::string> baseline_domains(DgaKind kind, const WordDict& words, std::uint64_t seed,
                                          std::size_t count) {
  std::vector<DomainSequence> seqs;
  switch (kind) {
    case DgaKind::kKraken: seqs = kraken_generate(seed, count); break;
    case DgaKind::kGozi: seqs = gozi_generate(words, seed, count); break;
    case DgaKind::kSuppobox: {
      const auto [a, b] = words.split();
      seqs = suppobox_generate(a, b, seed, count);
      break;
    }
    case DgaKind::kPkdga: fail(ErrorCode::kUsage, "pkdga is not a zero-knowledge generator");
  }
  std::vector<std::string> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(assemble_fqdn(s));
  return out;
}

const MatrixCell* ExperimentMatrix::find(DgaKind train, DgaKind test,
                                         std::string_view detector) const {
  for (const auto& c : cells)
    if (c.train_dga == train && c.test_dga == test && c.detector == detector) return &c;
  return nullptr;
}

ExperimentMatrix run_matrix(const LabResources& res, const MatrixConfig& cfg, std::uint64_t seed,
                            const std::function<void(const std::string&)>& log) {
  require(!cfg.dgas.empty() && !cfg.detectors.empty(), ErrorCode::kUsage,
          "matrix needs at least one DGA and one detector");
  const auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  const std::size_t n_train = static_cast<std::size_t>(std::llround(cfg.samples * cfg.split_ratio));
  const std::size_t n_test = cfg.samples - n_train;
  require(n_train > 0 && n_test > 0, ErrorCode::kUsage, "split leaves an empty side");
  const std::array<std::size_t, 2> sizes{n_train, n_test};
  const auto pools = benign_pools(res.benign, sizes, seed);
  const auto& benign_train = pools[0];
  const auto& benign_test = pools[1];

  ExperimentMatrix m;
  m.dgas = cfg.dgas;
  for (const auto& d : cfg.detectors) m.detectors.push_back(detector_name(d));

  const auto detector_seed = [&](std::uint64_t row, std::size_t k) {
    return derive_stream(seed, {kDetectorStream, row, k});
  };
  const auto fresh_pkdga = [&](const PolicyParams& p, std::uint64_t tag) {
    return pkdga_generate(p, res.dict, res.seeds, n_test, cfg.pkdga.length,
                          derive_stream(seed, {kPkdgaStream, tag}));
  };

  // Zero-knowledge names, disjoint seeds for training and testing.
  std::map<DgaKind, std::vector<std::string>> train_names, test_names;
  for (DgaKind d : {DgaKind::kKraken, DgaKind::kGozi, DgaKind::kSuppobox}) {
    const auto k = static_cast<std::uint64_t>(d);
    train_names[d] = baseline_domains(d, res.words, derive_stream(seed, {kDgaStream, k, 0}) % Lcg::kModulus, n_train);
    test_names[d] = baseline_domains(d, res.words, derive_stream(seed, {kDgaStream, k, 1}) % Lcg::kModulus, n_test);
  }

  // Reference generator: trained by feedback against a neural detector that
  // knows only Kraken. Supplies PKDGA training names and the zero-knowledge
  // PKDGA row.
  const bool need_reference =
      std::find(cfg.dgas.begin(), cfg.dgas.end(), DgaKind::kPkdga) != cfg.dgas.end();
  std::optional<PolicyParams> reference;
  std::string reference_error;
  if (need_reference) {
    say("training reference generator");
    try {
      const auto ref_det = train_detector(parse_detector_spec("lstm"),
                                          make_corpus(benign_train, train_names[DgaKind::kKraken]),
                                          cfg.detector_hp, detector_seed(100, 0));
      reference = train_against(res, ref_det, cfg.pkdga, cfg.query_budget,
                                derive_stream(seed, {kPkdgaStream, 0})).best;
      train_names[DgaKind::kPkdga] =
          pkdga_generate(*reference, res.dict, res.seeds, n_train, cfg.pkdga.length,
                         derive_stream(seed, {kPkdgaStream, 1}));
    } catch (const Error& e) {
      reference_error = std::string("reference generator failed: ") + e.what();
      say(reference_error);
    }
  }

  // Transfer matrix: one detector per (training DGA, kind).
  for (DgaKind train_dga : cfg.dgas) {
    for (std::size_t k = 0; k < cfg.detectors.size(); ++k) {
      const auto& spec = cfg.detectors[k];
      const std::string det_name = detector_name(spec);
      std::optional<DetectorModel> det;
      std::string det_error;
      if (train_dga == DgaKind::kPkdga && !reference) {
        det_error = reference_error;
      } else {
        try {
          det = train_detector(spec, make_corpus(benign_train, train_names.at(train_dga)),
                               cfg.detector_hp, detector_seed(static_cast<std::uint64_t>(train_dga), k));
        } catch (const Error& e) {
          det_error = e.what();
        }
      }
      for (DgaKind test_dga : cfg.dgas) {
        MatrixCell cell{train_dga, test_dga, det_name, std::nullopt, det_error};
        if (det) {
          try {
            if (test_dga == DgaKind::kPkdga) {
              const auto tag = 1000 + static_cast<std::uint64_t>(train_dga) * 64 + k;
              const auto gen = train_against(res, *det, cfg.pkdga, cfg.query_budget,
                                             derive_stream(seed, {kPkdgaStream, tag}));
              cell.auc = detector_auc(*det, benign_test, fresh_pkdga(gen.best, tag));
            } else {
              cell.auc = detector_auc(*det, benign_test, test_names.at(test_dga));
            }
          } catch (const Error& e) {
            cell.error = e.what();
          }
        }
        say("cell " + dga_name(train_dga) + " -> " + dga_name(test_dga) + " / " + det_name + ": " +
            (cell.auc ? fmt(*cell.auc) : "failed " + cell.error));
        m.cells.push_back(std::move(cell));
      }
    }
  }

  // Summary table: detectors on a unified training set mixing every
  // zero-knowledge generator.
  std::vector<std::string> unified;
  {
    std::vector<DgaKind> zk;
    for (DgaKind d : cfg.dgas)
      if (d != DgaKind::kPkdga) zk.push_back(d);
    if (zk.empty()) zk.push_back(DgaKind::kKraken);
    for (std::size_t i = 0; i < n_train; ++i) {
      const auto& src = train_names.at(zk[i % zk.size()]);
      unified.push_back(src[i / zk.size()]);
    }
  }
  m.table_zero.assign(cfg.dgas.size(), std::vector<std::optional<double>>(cfg.detectors.size()));
  m.table_partial.assign(cfg.detectors.size(), std::nullopt);
  for (std::size_t k = 0; k < cfg.detectors.size(); ++k) {
    try {
      const auto det = train_detector(cfg.detectors[k], make_corpus(benign_train, unified),
                                      cfg.detector_hp, detector_seed(200, k));
      for (std::size_t r = 0; r < cfg.dgas.size(); ++r) {
        try {
          require(cfg.dgas[r] != DgaKind::kPkdga || reference.has_value(), ErrorCode::kTraining,
                  reference_error);
          const auto& names = cfg.dgas[r] == DgaKind::kPkdga
                                  ? fresh_pkdga(*reference, 2)
                                  : test_names.at(cfg.dgas[r]);
          m.table_zero[r][k] = detector_auc(det, benign_test, names);
        } catch (const Error& e) {
          say(std::string("table cell failed: ") + e.what());
        }
      }
      if (need_reference) {
        // Independent of the reference generator: trained against this column's detector.
        const auto tag = 5000 + k;
        const auto gen = train_against(res, det, cfg.pkdga, cfg.query_budget,
                                       derive_stream(seed, {kPkdgaStream, tag}));
        m.table_partial[k] = detector_auc(det, benign_test, fresh_pkdga(gen.best, tag));
      }
    } catch (const Error& e) {
      say(std::string("table column failed: ") + e.what());
    }
  }
  return m;
}

std::string matrix_tsv(const ExperimentMatrix& m) {
  std::ostringstream os;
  for (const auto& det : m.detectors) {
    os << det;
    for (DgaKind test : m.dgas) os << '\t' << dga_name(test);
    os << '\n';
    for (DgaKind train : m.dgas) {
      os << dga_name(train);
      for (DgaKind test : m.dgas) {
        const auto* c = m.find(train, test, det);
        os << '\t' << (c && c->auc ? fmt(anti_detection(*c->auc)) : "NA");
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

std::string table_tsv(const ExperimentMatrix& m) {
  std::ostringstream os;
  os << "knowledge\tdga";
  for (const auto& det : m.detectors) os << '\t' << det;
  os << '\n';
  for (const char* block : {"zero", "partial"}) {
    for (std::size_t r = 0; r < m.dgas.size(); ++r) {
      os << block << '\t' << dga_name(m.dgas[r]);
      for (std::size_t k = 0; k < m.detectors.size(); ++k) {
        std::optional<double> auc = m.table_zero[r][k];
        if (std::string_view(block) == "partial" && m.dgas[r] == DgaKind::kPkdga)
          auc = m.table_partial[k];
        os << '\t' << (auc ? fmt(anti_detection(*auc)) : "NA");
      }
      os << '\n';
    }
  }
  return os.str();
}

GameResult game_loop(const LabResources& res, const DetectorModel& detector, const GameConfig& cfg,
                     std::uint64_t seed, const std::function<void(const std::string&)>& log) {
  require(supports_incremental(detector), ErrorCode::kUnsupported,
          detector_name(detector.spec()) + " detector cannot be updated incrementally");
  const auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  const std::size_t n = cfg.eval_samples;
  // Held-out benign names for evaluation, and one fresh benign pool per
  // stage for the incremental updates.
  std::vector<std::size_t> sizes(cfg.stages + 1, n);
  const auto pools = benign_pools(res.benign, sizes, derive_stream(seed, {kGameStream}));
  const auto& benign_eval = pools[0];

  PolicyParams gen = init_params(cfg.pkdga.shape, res.dict, derive_stream(seed, {kGameStream, 1}));
  GameResult out{0.0, {}, detector, gen};
  out.baseline_auc = detector_auc(
      out.detector, benign_eval,
      pkdga_generate(gen, res.dict, res.seeds, n, cfg.pkdga.length, derive_stream(seed, {kGameStream, 2})));
  say("baseline AUC " + fmt(out.baseline_auc));

  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    GameStage st;
    st.stage = s;
    const auto trained = train_against(res, out.detector, cfg.pkdga, cfg.query_budget,
                                       derive_stream(seed, {kGameStream, 10, s}), gen);
    gen = trained.best;
    st.pkdga_reward = *std::max_element(trained.curve.mean_reward.begin(),
                                        trained.curve.mean_reward.end());
    // The stage's AGDs: what got through during training, topped up with
    // samples from the stage's generator.
    std::vector<std::string> agds(trained.registered.begin(),
                                  trained.registered.begin() +
                                      static_cast<std::ptrdiff_t>(std::min(n, trained.registered.size())));
    if (agds.size() < n) {
      const auto extra = pkdga_generate(gen, res.dict, res.seeds, n - agds.size(), cfg.pkdga.length,
                                        derive_stream(seed, {kGameStream, 20, s}));
      agds.insert(agds.end(), extra.begin(), extra.end());
    }
    st.auc_before = detector_auc(out.detector, benign_eval, agds);
    out.detector = incremental_update(out.detector, make_corpus(pools[s], agds), cfg.detector_hp,
                                      derive_stream(seed, {kGameStream, 30, s}));
    st.auc_after = detector_auc(out.detector, benign_eval, agds);
    st.auc_fresh = detector_auc(
        out.detector, benign_eval,
        pkdga_generate(gen, res.dict, res.seeds, n, cfg.pkdga.length, derive_stream(seed, {kGameStream, 40, s})));
    say("stage " + std::to_string(s) + ": reward " + fmt(st.pkdga_reward) + ", AUC " +
        fmt(st.auc_before) + " -> " + fmt(st.auc_after) + ", fresh " + fmt(st.auc_fresh));
    out.stages.push_back(st);
    if (st.pkdga_reward < cfg.reward_floor) break;
  }
  out.generator = gen;
  return out;
}

std::string game_tsv(const GameResult& g) {
  std::ostringstream os;
  os << "stage\tpkdga_reward\tauc_before\tauc_after\tauc_fresh\n";
  os << "0\tNA\tNA\tNA\t" << fmt(g.baseline_auc) << '\n';
  for (const auto& s : g.stages)
    os << s.stage << '\t' << fmt(s.pkdga_reward) << '\t' << fmt(s.auc_before) << '\t'
       << fmt(s.auc_after) << '\t' << fmt(s.auc_fresh) << '\n';
  return os.str();
}

std::vector<BenchRow> bench_inference(const PolicyParams& p, const TokenDict& dict,
                                      const SeedSpace& space, std::span<const std::size_t> batches,
                                      std::size_t length) {
  std::vector<BenchRow> rows;
  for (std::size_t b : batches) {
    require(b >= 1, ErrorCode::kUsage, "batch size must be positive");
    const Date date = space.start();
    const auto enc = encode_seed(date, dict, space);
    std::vector<std::vector<double>> seeds(b, enc.vec);
    const auto run_once = [&](std::uint64_t rep) {
      std::vector<Rng> rngs;
      for (std::size_t j = 0; j < b; ++j) rngs.emplace_back(derive_stream(enc.rng_seed, {rep, j}));
      const auto t0 = std::chrono::steady_clock::now();
      const auto seqs = generate_batch<float>(p, seeds, length, SelectMode::kSample, rngs, dict);
      std::size_t chars = 0;
      for (const auto& s : seqs) chars += sequence_fqdn(s, dict, kDefaultTld).size();
      const auto t1 = std::chrono::steady_clock::now();
      require(chars > 0, ErrorCode::kContract, "empty generation");
      return std::chrono::duration<double, std::milli>(t1 - t0).count();
    };
    run_once(0);  // warm-up
    std::vector<double> times;
    for (std::uint64_t rep = 1; rep <= 5; ++rep) times.push_back(run_once(rep));
    std::sort(times.begin(), times.end());
    rows.push_back({b, times[2], times[2] / static_cast<double>(b)});
  }
  return rows;
}

std::string bench_tsv(std::span<const BenchRow> rows) {
  std::ostringstream os;
  os << "batch\ttotal_ms\tms_per_domain\n" << std::setprecision(6);
  for (const auto& r : rows) os << r.batch << '\t' << r.total_ms << '\t' << r.ms_per_domain << '\n';
  return os.str();
}

}  // namespace pkdga
