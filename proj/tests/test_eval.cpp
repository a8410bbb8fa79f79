#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "auc_oracle.hpp"
#include "eval.hpp"
#include "test_util.hpp"

namespace pkdga {
namespace {

using namespace std::chrono_literals;

LabResources small_resources(std::size_t benign) {
  TokenDict dict;
  return LabResources{test::bundled_benign(benign), WordDict::load(test::data_dir() / "words.txt"), dict,
                      SeedSpace(Date{2020y / 1 / 1}, Date{2029y / 12 / 31}, dict.size())};
}

TEST(Eval, StratifiedEightTwoSplit) {
  LabeledCorpus c;
  for (int i = 0; i < 5; ++i) c.push_back({"b" + std::to_string(i) + ".com", Label::kBenign});
  for (int i = 0; i < 5; ++i) c.push_back({"a" + std::to_string(i) + ".com", Label::kAgd});
  const auto [train, test] = split_dataset(c, 0.8, 1);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
  std::set<std::string> tr;
  for (const auto& e : train) tr.insert(e.domain);
  for (const auto& e : test) EXPECT_FALSE(tr.contains(e.domain));
  EXPECT_EQ(std::count_if(test.begin(), test.end(), [](const auto& e) { return e.label == Label::kBenign; }), 1);
  const auto again = split_dataset(c, 0.8, 1);
  EXPECT_EQ(again.first, train);
  EXPECT_EQ(again.second, test);
}

TEST(Eval, SplitErrors) {
  LabeledCorpus c{{"a.com", Label::kBenign}, {"b.com", Label::kBenign}, {"c.com", Label::kAgd}};
  EXPECT_PKDGA_ERROR(split_dataset(c, 0.8, 1), ErrorCode::kData);
  EXPECT_PKDGA_ERROR(split_dataset(c, 1.0, 1), ErrorCode::kRange);
  EXPECT_PKDGA_ERROR(split_dataset(c, 0.0, 1), ErrorCode::kRange);
}

TEST(Eval, RocExtremes) {
  const std::vector<ScoredLabel> separated{{0.9, Label::kBenign}, {0.8, Label::kBenign}, {0.2, Label::kAgd}, {0.1, Label::kAgd}};
  const auto r = roc_auc(separated);
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.points.front(), std::make_pair(0.0, 0.0));
  EXPECT_EQ(r.points.back(), std::make_pair(1.0, 1.0));
  const std::vector<ScoredLabel> flat{{0.5, Label::kBenign}, {0.5, Label::kAgd}, {0.5, Label::kAgd}};
  EXPECT_EQ(roc_auc(flat).auc, 0.5);
  EXPECT_EQ(roc_auc(flat).points.size(), 2u);
  const std::vector<ScoredLabel> one{{0.5, Label::kBenign}, {0.7, Label::kBenign}};
  EXPECT_PKDGA_ERROR(roc_auc(one), ErrorCode::kData);
  const std::vector<ScoredLabel> nan{{std::nan(""), Label::kBenign}, {0.7, Label::kAgd}};
  EXPECT_PKDGA_ERROR(roc_auc(nan), ErrorCode::kNumeric);
}

TEST(Eval, AucMatchesPairwiseOracle) {
  Rng rng(20);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = oracle::random_scores(rng, trial < 100 ? 20 : 50, 7);
    EXPECT_NEAR(roc_auc(s).auc, oracle::pairwise_auc(s), 1e-12);
  }
}

TEST(Eval, AucInvariantUnderMonotoneTransforms) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = oracle::random_scores(rng, 40, 11);
    const double base = roc_auc(s).auc;
    for (auto& x : s) x.score = std::exp(3.0 * x.score) - 7.0;
    EXPECT_DOUBLE_EQ(roc_auc(s).auc, base);
  }
}

TEST(Eval, FlippingLabelsComplementsAuc) {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = oracle::random_scores(rng, 40, 1u << 30);
    std::set<double> distinct;
    for (const auto& x : s) distinct.insert(x.score);
    if (distinct.size() != s.size()) continue;
    const double base = roc_auc(s).auc;
    for (auto& x : s) x.label = x.label == Label::kBenign ? Label::kAgd : Label::kBenign;
    EXPECT_NEAR(roc_auc(s).auc, 1.0 - base, 1e-12);
  }
}

TEST(Eval, ConfusionUsesStandardTpr) {
  const std::vector<ScoredLabel> s{{0.9, Label::kBenign}, {0.4, Label::kBenign}, {0.6, Label::kAgd}, {0.1, Label::kAgd}};
  const auto c = confusion(s, 0.5);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_EQ(c.tpr(), 0.5);
  EXPECT_EQ(c.fpr(), 0.5);
}

TEST(Eval, AntiDetection) {
  EXPECT_EQ(anti_detection(1.0), 0.0);
  EXPECT_EQ(anti_detection(0.5), 0.5);
  EXPECT_NEAR(anti_detection(0.9174), 0.0826, 1e-12);
  EXPECT_PKDGA_ERROR(anti_detection(1.2), ErrorCode::kRange);
}

TEST(Eval, RocCsv) {
  const std::vector<ScoredLabel> s{{0.9, Label::kBenign}, {0.1, Label::kAgd}};
  const auto csv = roc_csv(roc_auc(s));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "fpr,tpr");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Eval, OneByOneMatrix) {
  const auto res = small_resources(400);
  MatrixConfig cfg;
  cfg.dgas = {DgaKind::kKraken};
  cfg.detectors = {parse_detector_spec("statistics")};
  cfg.samples = 100;
  cfg.detector_hp.reference_count = 32;
  const auto m = run_matrix(res, cfg, 3);
  ASSERT_EQ(m.cells.size(), 1u);
  ASSERT_NE(m.find(DgaKind::kKraken, DgaKind::kKraken, "statistics"), nullptr);
  ASSERT_TRUE(m.cells[0].auc.has_value());
  EXPECT_GT(*m.cells[0].auc, 0.5);
  const auto tsv = matrix_tsv(m);
  EXPECT_NE(tsv.find("kraken"), std::string::npos);
  const auto table = table_tsv(m);
  EXPECT_NE(table.find("statistics"), std::string::npos);
  EXPECT_EQ(matrix_tsv(run_matrix(res, cfg, 3)), tsv);
}

TEST(Eval, MatrixHasDiagonalForEveryDga) {
  const auto res = small_resources(400);
  MatrixConfig cfg;
  cfg.dgas = {DgaKind::kKraken, DgaKind::kSuppobox, DgaKind::kPkdga};
  cfg.detectors = {parse_detector_spec("fanci")};
  cfg.samples = 80;
  cfg.detector_hp.trees = 3;
  cfg.detector_hp.epochs = 1;
  cfg.detector_hp.dictionary = res.words.words();
  cfg.pkdga.shape = PolicyShape{1, 4, 4, 37};
  cfg.pkdga.epochs = 2;
  cfg.pkdga.batch = 2;
  cfg.pkdga.mc = 1;
  const auto m = run_matrix(res, cfg, 4);
  EXPECT_EQ(m.cells.size(), 9u);
  for (DgaKind d : cfg.dgas) {
    const auto* cell = m.find(d, d, "fanci");
    ASSERT_NE(cell, nullptr);
    EXPECT_TRUE(cell->auc.has_value()) << cell->error;
  }
  ASSERT_EQ(m.table_zero.size(), 3u);
  EXPECT_TRUE(m.table_partial[0].has_value());
}

TEST(Eval, MatrixRecordsFailedCells) {
  const auto res = small_resources(400);
  MatrixConfig cfg;
  cfg.dgas = {DgaKind::kKraken, DgaKind::kPkdga};
  cfg.detectors = {parse_detector_spec("lstm")};
  cfg.samples = 40;
  cfg.detector_hp.epochs = 1;
  cfg.pkdga.shape = PolicyShape{1, 4, 4, 37};
  cfg.pkdga.epochs = 2;
  cfg.pkdga.batch = 4;
  cfg.pkdga.mc = 2;
  cfg.query_budget = 5;  // far too small: every PKDGA training run fails
  const auto m = run_matrix(res, cfg, 5);
  ASSERT_EQ(m.cells.size(), 4u);
  EXPECT_TRUE(m.find(DgaKind::kKraken, DgaKind::kKraken, "lstm")->auc.has_value());
  for (const auto& c : m.cells) {
    if (c.train_dga == DgaKind::kPkdga || c.test_dga == DgaKind::kPkdga) {
      EXPECT_FALSE(c.auc.has_value());
      EXPECT_FALSE(c.error.empty());
    }
  }
  EXPECT_TRUE(m.table_zero[0][0].has_value());
  EXPECT_FALSE(m.table_zero[1][0].has_value());
  EXPECT_FALSE(m.table_partial[0].has_value());
}

TEST(Eval, GameLoopZeroStages) {
  const auto res = small_resources(600);
  DetectorHyper hp;
  hp.epochs = 1;
  const auto det = train_detector(parse_detector_spec("lstm"),
                                  make_corpus(std::vector<std::string>(res.benign.begin(), res.benign.begin() + 100),
                                              baseline_domains(DgaKind::kKraken, res.words, 1, 100)),
                                  hp, 1);
  GameConfig cfg;
  cfg.stages = 0;
  cfg.eval_samples = 100;
  const auto g = game_loop(res, det, cfg, 1);
  EXPECT_TRUE(g.stages.empty());
  EXPECT_GE(g.baseline_auc, 0.0);
  EXPECT_EQ(game_tsv(g).substr(0, 6), "stage\t");
}

TEST(Eval, GameLoopOneStageLearnsItsAgds) {
  const auto res = small_resources(800);
  DetectorHyper hp;
  hp.epochs = 2;
  hp.embed_dim = 8;
  hp.hidden_dim = 16;
  const auto det = train_detector(parse_detector_spec("bilstm"),
                                  make_corpus(std::vector<std::string>(res.benign.begin(), res.benign.begin() + 200),
                                              baseline_domains(DgaKind::kKraken, res.words, 1, 200)),
                                  hp, 1);
  GameConfig cfg;
  cfg.stages = 1;
  cfg.eval_samples = 150;
  cfg.detector_hp = hp;
  cfg.pkdga.shape = PolicyShape{1, 8, 8, 37};
  cfg.pkdga.epochs = 3;
  cfg.pkdga.batch = 4;
  cfg.pkdga.mc = 2;
  const auto g = game_loop(res, det, cfg, 2);
  ASSERT_EQ(g.stages.size(), 1u);
  EXPECT_GE(g.stages[0].auc_after, g.stages[0].auc_before);
}

TEST(Eval, GameLoopNeedsIncrementalDetector) {
  const auto res = small_resources(400);
  DetectorHyper hp;
  hp.reference_count = 16;
  const auto det = train_detector(parse_detector_spec("statistics"),
                                  make_corpus(std::vector<std::string>(res.benign.begin(), res.benign.begin() + 50),
                                              baseline_domains(DgaKind::kKraken, res.words, 1, 50)),
                                  hp, 1);
  EXPECT_PKDGA_ERROR(game_loop(res, det, GameConfig{}, 1), ErrorCode::kUnsupported);
}

TEST(Eval, BenchReportsPerDomainTime) {
  TokenDict dict;
  SeedSpace space(Date{2020y / 1 / 1}, Date{2020y / 12 / 31}, dict.size());
  const auto p = init_params(PolicyShape{1, 8, 16, 37}, dict, 1);
  const std::vector<std::size_t> batches{1, 8};
  const auto rows = bench_inference(p, dict, space, batches, 12);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].batch, 1u);
  EXPECT_DOUBLE_EQ(rows[0].total_ms, rows[0].ms_per_domain);
  EXPECT_GT(rows[1].total_ms, 0.0);
  EXPECT_DOUBLE_EQ(rows[1].ms_per_domain, rows[1].total_ms / 8.0);
  const auto tsv = bench_tsv(rows);
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 3);
}

TEST(Eval, DgaNames) {
  for (const char* n : {"kraken", "gozi", "suppobox", "pkdga"}) EXPECT_EQ(dga_name(parse_dga(n)), n);
  EXPECT_PKDGA_ERROR(parse_dga("conficker"), ErrorCode::kUsage);
}

}  // namespace
}  // namespace pkdga
