#pragma once

// Evaluation: stratified splits, ROC/AUC, the anti-detection matrices, the
// game-based defense loop and the inference benchmark.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "baselines.hpp"
#include "detectors.hpp"
#include "trainer.hpp"

namespace pkdga {

// ------------------------------------------------------------ metrics

// Positive class is benign: scores are P(benign).
struct ScoredLabel {
  double score = 0.0;
  Label label = Label::kBenign;
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  double tpr() const;  // TP / (TP + FN)
  double fpr() const;  // FP / (FP + TN)
};

// Predicts benign when score >= threshold.
ConfusionCounts confusion(std::span<const ScoredLabel> scored, double threshold);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (FPR, TPR) from (0,0) to (1,1)
  double auc = 0.0;
};

// One threshold per distinct score, trapezoidal area. Throws kData when a
// class is missing.
RocCurve roc_auc(std::span<const ScoredLabel> scored);

std::string roc_csv(const RocCurve& roc);

// 1 - auc. Throws kRange outside [0, 1].
double anti_detection(double auc);

// Stratified by label: each class contributes round(count * ratio) items to
// train, keeping at least one on each side. Throws kData when a class has
// fewer than two items.
std::pair<LabeledCorpus, LabeledCorpus> split_dataset(const LabeledCorpus& corpus, double ratio,
                                                      std::uint64_t seed);

// AUC of a detector separating benign from AGD names.
double detector_auc(const DetectorModel& model, std::span<const std::string> benign,
                    std::span<const std::string> agd);

// ------------------------------------------------------------ experiments

enum class DgaKind { kKraken, kGozi, kSuppobox, kPkdga };
DgaKind parse_dga(std::string_view name);
std::string dga_name(DgaKind kind);

struct LabResources {
  std::vector<std::string> benign;  // popular domains, also the registry seed
  WordDict words;
  TokenDict dict;
  SeedSpace seeds;
};

// Names from a zero-knowledge generator, assembled with the default TLD.
std::vector<std::string> baseline_domains(DgaKind kind, const WordDict& words, std::uint64_t seed,
                                          std::size_t count);

struct MatrixConfig {
  std::vector<DgaKind> dgas = {DgaKind::kKraken, DgaKind::kGozi, DgaKind::kSuppobox,
                               DgaKind::kPkdga};
  std::vector<DetectorSpec> detectors;
  std::size_t samples = 5000;  // per class
  double split_ratio = 0.8;
  DetectorHyper detector_hp;
  TrainConfig pkdga;
  std::uint64_t query_budget = kDefaultQueryBudget;
};

struct MatrixCell {
  DgaKind train_dga;
  DgaKind test_dga;
  std::string detector;
  std::optional<double> auc;  // empty when the cell failed
  std::string error;
};

struct ExperimentMatrix {
  std::vector<DgaKind> dgas;
  std::vector<std::string> detectors;
  std::vector<MatrixCell> cells;  // train-major, then detector, then test

  // Zero-knowledge rows: PKDGA trained against the reference neural
  // detector. Partial-knowledge row: PKDGA trained against each column's
  // own detector. Both on the unified training set.
  std::vector<std::vector<std::optional<double>>> table_zero;     // dga x detector, AUC
  std::vector<std::optional<double>> table_partial;               // per detector, AUC

  const MatrixCell* find(DgaKind train, DgaKind test, std::string_view detector) const;
};

// Trains a detector per (training DGA, detector kind), scores each testing
// DGA's fresh names against the held-out benign split and records the AUC.
// PKDGA testing names come from a generator trained against that cell's
// detector through registration feedback only. Failed cells are recorded
// and the matrix completes.
ExperimentMatrix run_matrix(const LabResources& res, const MatrixConfig& cfg, std::uint64_t seed,
                            const std::function<void(const std::string&)>& log = {});

// Transfer-matrix layout, one block per detector: rows training DGA, columns testing
// DGA, values 1 - AUC.
std::string matrix_tsv(const ExperimentMatrix& m);
// Summary-table layout: rows DGA, columns detector, values 1 - AUC.
std::string table_tsv(const ExperimentMatrix& m);

struct GameConfig {
  std::size_t stages = 3;
  double reward_floor = 0.0;  // stop once the generator's best reward drops below
  std::size_t eval_samples = 1000;
  DetectorHyper detector_hp;  // incremental update settings
  TrainConfig pkdga;
  std::uint64_t query_budget = kDefaultQueryBudget;
};

struct GameStage {
  std::size_t stage = 0;
  double pkdga_reward = 0.0;  // best epoch reward against the stage's detector
  double auc_before = 0.0;    // detector before the update, on this stage's AGDs
  double auc_after = 0.0;     // updated detector, same AGDs
  double auc_fresh = 0.0;     // updated detector, fresh names from this stage's generator
};

struct GameResult {
  double baseline_auc = 0.0;  // initial detector on fresh names of an untrained generator
  std::vector<GameStage> stages;
  DetectorModel detector;
  PolicyParams generator;
};

// Alternates feedback training of the generator against the current
// detector and incremental training of the detector on the generator's
// names. Throws kUnsupported for detectors without incremental updates.
GameResult game_loop(const LabResources& res, const DetectorModel& detector, const GameConfig& cfg,
                     std::uint64_t seed, const std::function<void(const std::string&)>& log = {});

std::string game_tsv(const GameResult& g);

struct BenchRow {
  std::size_t batch = 0;
  double total_ms = 0.0;
  double ms_per_domain = 0.0;
};

// Median of five timed runs per batch size after one untimed warm-up.
std::vector<BenchRow> bench_inference(const PolicyParams& p, const TokenDict& dict,
                                      const SeedSpace& space, std::span<const std::size_t> batches,
                                      std::size_t length);

std::string bench_tsv(std::span<const BenchRow> rows);

}  // namespace pkdga
