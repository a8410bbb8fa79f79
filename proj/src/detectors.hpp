#pragma once

// The AGD detector zoo. Every detector maps a domain name to a score in
// [0, 1] read as P(benign); a name is legitimate when score >= threshold.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "charnet.hpp"
#include "checkpoint.hpp"
#include "domain.hpp"

namespace pkdga {

enum class Label : std::uint8_t { kBenign = 0, kAgd = 1 };

struct LabeledDomain {
  std::string domain;
  Label label = Label::kBenign;
  friend bool operator==(const LabeledDomain&, const LabeledDomain&) = default;
};

using LabeledCorpus = std::vector<LabeledDomain>;

LabeledCorpus make_corpus(std::span<const std::string> benign, std::span<const std::string> agd);

enum class DetectorKind { kStatistics, kFanci, kWordGraph, kNeural };

// "statistics", "fanci", "wordgraph", "lstm"/"neural", "bilstm".
struct DetectorSpec {
  DetectorKind kind = DetectorKind::kNeural;
  bool bidirectional = false;
};
DetectorSpec parse_detector_spec(std::string_view name);
std::string detector_name(const DetectorSpec& spec);

struct DetectorHyper {
  // statistics
  std::size_t reference_count = 256;
  std::size_t logistic_iterations = 500;
  double logistic_lr = 0.5;
  // fanci
  std::size_t trees = 25;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
  bool bootstrap = true;
  std::vector<std::string> dictionary;  // word list for linguistic features
  // wordgraph
  std::size_t min_repeats = 4;  // strictly more than three occurrences
  std::size_t min_substring = 3;
  std::size_t max_substring = 12;
  // neural
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t layers = 1;
  std::size_t epochs = 5;
  std::size_t batch = 32;
  double lr = 0.01;
};

// ---------------------------------------------------------------- distances

// sum_i p_i ln(p_i / q_i). Both arguments are distributions over the same
// support; q must be positive wherever p is (smooth it first).
double kl_divergence(std::span<const double> p, std::span<const double> q);

// |B(a) n B(b)| / |B(a) u B(b)| over character-bigram sets. Throws kData when
// either input is shorter than 2.
double jaccard_bigrams(std::string_view a, std::string_view b);

// Levenshtein distance with unit costs.
std::size_t edit_distance(std::string_view a, std::string_view b);

// ---------------------------------------------------------------- features

inline constexpr std::size_t kFeatureCount = 21;
using FeatureVector = std::array<double, kFeatureCount>;
const std::array<std::string_view, kFeatureCount>& feature_names();

// Reference statistics for the linguistic features: benign n-gram relative
// frequencies and a word dictionary.
struct FeatureContext {
  std::unordered_map<std::string, double> bigram_freq;
  std::unordered_map<std::string, double> trigram_freq;
  std::unordered_set<std::string> words;
  std::size_t max_word_length = 0;

  static FeatureContext build(std::span<const std::string> benign_cores,
                              std::span<const std::string> words);
};

// Throws kData on an invalid domain. The context-free overload leaves the
// n-gram and dictionary features at zero.
FeatureVector extract_features(std::string_view domain, const FeatureContext& ctx);
FeatureVector extract_features(std::string_view domain);

std::string features_csv(std::span<const std::string> domains, const FeatureContext& ctx);

// ---------------------------------------------------------------- forest

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  float threshold = 0.0f;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  float value = 0.0f;         // fraction of benign samples at the node
};

struct ForestConfig {
  std::size_t trees = 25;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 0;  // 0 means floor(sqrt(F))
  bool bootstrap = true;
};

struct RandomForest {
  std::size_t feature_count = 0;
  std::vector<std::vector<TreeNode>> trees;

  // rows: N x F row-major; labels: 1 = benign.
  static RandomForest train(std::span<const double> rows, std::size_t feature_count,
                            std::span<const std::uint8_t> labels, const ForestConfig& cfg,
                            std::uint64_t seed);
  double predict(std::span<const double> x) const;
};

// ---------------------------------------------------------------- models

struct StatisticsModel {
  std::vector<float> unigram;          // smoothed benign character distribution
  std::vector<std::string> references; // benign profile strings
  std::array<float, 3> mean{}, stddev{};
  std::array<float, 4> weights{};      // 3 coefficients + intercept

  std::array<double, 3> distances(std::string_view core) const;
};

struct FanciModel {
  FeatureContext context;
  RandomForest forest;
};

struct WordGraphModel {
  std::unordered_map<std::string, std::size_t> degree;  // node -> neighbour count
  std::size_t max_degree = 0;
  std::size_t longest_node = 0;

  // Common-substring nodes found in a label, longest match first.
  std::vector<std::string> segment(std::string_view core) const;
};

struct NeuralModel {
  CharNet<float> net;
};

class DetectorModel {
 public:
  using Impl = std::variant<StatisticsModel, FanciModel, WordGraphModel, NeuralModel>;

  DetectorModel(DetectorSpec spec, Impl impl, double threshold)
      : spec_(spec), impl_(std::move(impl)), threshold_(threshold) {}

  const DetectorSpec& spec() const { return spec_; }
  DetectorKind kind() const { return spec_.kind; }
  double threshold() const { return threshold_; }
  void set_threshold(double t) { threshold_ = t; }
  const Impl& impl() const { return impl_; }
  Impl& impl() { return impl_; }

  // P(benign) in [0, 1]. Throws kData for an invalid domain string.
  double score(std::string_view domain) const;
  bool legitimate(std::string_view domain) const { return score(domain) >= threshold_; }

 private:
  DetectorSpec spec_;
  Impl impl_;
  double threshold_;
};

// Deterministic per seed. Throws kTraining on a single-class corpus.
DetectorModel train_detector(const DetectorSpec& spec, const LabeledCorpus& corpus,
                             const DetectorHyper& hp, std::uint64_t seed);

double score(const DetectorModel& model, std::string_view domain);

// Normalized mean degree of the label's common-substring nodes, 0 when no
// node matches. Higher means more dictionary-DGA-like.
double wordgraph_score(const DetectorModel& model, std::string_view domain);
double wordgraph_score(const WordGraphModel& graph, std::string_view domain);

WordGraphModel build_word_graph(std::span<const std::string> cores, const DetectorHyper& hp);

// Continues training a neural detector on additional samples.
// Throws kUnsupported for other kinds.
DetectorModel incremental_update(const DetectorModel& model, const LabeledCorpus& extra,
                                 const DetectorHyper& hp, std::uint64_t seed);

bool supports_incremental(const DetectorModel& model);

Container detector_to_container(const DetectorModel& model);
DetectorModel detector_from_container(const Container& c);
void save_detector(const std::filesystem::path& path, const DetectorModel& model);
DetectorModel load_detector(const std::filesystem::path& path);

}  // namespace pkdga
