#include <algorithm>
#include <cmath>
#include <numeric>

#include "detectors.hpp"
#include "errors.hpp"
#include "parallel.hpp"

namespace pkdga {

namespace {

double gini(double benign, double total) {
  if (total <= 0.0) return 0.0;
  const double p = benign / total;
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> rows, std::size_t f, std::span<const std::uint8_t> labels,
              const ForestConfig& cfg, Rng rng)
      : rows_(rows), f_(f), labels_(labels), cfg_(cfg), rng_(rng) {
    mtry_ = cfg.features_per_split == 0
                ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(f))))
                : std::min(cfg.features_per_split, f);
  }

  std::vector<TreeNode> build(std::vector<std::size_t> idx) {
    grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  double x(std::size_t row, std::size_t feat) const { return rows_[row * f_ + feat]; }

  std::int32_t grow(std::vector<std::size_t>& idx, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    double benign = 0.0;
    for (std::size_t i : idx) benign += labels_[i];
    const double total = static_cast<double>(idx.size());
    nodes_[id].value = static_cast<float>(benign / total);
    if (depth >= cfg_.max_depth || benign == 0.0 || benign == total ||
        idx.size() < 2 * cfg_.min_leaf)
      return id;

    std::vector<std::size_t> feats(f_);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    for (std::size_t k = 0; k < mtry_; ++k) std::swap(feats[k], feats[k + rng_.below(f_ - k)]);

    const double parent = gini(benign, total);
    double best_gain = 1e-12;
    std::int32_t best_feat = -1;
    double best_thr = 0.0;
    std::vector<std::size_t> order(idx);
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t feat = feats[k];
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x(a, feat) < x(b, feat); });
      double left_benign = 0.0;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        left_benign += labels_[order[pos]];
        const double lv = x(order[pos], feat);
        const double rv = x(order[pos + 1], feat);
        if (lv == rv) continue;
        const double nl = static_cast<double>(pos + 1);
        const double nr = total - nl;
        if (nl < static_cast<double>(cfg_.min_leaf) || nr < static_cast<double>(cfg_.min_leaf))
          continue;
        const double impurity =
            (nl * gini(left_benign, nl) + nr * gini(benign - left_benign, nr)) / total;
        const double gain = parent - impurity;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = static_cast<std::int32_t>(feat);
          best_thr = lv + (rv - lv) / 2.0;
          // Guard against the midpoint rounding onto the right value.
          if (static_cast<float>(best_thr) >= static_cast<float>(rv) ||
              static_cast<float>(best_thr) < static_cast<float>(lv))
            best_thr = lv;
        }
      }
    }
    if (best_feat < 0) return id;

    const float thr = static_cast<float>(best_thr);
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (static_cast<float>(x(i, best_feat)) <= thr ? left : right).push_back(i);
    if (left.empty() || right.empty()) return id;
    idx.clear();
    idx.shrink_to_fit();
    nodes_[id].feature = best_feat;
    nodes_[id].threshold = thr;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::span<const double> rows_;
  std::size_t f_;
  std::span<const std::uint8_t> labels_;
  const ForestConfig& cfg_;
  Rng rng_;
  std::size_t mtry_ = 1;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RandomForest RandomForest::train(std::span<const double> rows, std::size_t feature_count,
                                 std::span<const std::uint8_t> labels, const ForestConfig& cfg,
                                 std::uint64_t seed) {
  require(feature_count > 0 && rows.size() == labels.size() * feature_count, ErrorCode::kContract,
          "forest input shape mismatch");
  require(!labels.empty(), ErrorCode::kTraining, "empty training set");
  require(cfg.trees >= 1 && cfg.min_leaf >= 1, ErrorCode::kContract, "invalid forest config");
  RandomForest forest;
  forest.feature_count = feature_count;
  forest.trees.resize(cfg.trees);
  const std::size_t n = labels.size();
  parallel_for(cfg.trees, [&](std::size_t t) {
    Rng rng(derive_stream(seed, {0x666f72657374ULL, t}));
    std::vector<std::size_t> idx(n);
    if (cfg.bootstrap) {
      for (auto& i : idx) i = rng.below(n);
    } else {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    forest.trees[t] = TreeBuilder(rows, feature_count, labels, cfg, rng).build(std::move(idx));
  });
  return forest;
}

double RandomForest::predict(std::span<const double> x) const {
  require(x.size() == feature_count, ErrorCode::kContract, "feature vector size mismatch");
  double total = 0.0;
  for (const auto& tree : trees) {
    std::int32_t node = 0;
    while (tree[node].feature >= 0)
      node = static_cast<float>(x[tree[node].feature]) <= tree[node].threshold ? tree[node].left
                                                                               : tree[node].right;
    total += tree[node].value;
  }
  return total / static_cast<double>(trees.size());
}

}  // namespace pkdga
