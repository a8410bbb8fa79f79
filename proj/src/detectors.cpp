#include "detectors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "errors.hpp"
#include "parallel.hpp"

namespace pkdga {

namespace {

const TokenDict& char_dict() {
  static const TokenDict dict;
  return dict;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

void check_two_classes(const LabeledCorpus& corpus) {
  bool benign = false, agd = false;
  for (const auto& e : corpus) (e.label == Label::kBenign ? benign : agd) = true;
  require(benign && agd, ErrorCode::kTraining, "detector training needs both benign and AGD samples");
}

std::string join_lines(std::span<const std::string> items) {
  std::string out;
  for (const auto& s : items) {
    out += s;
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view blob) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (begin < blob.size()) {
    const auto nl = blob.find('\n', begin);
    const auto end = nl == std::string_view::npos ? blob.size() : nl;
    out.emplace_back(blob.substr(begin, end - begin));
    begin = end + 1;
  }
  return out;
}

double sigmoid_d(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Threshold maximizing TPR - FPR with benign as the positive class.
double fit_threshold(std::span<const double> scores, std::span<const Label> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double pos = 0.0, neg = 0.0;
  for (auto l : labels) (l == Label::kBenign ? pos : neg) += 1.0;
  double tp = 0.0, fp = 0.0, best = -1.0, best_thr = 0.5;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (labels[order[k]] == Label::kBenign ? tp : fp) += 1.0;
    if (k + 1 < order.size() && scores[order[k + 1]] == scores[order[k]]) continue;
    const double j = tp / pos - fp / neg;
    if (j > best) {
      best = j;
      best_thr = scores[order[k]];
    }
  }
  return best_thr;
}

// ------------------------------------------------------------ statistics

std::array<double, 3> statistics_distances(const StatisticsModel& m, std::string_view core,
                                           std::string_view skip_reference) {
  std::vector<double> p(m.unigram.size(), 0.0);
  for (char c : core) p[*char_dict().index_of(c)] += 1.0 / static_cast<double>(core.size());
  std::vector<double> q(m.unigram.begin(), m.unigram.end());
  const double kl = kl_divergence(p, q);
  double best_jaccard = 0.0;
  double best_edit = 1.0;
  for (const auto& ref : m.references) {
    if (!skip_reference.empty() && ref == skip_reference) continue;
    if (core.size() >= 2 && ref.size() >= 2)
      best_jaccard = std::max(best_jaccard, jaccard_bigrams(core, ref));
    const double d = static_cast<double>(edit_distance(core, ref)) /
                     static_cast<double>(std::max(core.size(), ref.size()));
    best_edit = std::min(best_edit, d);
  }
  return {kl, best_jaccard, best_edit};
}

double statistics_score(const StatisticsModel& m, std::string_view core) {
  const auto d = statistics_distances(m, core, {});
  double z = m.weights[3];
  for (std::size_t k = 0; k < 3; ++k) z += m.weights[k] * (d[k] - m.mean[k]) / m.stddev[k];
  return sigmoid_d(z);
}

StatisticsModel train_statistics(const LabeledCorpus& corpus, const DetectorHyper& hp,
                                 std::uint64_t seed) {
  // Set semantics: repeated rows carry no extra weight.
  LabeledCorpus unique;
  std::unordered_set<std::string> seen;
  for (const auto& e : corpus)
    if (seen.insert(e.domain).second) unique.push_back(e);

  StatisticsModel m;
  const auto& dict = char_dict();
  std::vector<double> counts(dict.size(), 1.0);
  std::vector<std::string> benign_cores;
  std::unordered_set<std::string> seen_core;
  for (const auto& e : unique) {
    if (e.label != Label::kBenign) continue;
    const std::string core(registrable_label(e.domain));
    for (char c : core) counts[*dict.index_of(c)] += 1.0;
    if (seen_core.insert(core).second) benign_cores.push_back(core);
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (double c : counts) m.unigram.push_back(static_cast<float>(c / total));

  Rng rng(derive_stream(seed, {0x73746174ULL}));
  shuffle(benign_cores, rng);
  benign_cores.resize(std::min(benign_cores.size(), hp.reference_count));
  m.references = benign_cores;

  const std::size_t n = unique.size();
  std::vector<std::array<double, 3>> x(n);
  std::vector<double> y(n);
  parallel_for(n, [&](std::size_t i) {
    const std::string_view core = registrable_label(unique[i].domain);
    x[i] = statistics_distances(m, core, core);
    y[i] = unique[i].label == Label::kBenign ? 1.0 : 0.0;
  });
  std::array<double, 3> mean{}, sd{};
  for (const auto& r : x)
    for (std::size_t k = 0; k < 3; ++k) mean[k] += r[k] / static_cast<double>(n);
  for (const auto& r : x)
    for (std::size_t k = 0; k < 3; ++k) sd[k] += (r[k] - mean[k]) * (r[k] - mean[k]) / static_cast<double>(n);
  for (std::size_t k = 0; k < 3; ++k) {
    m.mean[k] = static_cast<float>(mean[k]);
    m.stddev[k] = static_cast<float>(std::max(std::sqrt(sd[k]), 1e-6));
  }
  std::array<double, 4> w{};
  for (std::size_t it = 0; it < hp.logistic_iterations; ++it) {
    std::array<double, 4> g{};
    for (std::size_t i = 0; i < n; ++i) {
      double z = w[3];
      std::array<double, 3> zs{};
      for (std::size_t k = 0; k < 3; ++k) {
        zs[k] = (x[i][k] - m.mean[k]) / m.stddev[k];
        z += w[k] * zs[k];
      }
      const double err = sigmoid_d(z) - y[i];
      for (std::size_t k = 0; k < 3; ++k) g[k] += err * zs[k];
      g[3] += err;
    }
    for (std::size_t k = 0; k < 4; ++k) w[k] -= hp.logistic_lr * g[k] / static_cast<double>(n);
  }
  for (std::size_t k = 0; k < 4; ++k) m.weights[k] = static_cast<float>(w[k]);
  return m;
}

// ------------------------------------------------------------ neural

CharNet<float> init_charnet(const DetectorHyper& hp, bool bidirectional, std::uint64_t seed) {
  auto net = CharNet<float>::zeros(char_dict().size(), hp.embed_dim, hp.hidden_dim, hp.layers,
                                   bidirectional);
  std::uint64_t index = 0;
  net.for_each_tensor([&](const std::string&, std::span<float> v) {
    Rng rng(derive_stream(seed, {0x6e657572616cULL, index++}));
    fill_uniform(v, rng, -0.08, 0.08);
  });
  return net;
}

// Mini-batch Adam on binary cross-entropy.
void fit_charnet(CharNet<float>& net, const LabeledCorpus& corpus, const DetectorHyper& hp,
                 std::uint64_t seed) {
  const auto& dict = char_dict();
  std::vector<std::vector<TokenId>> seqs(corpus.size());
  std::vector<double> targets(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    seqs[i] = dict.tokenize(registrable_label(corpus[i].domain));
    targets[i] = corpus[i].label == Label::kBenign ? 1.0 : 0.0;
  }
  std::vector<std::span<float>> params;
  net.for_each_tensor([&](const std::string&, std::span<float> v) { params.push_back(v); });
  std::vector<std::vector<float>> m1, m2;
  for (auto p : params) {
    m1.emplace_back(p.size(), 0.0f);
    m2.emplace_back(p.size(), 0.0f);
  }
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0;
  const std::size_t batch = std::max<std::size_t>(1, hp.batch);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<CharNet<float>> slots(batch, net.zeros_like());
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    Rng rng(derive_stream(seed, {0x65706f6368ULL, epoch}));
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      parallel_for(count, [&](std::size_t b) {
        slots[b] = net.zeros_like();
        const std::size_t i = order[start + b];
        charnet_loss_grad(net, std::span<const TokenId>(seqs[i]), targets[i], slots[b]);
      });
      std::vector<std::vector<float>> grads;
      for (std::size_t b = 0; b < count; ++b) {
        std::size_t k = 0;
        slots[b].for_each_tensor([&](const std::string&, std::span<float> v) {
          if (b == 0) grads.emplace_back(v.begin(), v.end());
          else
            for (std::size_t j = 0; j < v.size(); ++j) grads[k][j] += v[j];
          ++k;
        });
      }
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t j = 0; j < params[k].size(); ++j) {
          const double g = grads[k][j] / static_cast<double>(count);
          m1[k][j] = static_cast<float>(beta1 * m1[k][j] + (1 - beta1) * g);
          m2[k][j] = static_cast<float>(beta2 * m2[k][j] + (1 - beta2) * g * g);
          params[k][j] -= static_cast<float>(hp.lr * (m1[k][j] / c1) / (std::sqrt(m2[k][j] / c2) + eps));
        }
      }
    }
  }
  bool finite = true;
  net.for_each_tensor([&](const std::string&, std::span<float> v) {
    finite = finite && all_finite(std::span<const float>(v));
  });
  require(finite, ErrorCode::kNumeric, "neural detector diverged");
}

double neural_score(const NeuralModel& m, std::string_view core) {
  const auto seq = char_dict().tokenize(core);
  const double z = static_cast<double>(charnet_logit(m.net, std::span<const TokenId>(seq)));
  return std::clamp(sigmoid_d(z), 0.0, 1.0);
}

}  // namespace

LabeledCorpus make_corpus(std::span<const std::string> benign, std::span<const std::string> agd) {
  LabeledCorpus out;
  out.reserve(benign.size() + agd.size());
  for (const auto& d : benign) out.push_back({d, Label::kBenign});
  for (const auto& d : agd) out.push_back({d, Label::kAgd});
  return out;
}

DetectorSpec parse_detector_spec(std::string_view name) {
  if (name == "statistics") return {DetectorKind::kStatistics, false};
  if (name == "fanci") return {DetectorKind::kFanci, false};
  if (name == "wordgraph") return {DetectorKind::kWordGraph, false};
  if (name == "lstm" || name == "neural") return {DetectorKind::kNeural, false};
  if (name == "bilstm") return {DetectorKind::kNeural, true};
  fail(ErrorCode::kUsage, "unknown detector kind '" + std::string(name) + "'");
}

std::string detector_name(const DetectorSpec& spec) {
  switch (spec.kind) {
    case DetectorKind::kStatistics: return "statistics";
    case DetectorKind::kFanci: return "fanci";
    case DetectorKind::kWordGraph: return "wordgraph";
    case DetectorKind::kNeural: return spec.bidirectional ? "bilstm" : "lstm";
  }
  return "unknown";
}

// ------------------------------------------------------------ word graph

std::vector<std::string> WordGraphModel::segment(std::string_view core) const {
  std::vector<std::string> found;
  std::string key;
  for (std::size_t i = 0; i < core.size();) {
    std::size_t match = 0;
    for (std::size_t len = std::min(longest_node, core.size() - i); len >= 3; --len) {
      key.assign(core.substr(i, len));
      if (degree.contains(key)) {
        match = len;
        break;
      }
    }
    if (match == 0) {
      ++i;
      continue;
    }
    key.assign(core.substr(i, match));
    if (std::find(found.begin(), found.end(), key) == found.end()) found.push_back(key);
    i += match;
  }
  return found;
}

WordGraphModel build_word_graph(std::span<const std::string> cores, const DetectorHyper& hp) {
  require(hp.min_substring >= 3 && hp.min_substring <= hp.max_substring, ErrorCode::kContract,
          "invalid substring length range");
  // Number of distinct labels containing each substring.
  std::unordered_map<std::string, std::size_t> support;
  std::unordered_set<std::string> local;
  const std::set<std::string> distinct(cores.begin(), cores.end());
  for (const auto& core : distinct) {
    local.clear();
    for (std::size_t i = 0; i < core.size(); ++i)
      for (std::size_t len = hp.min_substring; len <= hp.max_substring && i + len <= core.size(); ++len)
        local.insert(core.substr(i, len));
    for (const auto& s : local) ++support[s];
  }
  // Keep frequent substrings that are maximal: no one-character extension
  // occurs in as many labels.
  WordGraphModel g;
  std::map<std::string, std::size_t> nodes;
  for (const auto& [s, k] : support) {
    if (k < hp.min_repeats) continue;
    bool maximal = true;
    if (s.size() < hp.max_substring) {
      for (char c : kDefaultAlphabet) {
        auto l = support.find(std::string(1, c) + s);
        auto r = support.find(s + c);
        if ((l != support.end() && l->second == k) || (r != support.end() && r->second == k)) {
          maximal = false;
          break;
        }
      }
    }
    if (maximal) nodes.emplace(s, 0);
  }
  for (const auto& [s, d] : nodes) {
    g.degree.emplace(s, 0);
    g.longest_node = std::max(g.longest_node, s.size());
  }
  std::map<std::string, std::set<std::string>> adjacency;
  for (const auto& core : distinct) {
    const auto seg = g.segment(core);
    for (std::size_t a = 0; a < seg.size(); ++a)
      for (std::size_t b = 0; b < seg.size(); ++b)
        if (a != b) adjacency[seg[a]].insert(seg[b]);
  }
  for (const auto& [s, nbrs] : adjacency) {
    g.degree[s] = nbrs.size();
    g.max_degree = std::max(g.max_degree, nbrs.size());
  }
  return g;
}

double wordgraph_score(const WordGraphModel& g, std::string_view domain) {
  require(validate_domain(domain), ErrorCode::kData, "invalid domain '" + std::string(domain) + "'");
  if (g.max_degree == 0) return 0.0;
  const auto seg = g.segment(registrable_label(domain));
  if (seg.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : seg) total += static_cast<double>(g.degree.at(s));
  return total / (static_cast<double>(seg.size()) * static_cast<double>(g.max_degree));
}

double wordgraph_score(const DetectorModel& model, std::string_view domain) {
  const auto* g = std::get_if<WordGraphModel>(&model.impl());
  require(g != nullptr, ErrorCode::kContract, "not a word-graph detector");
  return wordgraph_score(*g, domain);
}

// ------------------------------------------------------------ dispatch

std::array<double, 3> StatisticsModel::distances(std::string_view core) const {
  return statistics_distances(*this, core, {});
}

double DetectorModel::score(std::string_view domain) const {
  require(validate_domain(domain), ErrorCode::kData, "invalid domain '" + std::string(domain) + "'");
  const std::string_view core = registrable_label(domain);
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, StatisticsModel>) {
          return statistics_score(m, core);
        } else if constexpr (std::is_same_v<M, FanciModel>) {
          const auto f = extract_features(domain, m.context);
          return m.forest.predict(f);
        } else if constexpr (std::is_same_v<M, WordGraphModel>) {
          return 1.0 - wordgraph_score(m, domain);
        } else {
          return neural_score(m, core);
        }
      },
      impl_);
}

double score(const DetectorModel& model, std::string_view domain) { return model.score(domain); }

DetectorModel train_detector(const DetectorSpec& spec, const LabeledCorpus& corpus,
                             const DetectorHyper& hp, std::uint64_t seed) {
  check_two_classes(corpus);
  for (const auto& e : corpus)
    require(validate_domain(e.domain), ErrorCode::kData, "invalid corpus domain '" + e.domain + "'");
  switch (spec.kind) {
    case DetectorKind::kStatistics:
      return DetectorModel(spec, train_statistics(corpus, hp, seed), 0.5);
    case DetectorKind::kFanci: {
      std::vector<std::string> benign_cores;
      for (const auto& e : corpus)
        if (e.label == Label::kBenign) benign_cores.emplace_back(registrable_label(e.domain));
      FanciModel m;
      m.context = FeatureContext::build(benign_cores, hp.dictionary);
      std::vector<double> rows(corpus.size() * kFeatureCount);
      std::vector<std::uint8_t> labels(corpus.size());
      parallel_for(corpus.size(), [&](std::size_t i) {
        const auto f = extract_features(corpus[i].domain, m.context);
        std::copy(f.begin(), f.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * kFeatureCount));
        labels[i] = corpus[i].label == Label::kBenign ? 1 : 0;
      });
      ForestConfig cfg{hp.trees, hp.max_depth, hp.min_leaf, 0, hp.bootstrap};
      m.forest = RandomForest::train(rows, kFeatureCount, labels, cfg, seed);
      return DetectorModel(spec, std::move(m), 0.5);
    }
    case DetectorKind::kWordGraph: {
      std::vector<std::string> agd_cores;
      for (const auto& e : corpus)
        if (e.label == Label::kAgd) agd_cores.emplace_back(registrable_label(e.domain));
      DetectorModel model(spec, build_word_graph(agd_cores, hp), 0.5);
      std::vector<double> scores(corpus.size());
      std::vector<Label> labels(corpus.size());
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        scores[i] = model.score(corpus[i].domain);
        labels[i] = corpus[i].label;
      }
      model.set_threshold(static_cast<float>(fit_threshold(scores, labels)));
      return model;
    }
    case DetectorKind::kNeural: {
      NeuralModel m{init_charnet(hp, spec.bidirectional, seed)};
      fit_charnet(m.net, corpus, hp, seed);
      return DetectorModel(spec, std::move(m), 0.5);
    }
  }
  fail(ErrorCode::kContract, "unknown detector kind");
}

bool supports_incremental(const DetectorModel& model) {
  return model.kind() == DetectorKind::kNeural;
}

DetectorModel incremental_update(const DetectorModel& model, const LabeledCorpus& extra,
                                 const DetectorHyper& hp, std::uint64_t seed) {
  require(supports_incremental(model), ErrorCode::kUnsupported,
          detector_name(model.spec()) + " detector has no incremental update");
  require(!extra.empty(), ErrorCode::kTraining, "incremental update needs samples");
  for (const auto& e : extra)
    require(validate_domain(e.domain), ErrorCode::kData, "invalid corpus domain '" + e.domain + "'");
  DetectorModel out = model;
  fit_charnet(std::get<NeuralModel>(out.impl()).net, extra, hp, seed);
  return out;
}

// ------------------------------------------------------------ checkpoints

Container detector_to_container(const DetectorModel& model) {
  Container c;
  c.add("detector.kind", detector_name(model.spec()));
  const float thr = static_cast<float>(model.threshold());
  c.add("detector.threshold", pack_floats(std::span<const float>(&thr, 1)));
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, StatisticsModel>) {
          c.add("statistics.unigram", pack_floats(m.unigram));
          c.add("statistics.references", join_lines(m.references));
          c.add("statistics.mean", pack_floats(m.mean));
          c.add("statistics.stddev", pack_floats(m.stddev));
          c.add("statistics.weights", pack_floats(m.weights));
        } else if constexpr (std::is_same_v<M, FanciModel>) {
          auto table = [](const std::unordered_map<std::string, double>& t) {
            std::map<std::string, double> sorted(t.begin(), t.end());
            std::vector<std::string> keys;
            std::vector<float> vals;
            for (const auto& [k, v] : sorted) {
              keys.push_back(k);
              vals.push_back(static_cast<float>(v));
            }
            return std::pair{join_lines(keys), pack_floats(vals)};
          };
          auto [bk, bv] = table(m.context.bigram_freq);
          auto [tk, tv] = table(m.context.trigram_freq);
          c.add("fanci.bigram.keys", bk);
          c.add("fanci.bigram.freq", bv);
          c.add("fanci.trigram.keys", tk);
          c.add("fanci.trigram.freq", tv);
          std::vector<std::string> words(m.context.words.begin(), m.context.words.end());
          std::sort(words.begin(), words.end());
          c.add("fanci.words", join_lines(words));
          for (std::size_t t = 0; t < m.forest.trees.size(); ++t) {
            std::vector<float> flat;
            for (const auto& n : m.forest.trees[t]) {
              flat.insert(flat.end(), {static_cast<float>(n.feature), n.threshold,
                                       static_cast<float>(n.left), static_cast<float>(n.right),
                                       n.value});
            }
            c.add("fanci.tree." + std::to_string(t), pack_floats(flat));
          }
        } else if constexpr (std::is_same_v<M, WordGraphModel>) {
          std::map<std::string, std::size_t> sorted(m.degree.begin(), m.degree.end());
          std::vector<std::string> keys;
          std::vector<float> deg;
          for (const auto& [k, v] : sorted) {
            keys.push_back(k);
            deg.push_back(static_cast<float>(v));
          }
          c.add("wordgraph.nodes", join_lines(keys));
          c.add("wordgraph.degree", pack_floats(deg));
        } else {
          c.header = {static_cast<std::uint32_t>(m.net.layers),
                      static_cast<std::uint32_t>(m.net.embed_dim),
                      static_cast<std::uint32_t>(m.net.hidden_dim),
                      static_cast<std::uint32_t>(m.net.vocab)};
          auto& net = const_cast<CharNet<float>&>(m.net);
          net.for_each_tensor([&](const std::string& name, std::span<float> v) {
            c.add("neural." + name, pack_floats(v));
          });
        }
      },
      model.impl());
  return c;
}

namespace {

float single_float(const Container& c, std::string_view name) {
  const auto v = unpack_floats(c.get(name));
  require(v.size() == 1, ErrorCode::kData, "expected one value in " + std::string(name));
  return v[0];
}

template <std::size_t N>
std::array<float, N> fixed_floats(const Container& c, std::string_view name) {
  const auto v = unpack_floats(c.get(name));
  require(v.size() == N, ErrorCode::kData, "wrong size for " + std::string(name));
  std::array<float, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

std::unordered_map<std::string, double> read_table(const Container& c, const std::string& prefix) {
  const auto keys = split_lines(c.get(prefix + ".keys"));
  const auto vals = unpack_floats(c.get(prefix + ".freq"));
  require(keys.size() == vals.size(), ErrorCode::kData, "n-gram table size mismatch");
  std::unordered_map<std::string, double> t;
  for (std::size_t i = 0; i < keys.size(); ++i) t.emplace(keys[i], vals[i]);
  return t;
}

}  // namespace

DetectorModel detector_from_container(const Container& c) {
  const auto spec = parse_detector_spec(c.get("detector.kind"));
  const double thr = single_float(c, "detector.threshold");
  switch (spec.kind) {
    case DetectorKind::kStatistics: {
      StatisticsModel m;
      m.unigram = unpack_floats(c.get("statistics.unigram"));
      require(m.unigram.size() == char_dict().size(), ErrorCode::kData, "bad unigram profile");
      m.references = split_lines(c.get("statistics.references"));
      m.mean = fixed_floats<3>(c, "statistics.mean");
      m.stddev = fixed_floats<3>(c, "statistics.stddev");
      m.weights = fixed_floats<4>(c, "statistics.weights");
      return DetectorModel(spec, std::move(m), thr);
    }
    case DetectorKind::kFanci: {
      FanciModel m;
      m.context.bigram_freq = read_table(c, "fanci.bigram");
      m.context.trigram_freq = read_table(c, "fanci.trigram");
      for (auto& w : split_lines(c.get("fanci.words"))) {
        m.context.max_word_length = std::max(m.context.max_word_length, w.size());
        m.context.words.insert(std::move(w));
      }
      m.forest.feature_count = kFeatureCount;
      for (std::size_t t = 0; c.has("fanci.tree." + std::to_string(t)); ++t) {
        const auto flat = unpack_floats(c.get("fanci.tree." + std::to_string(t)));
        require(flat.size() % 5 == 0 && !flat.empty(), ErrorCode::kData, "bad tree blob");
        std::vector<TreeNode> nodes;
        for (std::size_t k = 0; k < flat.size(); k += 5) {
          TreeNode n{static_cast<std::int32_t>(flat[k]), flat[k + 1],
                     static_cast<std::int32_t>(flat[k + 2]), static_cast<std::int32_t>(flat[k + 3]),
                     flat[k + 4]};
          const auto limit = static_cast<std::int32_t>(flat.size() / 5);
          require(n.feature < static_cast<std::int32_t>(kFeatureCount) &&
                      (n.feature < 0 || (n.left > 0 && n.left < limit && n.right > 0 && n.right < limit)),
                  ErrorCode::kData, "corrupt tree node");
          nodes.push_back(n);
        }
        m.forest.trees.push_back(std::move(nodes));
      }
      require(!m.forest.trees.empty(), ErrorCode::kData, "forest has no trees");
      return DetectorModel(spec, std::move(m), thr);
    }
    case DetectorKind::kWordGraph: {
      WordGraphModel m;
      const auto keys = split_lines(c.get("wordgraph.nodes"));
      const auto deg = unpack_floats(c.get("wordgraph.degree"));
      require(keys.size() == deg.size(), ErrorCode::kData, "word graph size mismatch");
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto d = static_cast<std::size_t>(deg[i]);
        m.degree.emplace(keys[i], d);
        m.max_degree = std::max(m.max_degree, d);
        m.longest_node = std::max(m.longest_node, keys[i].size());
      }
      return DetectorModel(spec, std::move(m), thr);
    }
    case DetectorKind::kNeural: {
      NeuralModel m{CharNet<float>::zeros(c.header.output_dim, c.header.embed_dim,
                                          c.header.hidden_dim, c.header.layers, spec.bidirectional)};
      require(m.net.vocab == char_dict().size(), ErrorCode::kData, "neural vocabulary mismatch");
      m.net.for_each_tensor([&](const std::string& name, std::span<float> v) {
        const auto vals = unpack_floats(c.get("neural." + name));
        require(vals.size() == v.size(), ErrorCode::kData, "tensor size mismatch for " + name);
        std::copy(vals.begin(), vals.end(), v.begin());
      });
      return DetectorModel(spec, std::move(m), thr);
    }
  }
  fail(ErrorCode::kData, "unknown detector kind");
}

void save_detector(const std::filesystem::path& path, const DetectorModel& model) {
  write_file(path, encode_container(detector_to_container(model)));
}

DetectorModel load_detector(const std::filesystem::path& path) {
  return detector_from_container(decode_container(read_file(path)));
}

}  // namespace pkdga
