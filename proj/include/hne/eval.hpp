#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hne/embedding.hpp"
#include "hne/graph.hpp"

namespace hne {

using LabelSet = std::vector<LabelId>;

struct ClassifierConfig {
  double lambda = 1e-4;
  std::size_t epochs = 100;
  double learning_rate = 0.1;
  bool standardize = true;
  std::uint64_t seed = 1;
};

/// One-vs-rest linear hinge-loss classifier.
struct LinearClassifier {
  std::vector<LabelId> classes;
  bool multi_label = false;
  std::vector<double> mean;
  std::vector<double> scale;
  /// weights(c, j)
  Matrix weights;
  std::vector<double> bias;

  std::vector<double> margins(std::span<const double> x) const;
  double margin(std::span<const double> x, std::size_t class_index) const;
  /// Every class with a positive margin in multi-label mode (argmax when
  /// none); the argmax class otherwise.
  LabelSet predict(std::span<const double> x) const;
};

/// SGD on the L2-regularized hinge loss, one binary problem per class, with
/// step size learning_rate / (1 + lambda * learning_rate * t). Multi-label
/// mode is enabled when any row carries more than one label.
LinearClassifier train_linear_classifier(const Matrix& x, std::span<const LabelSet> y, const ClassifierConfig& cfg);

struct F1Scores {
  double macro = 0.0;
  double micro = 0.0;
};
F1Scores f1_scores(std::span<const LabelSet> pred, std::span<const LabelSet> gold);

std::vector<double> hadamard_features(std::span<const double> a, std::span<const double> b);

/// P(score_pos > score_neg) + 0.5 P(tie), counted exactly over all pairs.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Mean of 1/rank; ranks start at 1.
double mrr(std::span<const std::size_t> ranks);

/// 1-based position of the first true candidate when candidates are sorted
/// by descending score, ties by ascending id. Empty when none is true.
std::optional<std::size_t> rank_of_best_true(std::span<const NodeId> candidates, std::span<const double> scores,
                                             std::span<const NodeId> truth);

struct EvalReport {
  std::string task;
  std::string method;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::vector<double>> metrics;
  std::map<std::string, std::string> metadata;
  std::string config_digest;

  double mean(const std::string& metric) const;
  /// Sample standard deviation over repeats.
  double stddev(const std::string& metric) const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
std::string report_to_text(const EvalReport& report);

struct EvalOptions {
  std::size_t repeats = 5;
  double train_fraction = 0.8;
  ClassifierConfig classifier;
  int threads = 1;
};

/// Stratified train/test split repeated with seeds seed, seed+1, ...
/// Classes with fewer than five members are pooled and split at random,
/// which is flagged in the report metadata.
EvalReport run_node_classification(const EmbeddingTable& emb, std::span<const NodeId> nodes,
                                   std::span<const LabelSet> labels, std::uint64_t seed,
                                   const EvalOptions& options = {});
/// Uses every labeled node of g.
EvalReport run_node_classification(const EmbeddingTable& emb, const HeteroGraph& g, std::uint64_t seed,
                                   const EvalOptions& options = {});

/// Uniform schema-valid non-edge of link type l (absent from `g`).
std::pair<NodeId, NodeId> sample_non_edge(const HeteroGraph& g, LinkTypeId l, Rng& rng);

/// Hadamard features of every training link and as many sampled non-edges
/// fit a two-class classifier; held-out links against fresh non-edges give
/// AUC. MRR ranks the two-hop candidates of each held-out source in `full`,
/// leaving out the source's training neighbors.
EvalReport run_link_prediction(const EmbeddingTable& emb, const LinkSplit& split, const HeteroGraph& full,
                               std::uint64_t seed, const EvalOptions& options = {});

}  // namespace hne
