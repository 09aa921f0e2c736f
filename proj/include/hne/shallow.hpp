#pragma once

#include <atomic>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hne/embedding.hpp"
#include "hne/graph.hpp"
#include "hne/sampler.hpp"
#include "hne/train_spec.hpp"

namespace hne {

enum class ShallowFamily { metapath2vec, pte, hin2vec, heer };
enum class ScoreKind { dot, bilinear_diag };

struct ShallowModelSpec {
  ShallowFamily family = ShallowFamily::metapath2vec;
  ScoreKind score = ScoreKind::dot;

  static ShallowModelSpec of(ShallowFamily family);
  bool walk_based() const { return family == ShallowFamily::metapath2vec || family == ShallowFamily::hin2vec; }
};

std::string to_string(ShallowFamily family);

double sigmoid(double x);
/// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

/// dot: e_u . e_v; bilinear_diag: sum_i a_i e_u[i] e_v[i].
double score_pair(ScoreKind kind, std::span<const double> e_u, std::span<const double> e_v,
                  std::span<const double> a = {});

struct NsLossResult {
  double loss = 0.0;
  std::vector<double> grad_center;
  std::vector<double> grad_context;
  std::vector<std::vector<double>> grad_negatives;
  /// Empty for the dot score.
  std::vector<double> grad_relation;
};

/// Negative-sampling loss for one positive pair,
///   -[log s(context, center) + sum_k log sigmoid(-s(negative_k, center))],
/// where negatives replace the context node. Gradients are closed-form.
/// Throws Error on non-finite intermediates.
NsLossResult ns_loss(ScoreKind kind, std::span<const double> center, std::span<const double> context,
                     std::span<const std::span<const double>> negatives, std::span<const double> a = {});

/// Scratch buffers for ns_sgd_step.
struct NsWorkspace {
  std::vector<double> center;
  std::vector<double> context;
  std::vector<double> relation;
  std::vector<double> negatives;
};

/// One SGD step on ns_loss scaled by `weight`, applied in place. Gradients
/// are formed from the pre-step values so aliased rows are handled. Returns
/// the weighted loss. `a` may be empty for the dot score.
double ns_sgd_step(ScoreKind kind, std::span<double> center, std::span<double> context,
                   std::span<const std::span<double>> negatives, std::span<double> a, double learning_rate,
                   double weight, NsWorkspace& ws);

/// Aggregated pair weight w_uv for a (center, context, tag) triple.
struct PairWeight {
  NodeId center = 0;
  NodeId context = 0;
  std::uint32_t tag = 0;
  double weight = 0.0;
};

/// One entry per link: center = source, context = target, tag = link type.
std::vector<PairWeight> edge_pair_weights(const HeteroGraph& g);
/// Sums multiplicities of identical (center, context, tag) pairs.
std::vector<PairWeight> aggregate_pair_weights(std::span<const ContextPair> pairs);

inline constexpr std::size_t kExactObjectiveMaxNodes = 1000;

/// Full-softmax objective sum w log(exp s(u,v) / sum_{u'} exp s(u',v)) with
/// u' ranging over the node type of the context node. `relations` supplies
/// the diagonal (row = tag) for the bilinear score.
double objective_exact(const HeteroGraph& g, std::span<const PairWeight> pairs, const EmbeddingTable& table,
                       const RelationParams* relations, ScoreKind kind);

/// Smoothness form of the same objective, computed through f(e) = sqrt(a) e:
///   smoothness = sum w/2 ||f(e_u) - f(e_v)||^2
///   jr1        = sum w/2 (||f(e_u)||^2 + ||f(e_v)||^2)
///   jr2        = sum w log sum_{u'} exp(f(e_u')^T f(e_v))
/// so that the objective equals -(smoothness - jr1 + jr2).
struct SmoothnessTerms {
  double smoothness = 0.0;
  double jr1 = 0.0;
  double jr2 = 0.0;

  double objective() const { return -(smoothness - jr1 + jr2); }
};

SmoothnessTerms smoothness_decomposition(const HeteroGraph& g, std::span<const PairWeight> pairs,
                                         const EmbeddingTable& table, const RelationParams* relations,
                                         ScoreKind kind);

struct ShallowResult {
  EmbeddingTable embeddings;
  /// Diagonal vectors per meta-path (HIN2Vec) or link type (HEER); empty
  /// for dot-score models.
  RelationParams relations;
  /// metapath2vec only: learned per-meta-path weights.
  std::vector<double> metapath_weights;
  std::vector<double> epoch_loss;
};

/// Negative-sampling SGD over one model instance. Epochs can run through
/// the serial reference kernel or the lock-free OpenMP kernel; with one
/// worker both produce identical tables.
class ShallowTrainer {
 public:
  ShallowTrainer(const HeteroGraph& g, ShallowModelSpec model, TrainSpec cfg, WalkConfig walk_cfg);
  ~ShallowTrainer();
  ShallowTrainer(ShallowTrainer&&) noexcept;
  ShallowTrainer& operator=(ShallowTrainer&&) noexcept;

  /// Returns the summed weighted loss of the epoch.
  double run_epoch_serial();
  double run_epoch_parallel(int threads);

  std::size_t updates_per_epoch() const;
  const EmbeddingTable& embeddings() const;
  ShallowResult take_result();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Trains for cfg.epochs epochs. Throws on zero training pairs or non-finite
/// embeddings after any epoch.
ShallowResult train_shallow(const HeteroGraph& g, const ShallowModelSpec& model, const TrainSpec& cfg,
                            const WalkConfig& walk_cfg);

}  // namespace hne
