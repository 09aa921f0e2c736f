#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hne/embedding.hpp"
#include "hne/graph.hpp"
#include "hne/sampler.hpp"
#include "hne/train_spec.hpp"

namespace hne {

enum class RelationKind { transe, distmult, complex, rotate };

std::string to_string(RelationKind kind);
std::optional<RelationKind> parse_relation_kind(const std::string& name);
/// ComplEx and RotatE keep complex embeddings (interleaved re/im pairs).
bool is_complex(RelationKind kind);
LossMode default_loss_mode(RelationKind kind);

struct Triplet {
  NodeId head = 0;
  LinkTypeId relation = 0;
  NodeId tail = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Plausibility of (head, relation, tail); higher is more plausible.
///   TransE:   -||h + r - t||_p
///   DistMult: sum_i r_i h_i t_i
///   ComplEx:  Re(sum_i h_i r_i conj(t_i))
///   RotatE:   -||h ⊙ r - t||^2
/// Complex vectors hold `dim` entries as 2*dim interleaved reals. Throws on a
/// dimension mismatch, p outside {1, 2}, or a RotatE relation entry whose
/// modulus is not 1 (run apply_constraints first).
double score_triplet(RelationKind kind, std::span<const double> head, std::span<const double> relation,
                     std::span<const double> tail, int p = 2);

/// Unchecked score that also adds `scale * d score / d x` into the three
/// gradient buffers (any may be empty to skip). Used by the trainer and the
/// gradient tests, where relation rows are between projections.
double triplet_score_grad(RelationKind kind, std::span<const double> head, std::span<const double> relation,
                          std::span<const double> tail, int p, double scale, std::span<double> grad_head,
                          std::span<double> grad_relation, std::span<double> grad_tail);

/// max(0, gamma - s_pos + s_neg).
double margin_loss(double s_pos, double s_neg, double gamma);

struct ScoreGradient {
  double d_pos = 0.0;
  double d_neg = 0.0;
};
/// Subgradient of margin_loss w.r.t. (s_pos, s_neg); zero when inactive.
ScoreGradient margin_loss_grad(double s_pos, double s_neg, double gamma);
/// -log sigmoid(s_pos) - log sigmoid(-s_neg) and its gradient.
double log_sigmoid_pair_loss(double s_pos, double s_neg);
ScoreGradient log_sigmoid_pair_loss_grad(double s_pos, double s_neg);

struct TripletVectors {
  std::span<const double> head;
  std::span<const double> relation;
  std::span<const double> tail;
};

struct TripletLossResult {
  double loss = 0.0;
  std::vector<double> pos_head, pos_relation, pos_tail;
  std::vector<double> neg_head, neg_relation, neg_tail;
};

/// Pairwise loss of a positive against one corrupted triplet, with
/// closed-form gradients w.r.t. all six vectors.
TripletLossResult triplet_loss(RelationKind kind, LossMode mode, const TripletVectors& pos,
                               const TripletVectors& neg, double gamma, int p = 2);

/// Replaces head or tail (fair coin) with a noise draw of the same node type,
/// keeping the relation. Redraws up to 100 times to avoid known links, then
/// accepts the last draw.
Triplet corrupt_triplet(const Triplet& t, const HeteroGraph& g, const NoiseDistribution& noise, Rng& rng);

void project_node_row(RelationKind kind, std::span<double> row);
void project_relation_row(RelationKind kind, std::span<double> row);
/// TransE: node rows onto the unit sphere. RotatE: every relation entry to
/// unit modulus. DistMult/ComplEx: node rows with norm above 1 rescaled to 1.
/// Zero vectors are left unchanged.
void apply_constraints(RelationKind kind, EmbeddingTable& nodes, RelationParams& relations);

struct RelationalResult {
  EmbeddingTable embeddings;
  RelationParams relations;
  std::vector<double> epoch_loss;
};

/// Edge-sweep SGD: every epoch visits each link once in shuffled order, pairs
/// it with one corrupted triplet and re-projects the touched rows.
class RelationalTrainer {
 public:
  RelationalTrainer(const HeteroGraph& g, RelationKind kind, TrainSpec cfg);
  ~RelationalTrainer();
  RelationalTrainer(RelationalTrainer&&) noexcept;
  RelationalTrainer& operator=(RelationalTrainer&&) noexcept;

  double run_epoch_serial();
  double run_epoch_parallel(int threads);
  /// Mean loss over every link against fixed corruptions drawn from `seed`.
  double evaluate_loss(std::uint64_t seed) const;

  const EmbeddingTable& embeddings() const;
  const RelationParams& relations() const;
  RelationalResult take_result();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

RelationalResult train_relational(const HeteroGraph& g, RelationKind kind, const TrainSpec& cfg);

}  // namespace hne
