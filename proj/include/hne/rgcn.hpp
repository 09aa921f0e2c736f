#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hne/embedding.hpp"
#include "hne/graph.hpp"
#include "hne/sampler.hpp"
#include "hne/train_spec.hpp"

namespace hne {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Layer k maps d_k-dimensional rows to d_{k+1} via a self matrix and one
/// matrix per link type (rows are node vectors, so h' = h W).
struct RgcnParams {
  std::vector<std::size_t> dims;
  std::vector<RowMatrix> self_weight;
  /// rel_weight[k][l]
  std::vector<std::vector<RowMatrix>> rel_weight;
  /// Learned per-node input rows; empty when node attributes feed layer 0.
  RowMatrix input;
  /// Decoder diagonal per link type.
  RowMatrix decoder;

  std::size_t layers() const { return self_weight.size(); }
  /// Visits every parameter block in a fixed order.
  template <typename Fn>
  void for_each_block(Fn&& fn) {
    for (auto& w : self_weight) fn(w);
    for (auto& per_type : rel_weight) {
      for (auto& w : per_type) fn(w);
    }
    if (input.size() > 0) fn(input);
    fn(decoder);
  }
};

/// Same shapes as RgcnParams, zero-initialized.
RgcnParams zeros_like(const RgcnParams& params);

/// Glorot-uniform weights, decoder all ones. Layer 0 reads node attributes
/// (zero-padded to the widest type) when the graph has them, else learned
/// input rows of width cfg.dim.
RgcnParams init_rgcn(const HeteroGraph& g, const TrainSpec& cfg, bool use_attributes, Rng& rng);

/// One message-passing block from level k nodes (sources) to level k+1
/// nodes (targets). `self[i]` is target i's own row among the sources and
/// `neighbors[i][l]` its (possibly sampled) type-l neighbors.
struct RgcnBlock {
  std::vector<std::size_t> self;
  std::vector<std::vector<std::vector<std::size_t>>> neighbors;
};

/// Layered computation graph. levels[0] holds input nodes and levels.back()
/// the seeds; blocks[k] connects levels[k] to levels[k+1].
struct ComputationGraph {
  std::vector<std::vector<NodeId>> levels;
  std::vector<RgcnBlock> blocks;

  std::span<const NodeId> seeds() const { return levels.back(); }
};

/// Fixed-fanout sampling per node and link type (without replacement);
/// fanout 0 keeps every neighbor. Neighbors are the graph's typed lists.
ComputationGraph sample_neighborhood(const HeteroGraph& g, std::span<const NodeId> seeds, std::size_t fanout,
                                     std::size_t depth, Rng& rng);

/// h'_u = act( sum_l mean_{v in N_l(u)} h_v W_l + h_u W_0 ) over one block.
/// `pre_activation` (optional) receives the value before the ReLU.
RowMatrix rgcn_block_forward(const RgcnBlock& block, const RowMatrix& h, const RowMatrix& self_weight,
                             std::span<const RowMatrix> rel_weight, bool relu, RowMatrix* pre_activation = nullptr);

/// Full-neighborhood layer over every node of g (rows of h indexed by dense
/// id), with ReLU.
RowMatrix rgcn_layer(const HeteroGraph& g, const RowMatrix& h, const RgcnParams& params, std::size_t k);

/// Input rows of the given nodes: attributes or learned rows.
RowMatrix rgcn_inputs(const HeteroGraph& g, const RgcnParams& params, std::span<const NodeId> nodes);

/// Output embeddings of cg.seeds(); the last layer has no activation.
RowMatrix rgcn_forward(const HeteroGraph& g, const RgcnParams& params, const ComputationGraph& cg);

/// A positive link with its corrupted heads.
struct RgcnExample {
  NodeId head = 0;
  LinkTypeId relation = 0;
  NodeId tail = 0;
  std::vector<NodeId> negatives;
};

/// Mean over examples of
///   -[log sigmoid(e_h^T A_l e_t) + sum_k log sigmoid(-e_{n_k}^T A_l e_t)],
/// with every referenced node a seed of `cg`. Gradients are accumulated into
/// `grads` by manual backpropagation through all layers.
double rgcn_batch_loss(const HeteroGraph& g, const RgcnParams& params, const ComputationGraph& cg,
                       std::span<const RgcnExample> batch, RgcnParams* grads);

/// Embeddings of every node with full neighborhoods.
EmbeddingTable rgcn_embed(const HeteroGraph& g, const RgcnParams& params);

struct RgcnResult {
  EmbeddingTable embeddings;
  RgcnParams params;
  std::vector<double> epoch_loss;
};

/// Minibatch link-prediction training with Adam updates. Each epoch visits
/// every link once in shuffled order.
RgcnResult train_rgcn(const HeteroGraph& g, const TrainSpec& cfg, bool use_attributes = true);
RgcnResult train_rgcn(const HeteroGraph& g, RgcnParams init, const TrainSpec& cfg);

}  // namespace hne
