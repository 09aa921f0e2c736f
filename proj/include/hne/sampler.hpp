#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "hne/graph.hpp"

namespace hne {

struct WalkConfig {
  std::size_t walks_per_node = 10;
  /// Number of nodes per walk.
  std::size_t walk_length = 40;
  std::size_t window = 5;
  /// Empty means homogeneous walks over all link types.
  std::vector<MetaPath> metapaths;
  std::uint64_t seed = 1;

  void validate() const;
};

/// A skip-gram pair. `tag` selects the pair family: a meta-path index, a link
/// type id, or 0 for untyped pairs.
struct ContextPair {
  NodeId center = 0;
  NodeId context = 0;
  std::uint32_t tag = 0;

  friend bool operator==(const ContextPair&, const ContextPair&) = default;
};

/// A walk that also records the link type used for each step.
struct TypedWalk {
  std::vector<NodeId> nodes;
  std::vector<LinkTypeId> steps;
};

/// Walk followed by the meta-path (or tag) it was generated under.
struct TaggedWalk {
  std::vector<NodeId> nodes;
  std::uint32_t tag = 0;
};

/// Independent per-walk generator: walk i of a batch seeded with `seed`
/// always sees the same stream, regardless of thread count.
Rng walk_rng(std::uint64_t seed, std::uint64_t walk_index);

std::vector<NodeId> metapath_walk(const HeteroGraph& g, NodeId start, const MetaPath& mp, std::size_t length, Rng& rng);
/// Uniform walk over the union of all typed neighbor lists.
TypedWalk homogeneous_walk(const HeteroGraph& g, NodeId start, std::size_t length, Rng& rng);

std::vector<ContextPair> extract_context_pairs(std::span<const NodeId> walk, std::size_t window, std::uint32_t tag);
/// Number of pairs extract_context_pairs emits for a walk of `length` nodes.
std::size_t context_pair_count(std::size_t length, std::size_t window);

template <typename Fn>
void for_each_context_pair(std::span<const NodeId> walk, std::size_t window, Fn&& fn) {
  const std::size_t n = walk.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(n - 1, i + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) fn(walk[i], walk[j]);
    }
  }
}

/// Meta-path corpus: walks_per_node walks from every node of each meta-path's
/// start type, tagged with the meta-path index. Parallel over walks.
std::vector<TaggedWalk> generate_metapath_walks(const HeteroGraph& g, const WalkConfig& cfg, int threads);
/// Serial reference for generate_metapath_walks; identical output.
std::vector<TaggedWalk> generate_metapath_walks_serial(const HeteroGraph& g, const WalkConfig& cfg);
std::vector<TypedWalk> generate_homogeneous_walks(const HeteroGraph& g, const WalkConfig& cfg, int threads);
std::vector<TypedWalk> generate_homogeneous_walks_serial(const HeteroGraph& g, const WalkConfig& cfg);

/// Normalizes per-meta-path instance counts to weights summing to one.
std::vector<double> metapath_weights_from_counts(std::span<const std::size_t> counts);
/// Counts context pairs sampled under each meta-path and normalizes them.
std::vector<double> learn_metapath_weights(const HeteroGraph& g, const WalkConfig& cfg, int threads = 1);

/// Per-node-type unigram distribution proportional to degree^0.75.
class NoiseDistribution {
 public:
  static constexpr double kExponent = 0.75;

  NoiseDistribution() = default;
  explicit NoiseDistribution(const HeteroGraph& g);
  /// `type_of[i]` and `degree[i]` describe node i; nodes are ids 0..n-1.
  NoiseDistribution(std::span<const TypeId> type_of, std::span<const double> degree);

  NodeId sample(TypeId type, Rng& rng) const;
  std::vector<NodeId> sample_negative(TypeId type, std::size_t count, Rng& rng) const;
  double probability(NodeId v) const;
  std::size_t type_size(TypeId type) const;

 private:
  void build(std::span<const TypeId> type_of, std::span<const double> degree);

  std::vector<std::vector<NodeId>> members_;
  std::vector<std::vector<double>> cumulative_;
  std::vector<double> probability_;
};

/// Weighted edge sampling within each link type.
class EdgeSampler {
 public:
  EdgeSampler() = default;
  explicit EdgeSampler(const HeteroGraph& g);

  const Link& sample(LinkTypeId l, Rng& rng) const;

 private:
  const HeteroGraph* graph_ = nullptr;
  std::vector<std::vector<double>> cumulative_;
};

const Link& sample_edge(const EdgeSampler& sampler, LinkTypeId l, Rng& rng);

/// One walk per line, space-separated `type:id` tokens with original ids.
void write_walks(std::ostream& out, const HeteroGraph& g, std::span<const TaggedWalk> walks);

}  // namespace hne
