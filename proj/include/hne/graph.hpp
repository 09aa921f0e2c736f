#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace hne {

using NodeId = std::uint32_t;
using TypeId = std::uint32_t;
using LinkTypeId = std::uint32_t;
using LabelId = std::int64_t;
using Rng = std::mt19937_64;

/// Raised for malformed input, schema violations and contract breaches.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Link {
  NodeId src = 0;
  NodeId dst = 0;
  LinkTypeId type = 0;
  double weight = 1.0;

  friend bool operator==(const Link&, const Link&) = default;
};

struct LinkSchema {
  TypeId src_type = 0;
  TypeId dst_type = 0;
  bool directed = false;
  std::int64_t original_id = 0;

  friend bool operator==(const LinkSchema&, const LinkSchema&) = default;
};

struct Neighbor {
  NodeId node = 0;
  double weight = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct NodeRange {
  NodeId begin = 0;
  NodeId end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(NodeId v) const { return v >= begin && v < end; }
};

class GraphBuilder;

/// Immutable typed multigraph.
///
/// Nodes are stored type-contiguously: dense ids of node type t occupy
/// [type_range(t).begin, type_range(t).end), ordered by original id. The
/// row of a node inside its per-type embedding block is therefore
/// `v - type_range(node_type(v)).begin`.
///
/// Neighbor lists merge parallel links of the same type (weights summed) and
/// are sorted by ascending node id. Undirected link types appear in both
/// endpoints' lists; directed ones only in the source's out-list and the
/// target's in-list.
class HeteroGraph {
 public:
  HeteroGraph() = default;

  std::size_t num_nodes() const { return node_type_.size(); }
  std::size_t num_node_types() const { return type_offsets_.empty() ? 0 : type_offsets_.size() - 1; }
  std::size_t num_link_types() const { return schema_.size(); }
  std::size_t num_links() const { return links_.size(); }

  TypeId node_type(NodeId v) const;
  NodeRange type_range(TypeId t) const;
  std::size_t local_index(NodeId v) const { return v - type_offsets_[node_type(v)]; }

  std::int64_t original_id(NodeId v) const { return original_ids_.at(v); }
  std::int64_t original_type(TypeId t) const { return original_types_.at(t); }
  std::optional<NodeId> find_node(std::int64_t original_id) const;
  std::optional<TypeId> find_node_type(std::int64_t original_type) const;
  std::optional<LinkTypeId> find_link_type(std::int64_t original_link_type) const;

  const LinkSchema& schema(LinkTypeId l) const { return schema_.at(l); }
  std::span<const LinkSchema> schemas() const { return schema_; }

  /// All links, grouped by link type in ascending type order.
  std::span<const Link> links() const { return links_; }
  std::span<const Link> links_of_type(LinkTypeId l) const;
  std::span<const std::vector<double>> link_attributes() const { return link_attributes_; }

  /// Type-l neighbors of v: out-neighbors for directed types, all incident
  /// nodes for undirected ones. Throws on unknown v or l.
  std::span<const Neighbor> neighbors(NodeId v, LinkTypeId l) const;
  /// Nodes with a type-l link pointing at v (same as neighbors() for
  /// undirected types).
  std::span<const Neighbor> in_neighbors(NodeId v, LinkTypeId l) const;
  bool has_link(NodeId u, NodeId v, LinkTypeId l) const;
  /// Sum of incident link weights over all types and directions.
  double weighted_degree(NodeId v) const { return degree_.at(v); }

  bool has_attributes() const { return !attributes_.empty(); }
  std::size_t attribute_dim(TypeId t) const { return attribute_dims_.empty() ? 0 : attribute_dims_.at(t); }
  std::span<const double> attributes(NodeId v) const;

  bool has_labels() const { return !labels_.empty(); }
  std::span<const LabelId> labels(NodeId v) const;

  /// Copy of the graph with a different link multiset (same nodes, schema,
  /// attributes and labels).
  HeteroGraph with_links(std::vector<Link> links) const;

  friend bool operator==(const HeteroGraph&, const HeteroGraph&) = default;

 private:
  friend class GraphBuilder;
  void index_links();
  void check_node(NodeId v) const;
  void check_link_type(LinkTypeId l) const;

  std::vector<TypeId> node_type_;
  std::vector<NodeId> type_offsets_;
  std::vector<std::int64_t> original_ids_;
  std::vector<std::int64_t> original_types_;
  std::unordered_map<std::int64_t, NodeId> id_index_;

  std::vector<LinkSchema> schema_;
  std::vector<Link> links_;
  std::vector<std::size_t> link_type_offsets_;
  std::vector<std::vector<double>> link_attributes_;

  // CSR per link type: offsets of size num_nodes + 1.
  std::vector<std::vector<std::size_t>> out_offsets_;
  std::vector<std::vector<Neighbor>> out_entries_;
  std::vector<std::vector<std::size_t>> in_offsets_;
  std::vector<std::vector<Neighbor>> in_entries_;
  std::vector<double> degree_;

  std::vector<std::size_t> attribute_dims_;
  std::vector<std::vector<double>> attributes_;
  std::vector<std::vector<LabelId>> labels_;
};

/// Incremental construction keyed by original ids. Nodes must be added before
/// the links that reference them; the schema of a link type is fixed by its
/// first link.
class GraphBuilder {
 public:
  void add_node(std::int64_t original_id, std::int64_t original_type, std::vector<double> attributes = {});
  void set_directed(std::int64_t original_link_type, bool directed = true);
  /// Fixes the endpoint types of a link type ahead of any link.
  void declare_link_type(std::int64_t original_link_type, std::int64_t src_type, std::int64_t dst_type,
                         bool directed);
  void add_link(std::int64_t src, std::int64_t dst, std::int64_t original_link_type, double weight,
                std::vector<double> attributes = {});
  void add_label(std::int64_t original_id, LabelId label);

  HeteroGraph build() const;

 private:
  struct PendingNode {
    std::int64_t type;
    std::vector<double> attributes;
  };
  struct PendingLink {
    std::int64_t src;
    std::int64_t dst;
    std::int64_t type;
    double weight;
    std::vector<double> attributes;
  };
  struct PendingSchema {
    std::int64_t src_type;
    std::int64_t dst_type;
  };

  std::map<std::int64_t, PendingNode> nodes_;
  std::map<std::int64_t, std::size_t> attr_dim_by_type_;
  std::map<std::int64_t, bool> directed_;
  std::map<std::int64_t, PendingSchema> schema_;
  std::vector<PendingLink> links_;
  std::map<std::int64_t, std::vector<LabelId>> labels_;
};

/// Ordered list of link types starting from a node type.
///
/// Each step moves from the current node type along a link type: forward
/// (schema source to target) for any link type, or backward for undirected
/// ones. `node_types` has one more entry than `links`.
struct MetaPath {
  TypeId start_type = 0;
  std::vector<LinkTypeId> links;
  std::vector<TypeId> node_types;

  /// Validates consecutive schema compatibility; throws Error otherwise.
  static MetaPath resolve(const HeteroGraph& g, TypeId start_type, std::vector<LinkTypeId> links);
  /// Parses "T:L1,L2,..." written with original node/link type ids.
  static MetaPath parse(const HeteroGraph& g, const std::string& text);
  std::string to_string(const HeteroGraph& g) const;

  std::size_t length() const { return links.size(); }
  bool cyclable() const { return !links.empty() && node_types.front() == node_types.back(); }
};

struct HeldOutLink {
  NodeId src = 0;
  NodeId dst = 0;
  LinkTypeId type = 0;
  double weight = 1.0;
};

struct LinkSplit {
  HeteroGraph train;
  std::vector<HeldOutLink> held_out;
  std::uint64_t seed = 0;
  double holdout_ratio = 0.0;
  /// Link types with fewer than two links, kept wholly in the training graph.
  std::vector<LinkTypeId> kept_in_train;
};

struct SyntheticLinkType {
  std::int64_t src_type = 0;
  std::int64_t dst_type = 0;
  bool directed = false;
};

struct SyntheticSpec {
  std::vector<std::size_t> nodes_per_type;
  std::size_t communities = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  std::vector<SyntheticLinkType> link_types;
  /// Node type whose communities become labels.
  std::int64_t label_type = 0;
  /// When > 0, every node gets `attribute_dim` features: a one-hot community
  /// indicator (first `communities` coordinates) plus N(0, attribute_noise^2).
  std::size_t attribute_dim = 0;
  double attribute_noise = 0.0;
};

struct SyntheticGraph {
  HeteroGraph graph;
  /// Community of every node, indexed by dense id.
  std::vector<std::size_t> community;
};

HeteroGraph load_graph(const std::filesystem::path& node_file, const std::filesystem::path& link_file,
                       const std::optional<std::filesystem::path>& label_file = std::nullopt,
                       bool read_attributes = true);
void save_graph(const HeteroGraph& g, const std::filesystem::path& node_file,
                const std::filesystem::path& link_file,
                const std::optional<std::filesystem::path>& label_file = std::nullopt);
/// Writes `dense_id<TAB>node_type<TAB>original_id` for every node.
void save_id_map(const HeteroGraph& g, const std::filesystem::path& path);

/// Nodes reachable from u in one or two hops over any link type and
/// direction, excluding u. Sorted ascending.
std::vector<NodeId> two_hop_candidates(const HeteroGraph& g, NodeId u);

/// True when every link's endpoint types match its schema entry.
bool schema_conformant(const HeteroGraph& g);

LinkSplit split_links(const HeteroGraph& g, double holdout_ratio, std::uint64_t seed);

SyntheticGraph generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace hne
