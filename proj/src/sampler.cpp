#include "hne/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace hne {

namespace {

std::size_t pick_cumulative(std::span<const double> cumulative, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, cumulative.back());
  const double x = unit(rng);
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

struct WalkJob {
  NodeId start;
  std::uint32_t tag;
};

std::vector<WalkJob> metapath_jobs(const HeteroGraph& g, const WalkConfig& cfg) {
  std::vector<WalkJob> jobs;
  for (std::uint32_t m = 0; m < cfg.metapaths.size(); ++m) {
    const auto range = g.type_range(cfg.metapaths[m].start_type);
    for (std::size_t round = 0; round < cfg.walks_per_node; ++round) {
      for (NodeId v = range.begin; v < range.end; ++v) jobs.push_back({v, m});
    }
  }
  return jobs;
}

// Meta-path walks are truncated to one traversal when the path cannot cycle.
std::size_t effective_length(const MetaPath& mp, std::size_t requested) {
  return mp.cyclable() ? requested : std::min(requested, mp.length() + 1);
}

}  // namespace

void WalkConfig::validate() const {
  if (window < 1) throw Error("window must be at least 1");
  if (walk_length < 2) throw Error("walk length must be at least 2");
}

Rng walk_rng(std::uint64_t seed, std::uint64_t walk_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(walk_index), static_cast<std::uint32_t>(walk_index >> 32)};
  return Rng(seq);
}

std::vector<NodeId> metapath_walk(const HeteroGraph& g, NodeId start, const MetaPath& mp, std::size_t length,
                                  Rng& rng) {
  if (g.node_type(start) != mp.start_type) {
    throw Error("walk start node " + std::to_string(g.original_id(start)) + " does not match the meta-path start type");
  }
  if (length > mp.length() + 1 && !mp.cyclable()) {
    throw Error("meta-path " + mp.to_string(g) + " cannot be cycled to reach walk length " + std::to_string(length));
  }
  std::vector<NodeId> walk;
  walk.reserve(length);
  walk.push_back(start);
  NodeId current = start;
  for (std::size_t step = 0; walk.size() < length; ++step) {
    const std::size_t k = step % mp.length();
    const LinkTypeId l = mp.links[k];
    const TypeId next_type = mp.node_types[k + 1];
    auto nb = g.neighbors(current, l);
    std::size_t valid = 0;
    for (const auto& n : nb) valid += g.node_type(n.node) == next_type;
    if (valid == 0) break;
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, valid - 1)(rng);
    for (const auto& n : nb) {
      if (g.node_type(n.node) != next_type) continue;
      if (pick-- == 0) {
        current = n.node;
        break;
      }
    }
    walk.push_back(current);
  }
  return walk;
}

TypedWalk homogeneous_walk(const HeteroGraph& g, NodeId start, std::size_t length, Rng& rng) {
  TypedWalk walk;
  walk.nodes.reserve(length);
  walk.nodes.push_back(start);
  NodeId current = start;
  while (walk.nodes.size() < length) {
    std::size_t total = 0;
    for (LinkTypeId l = 0; l < g.num_link_types(); ++l) total += g.neighbors(current, l).size();
    if (total == 0) break;
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
    for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
      auto nb = g.neighbors(current, l);
      if (pick < nb.size()) {
        current = nb[pick].node;
        walk.steps.push_back(l);
        break;
      }
      pick -= nb.size();
    }
    walk.nodes.push_back(current);
  }
  return walk;
}

std::vector<ContextPair> extract_context_pairs(std::span<const NodeId> walk, std::size_t window, std::uint32_t tag) {
  std::vector<ContextPair> pairs;
  pairs.reserve(context_pair_count(walk.size(), window));
  for_each_context_pair(walk, window, [&](NodeId center, NodeId context) { pairs.push_back({center, context, tag}); });
  return pairs;
}

std::size_t context_pair_count(std::size_t length, std::size_t window) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t left = std::min(i, window);
    const std::size_t right = std::min(length - 1 - i, window);
    count += left + right;
  }
  return count;
}

std::vector<TaggedWalk> generate_metapath_walks(const HeteroGraph& g, const WalkConfig& cfg, int threads) {
  cfg.validate();
  const auto jobs = metapath_jobs(g, cfg);
  std::vector<TaggedWalk> walks(jobs.size());
#pragma omp parallel for schedule(dynamic, 64) num_threads(std::max(threads, 1))
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Rng rng = walk_rng(cfg.seed, i);
    const auto& mp = cfg.metapaths[jobs[i].tag];
    walks[i].nodes = metapath_walk(g, jobs[i].start, mp, effective_length(mp, cfg.walk_length), rng);
    walks[i].tag = jobs[i].tag;
  }
  return walks;
}

std::vector<TaggedWalk> generate_metapath_walks_serial(const HeteroGraph& g, const WalkConfig& cfg) {
  cfg.validate();
  const auto jobs = metapath_jobs(g, cfg);
  std::vector<TaggedWalk> walks;
  walks.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Rng rng = walk_rng(cfg.seed, i);
    const auto& mp = cfg.metapaths[jobs[i].tag];
    walks.push_back({metapath_walk(g, jobs[i].start, mp, effective_length(mp, cfg.walk_length), rng), jobs[i].tag});
  }
  return walks;
}

std::vector<TypedWalk> generate_homogeneous_walks(const HeteroGraph& g, const WalkConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  std::vector<TypedWalk> walks(n * cfg.walks_per_node);
#pragma omp parallel for schedule(dynamic, 64) num_threads(std::max(threads, 1))
  for (std::size_t i = 0; i < walks.size(); ++i) {
    Rng rng = walk_rng(cfg.seed, i);
    walks[i] = homogeneous_walk(g, static_cast<NodeId>(i % n), cfg.walk_length, rng);
  }
  return walks;
}

std::vector<TypedWalk> generate_homogeneous_walks_serial(const HeteroGraph& g, const WalkConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  std::vector<TypedWalk> walks;
  walks.reserve(n * cfg.walks_per_node);
  for (std::size_t i = 0; i < n * cfg.walks_per_node; ++i) {
    Rng rng = walk_rng(cfg.seed, i);
    walks.push_back(homogeneous_walk(g, static_cast<NodeId>(i % n), cfg.walk_length, rng));
  }
  return walks;
}

std::vector<double> metapath_weights_from_counts(std::span<const std::size_t> counts) {
  if (counts.empty()) throw Error("no meta-paths to weight");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) throw Error("no meta-path produced any sampled instance");
  std::vector<double> weights;
  for (std::size_t c : counts) weights.push_back(static_cast<double>(c) / total);
  return weights;
}

std::vector<double> learn_metapath_weights(const HeteroGraph& g, const WalkConfig& cfg, int threads) {
  if (cfg.metapaths.empty()) throw Error("learning meta-path weights needs at least one meta-path");
  const auto walks = generate_metapath_walks(g, cfg, threads);
  std::vector<std::size_t> counts(cfg.metapaths.size(), 0);
  for (const auto& w : walks) counts[w.tag] += context_pair_count(w.nodes.size(), cfg.window);
  return metapath_weights_from_counts(counts);
}

// ---------------------------------------------------------------------------
// NoiseDistribution

NoiseDistribution::NoiseDistribution(const HeteroGraph& g) {
  std::vector<TypeId> type_of(g.num_nodes());
  std::vector<double> degree(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    type_of[v] = g.node_type(v);
    degree[v] = g.weighted_degree(v);
  }
  build(type_of, degree);
}

NoiseDistribution::NoiseDistribution(std::span<const TypeId> type_of, std::span<const double> degree) {
  build(type_of, degree);
}

void NoiseDistribution::build(std::span<const TypeId> type_of, std::span<const double> degree) {
  if (type_of.size() != degree.size()) throw Error("noise distribution: type and degree arrays differ in length");
  TypeId types = 0;
  for (TypeId t : type_of) types = std::max<TypeId>(types, t + 1);
  members_.assign(types, {});
  cumulative_.assign(types, {});
  probability_.assign(type_of.size(), 0.0);
  std::vector<std::vector<double>> mass(types);
  for (NodeId v = 0; v < type_of.size(); ++v) {
    members_[type_of[v]].push_back(v);
    mass[type_of[v]].push_back(std::pow(std::max(degree[v], 0.0), kExponent));
  }
  for (TypeId t = 0; t < types; ++t) {
    auto& m = mass[t];
    if (m.empty()) continue;
    double total = std::accumulate(m.begin(), m.end(), 0.0);
    // All-isolated types fall back to uniform.
    if (total <= 0.0) {
      std::fill(m.begin(), m.end(), 1.0);
      total = static_cast<double>(m.size());
    }
    cumulative_[t].resize(m.size());
    std::partial_sum(m.begin(), m.end(), cumulative_[t].begin());
    for (std::size_t i = 0; i < m.size(); ++i) probability_[members_[t][i]] = m[i] / total;
  }
}

NodeId NoiseDistribution::sample(TypeId type, Rng& rng) const {
  if (type >= members_.size() || members_[type].empty()) {
    throw Error("cannot draw negatives from empty node type " + std::to_string(type));
  }
  return members_[type][pick_cumulative(cumulative_[type], rng)];
}

std::vector<NodeId> NoiseDistribution::sample_negative(TypeId type, std::size_t count, Rng& rng) const {
  if (type >= members_.size() || members_[type].empty()) {
    throw Error("cannot draw negatives from empty node type " + std::to_string(type));
  }
  std::vector<NodeId> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample(type, rng));
  return out;
}

double NoiseDistribution::probability(NodeId v) const { return probability_.at(v); }

std::size_t NoiseDistribution::type_size(TypeId type) const {
  return type < members_.size() ? members_[type].size() : 0;
}

// ---------------------------------------------------------------------------
// EdgeSampler

EdgeSampler::EdgeSampler(const HeteroGraph& g) : graph_(&g) {
  for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& link : g.links_of_type(l)) {
      total += link.weight;
      cumulative.push_back(total);
    }
    cumulative_.push_back(std::move(cumulative));
  }
}

const Link& EdgeSampler::sample(LinkTypeId l, Rng& rng) const {
  if (graph_ == nullptr || l >= cumulative_.size()) throw Error("unknown link type index " + std::to_string(l));
  const auto& cumulative = cumulative_[l];
  if (cumulative.empty() || cumulative.back() <= 0.0) {
    throw Error("cannot sample from link type " + std::to_string(l) + " without weighted links");
  }
  return graph_->links_of_type(l)[pick_cumulative(cumulative, rng)];
}

const Link& sample_edge(const EdgeSampler& sampler, LinkTypeId l, Rng& rng) { return sampler.sample(l, rng); }

void write_walks(std::ostream& out, const HeteroGraph& g, std::span<const TaggedWalk> walks) {
  for (const auto& walk : walks) {
    for (std::size_t i = 0; i < walk.nodes.size(); ++i) {
      const NodeId v = walk.nodes[i];
      out << (i ? " " : "") << g.original_type(g.node_type(v)) << ':' << g.original_id(v);
    }
    out << '\n';
  }
}

}  // namespace hne
