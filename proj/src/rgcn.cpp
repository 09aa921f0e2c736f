#include "hne/rgcn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace hne {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

std::vector<RowMatrix*> blocks_of(RgcnParams& p) {
  std::vector<RowMatrix*> out;
  p.for_each_block([&](RowMatrix& m) { out.push_back(&m); });
  return out;
}

struct ForwardCache {
  /// h[k]: rows of levels[k]; h.back() are the outputs.
  std::vector<RowMatrix> h;
  std::vector<RowMatrix> pre;
  /// agg[k][l]: mean type-l neighbor rows of each level k+1 node.
  std::vector<std::vector<RowMatrix>> agg;
  std::vector<RowMatrix> self_rows;
};

RowMatrix aggregate(const RgcnBlock& block, const RowMatrix& h, std::size_t l) {
  RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(block.self.size()), h.cols());
  for (std::size_t i = 0; i < block.self.size(); ++i) {
    const auto& nb = block.neighbors[i][l];
    if (nb.empty()) continue;
    for (std::size_t v : nb) out.row(static_cast<Eigen::Index>(i)) += h.row(static_cast<Eigen::Index>(v));
    out.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(nb.size());
  }
  return out;
}

RowMatrix gather(const RowMatrix& h, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), h.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = h.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

ForwardCache forward_cached(const HeteroGraph& g, const RgcnParams& params, const ComputationGraph& cg) {
  const std::size_t layers = params.layers();
  if (cg.blocks.size() != layers) throw Error("computation graph depth does not match the layer count");
  ForwardCache cache;
  cache.h.push_back(rgcn_inputs(g, params, cg.levels.front()));
  for (std::size_t k = 0; k < layers; ++k) {
    const auto& block = cg.blocks[k];
    const RowMatrix& h = cache.h.back();
    std::vector<RowMatrix> agg;
    for (std::size_t l = 0; l < params.rel_weight[k].size(); ++l) agg.push_back(aggregate(block, h, l));
    RowMatrix self_rows = gather(h, block.self);
    RowMatrix z = self_rows * params.self_weight[k];
    for (std::size_t l = 0; l < agg.size(); ++l) z.noalias() += agg[l] * params.rel_weight[k][l];
    RowMatrix out = k + 1 < layers ? RowMatrix(z.cwiseMax(0.0)) : z;
    cache.pre.push_back(std::move(z));
    cache.agg.push_back(std::move(agg));
    cache.self_rows.push_back(std::move(self_rows));
    cache.h.push_back(std::move(out));
  }
  return cache;
}

RgcnBlock full_block(const HeteroGraph& g) {
  RgcnBlock block;
  const std::size_t n = g.num_nodes();
  block.self.resize(n);
  std::iota(block.self.begin(), block.self.end(), std::size_t{0});
  block.neighbors.assign(n, std::vector<std::vector<std::size_t>>(g.num_link_types()));
  for (NodeId u = 0; u < n; ++u) {
    for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
      for (const auto& nb : g.neighbors(u, l)) block.neighbors[u][l].push_back(nb.node);
    }
  }
  return block;
}

}  // namespace

RgcnParams zeros_like(const RgcnParams& params) {
  RgcnParams z = params;
  z.for_each_block([](RowMatrix& m) { m.setZero(); });
  return z;
}

RgcnParams init_rgcn(const HeteroGraph& g, const TrainSpec& cfg, bool use_attributes, Rng& rng) {
  if (cfg.layers == 0) throw Error("R-GCN needs at least one layer");
  RgcnParams p;
  std::size_t input_dim = cfg.dim;
  const bool attributed = use_attributes && g.has_attributes();
  if (attributed) {
    input_dim = 0;
    for (TypeId t = 0; t < g.num_node_types(); ++t) input_dim = std::max(input_dim, g.attribute_dim(t));
  }
  p.dims.push_back(input_dim);
  for (std::size_t k = 0; k < cfg.layers; ++k) p.dims.push_back(cfg.dim);

  auto glorot = [&rng](std::size_t in, std::size_t out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    RowMatrix m(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
  };
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    p.self_weight.push_back(glorot(p.dims[k], p.dims[k + 1]));
    std::vector<RowMatrix> per_type;
    for (LinkTypeId l = 0; l < g.num_link_types(); ++l) per_type.push_back(glorot(p.dims[k], p.dims[k + 1]));
    p.rel_weight.push_back(std::move(per_type));
  }
  if (!attributed) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    p.input.resize(static_cast<Eigen::Index>(g.num_nodes()), static_cast<Eigen::Index>(input_dim));
    for (Eigen::Index i = 0; i < p.input.size(); ++i) p.input.data()[i] = dist(rng);
  }
  p.decoder = RowMatrix::Ones(static_cast<Eigen::Index>(g.num_link_types()), static_cast<Eigen::Index>(cfg.dim));
  return p;
}

ComputationGraph sample_neighborhood(const HeteroGraph& g, std::span<const NodeId> seeds, std::size_t fanout,
                                     std::size_t depth, Rng& rng) {
  std::vector<std::vector<NodeId>> levels;
  std::vector<RgcnBlock> blocks;

  std::vector<NodeId> top;
  {
    std::unordered_map<NodeId, std::size_t> seen;
    for (NodeId v : seeds) {
      g.node_type(v);
      if (seen.emplace(v, top.size()).second) top.push_back(v);
    }
  }
  levels.push_back(top);
  std::vector<NodeId> sampled;
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& targets = levels.back();
    std::vector<NodeId> sources = targets;
    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < sources.size(); ++i) index.emplace(sources[i], i);
    RgcnBlock block;
    block.self.resize(targets.size());
    std::iota(block.self.begin(), block.self.end(), std::size_t{0});
    block.neighbors.assign(targets.size(), std::vector<std::vector<std::size_t>>(g.num_link_types()));
    for (std::size_t i = 0; i < targets.size(); ++i) {
      for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
        auto nb = g.neighbors(targets[i], l);
        sampled.clear();
        if (fanout == 0 || nb.size() <= fanout) {
          for (const auto& n : nb) sampled.push_back(n.node);
        } else {
          std::vector<NodeId> all;
          all.reserve(nb.size());
          for (const auto& n : nb) all.push_back(n.node);
          std::sample(all.begin(), all.end(), std::back_inserter(sampled), fanout, rng);
        }
        for (NodeId v : sampled) {
          auto [it, fresh] = index.emplace(v, sources.size());
          if (fresh) sources.push_back(v);
          block.neighbors[i][l].push_back(it->second);
        }
      }
    }
    blocks.push_back(std::move(block));
    levels.push_back(std::move(sources));
  }

  ComputationGraph cg;
  cg.levels.assign(levels.rbegin(), levels.rend());
  cg.blocks.assign(std::make_move_iterator(blocks.rbegin()), std::make_move_iterator(blocks.rend()));
  return cg;
}

RowMatrix rgcn_block_forward(const RgcnBlock& block, const RowMatrix& h, const RowMatrix& self_weight,
                             std::span<const RowMatrix> rel_weight, bool relu, RowMatrix* pre_activation) {
  if (h.cols() != self_weight.rows()) throw Error("rgcn layer: input width does not match the weight matrix");
  for (const auto& w : rel_weight) {
    if (w.rows() != self_weight.rows() || w.cols() != self_weight.cols()) {
      throw Error("rgcn layer: relation weight shape differs from the self weight");
    }
  }
  RowMatrix z = gather(h, block.self) * self_weight;
  for (std::size_t l = 0; l < rel_weight.size(); ++l) z.noalias() += aggregate(block, h, l) * rel_weight[l];
  if (pre_activation) *pre_activation = z;
  if (relu) return z.cwiseMax(0.0);
  return z;
}

RowMatrix rgcn_layer(const HeteroGraph& g, const RowMatrix& h, const RgcnParams& params, std::size_t k) {
  if (static_cast<std::size_t>(h.rows()) != g.num_nodes()) throw Error("rgcn layer: need one row per node");
  if (k >= params.layers()) throw Error("rgcn layer index out of range");
  return rgcn_block_forward(full_block(g), h, params.self_weight[k], params.rel_weight[k], true);
}

RowMatrix rgcn_inputs(const HeteroGraph& g, const RgcnParams& params, std::span<const NodeId> nodes) {
  const auto width = static_cast<Eigen::Index>(params.dims.front());
  RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(nodes.size()), width);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (params.input.size() > 0) {
      out.row(r) = params.input.row(static_cast<Eigen::Index>(nodes[i]));
    } else {
      auto attrs = g.attributes(nodes[i]);
      for (std::size_t j = 0; j < attrs.size(); ++j) out(r, static_cast<Eigen::Index>(j)) = attrs[j];
    }
  }
  return out;
}

RowMatrix rgcn_forward(const HeteroGraph& g, const RgcnParams& params, const ComputationGraph& cg) {
  return forward_cached(g, params, cg).h.back();
}

double rgcn_batch_loss(const HeteroGraph& g, const RgcnParams& params, const ComputationGraph& cg,
                       std::span<const RgcnExample> batch, RgcnParams* grads) {
  if (batch.empty()) return 0.0;
  ForwardCache cache = forward_cached(g, params, cg);
  const RowMatrix& out = cache.h.back();
  std::unordered_map<NodeId, Eigen::Index> row_of;
  const auto seeds = cg.seeds();
  for (std::size_t i = 0; i < seeds.size(); ++i) row_of.emplace(seeds[i], static_cast<Eigen::Index>(i));
  auto row = [&](NodeId v) {
    auto it = row_of.find(v);
    if (it == row_of.end()) throw Error("rgcn batch references a node outside the computation graph");
    return it->second;
  };

  const double scale = 1.0 / static_cast<double>(batch.size());
  RowMatrix d_out = RowMatrix::Zero(out.rows(), out.cols());
  double loss = 0.0;
  for (const auto& ex : batch) {
    const auto a = params.decoder.row(static_cast<Eigen::Index>(ex.relation));
    const Eigen::Index t = row(ex.tail);
    const Eigen::Index h = row(ex.head);
    const double s_pos = (out.row(h).array() * a.array() * out.row(t).array()).sum();
    loss -= log_sigmoid(s_pos);
    std::vector<std::pair<Eigen::Index, double>> coefs{{h, sigmoid(s_pos) - 1.0}};
    for (NodeId n : ex.negatives) {
      const Eigen::Index r = row(n);
      const double s_neg = (out.row(r).array() * a.array() * out.row(t).array()).sum();
      loss -= log_sigmoid(-s_neg);
      coefs.push_back({r, sigmoid(s_neg)});
    }
    if (grads) {
      for (const auto& [r, c] : coefs) {
        const double gc = c * scale;
        d_out.row(r).array() += gc * a.array() * out.row(t).array();
        d_out.row(t).array() += gc * a.array() * out.row(r).array();
        grads->decoder.row(static_cast<Eigen::Index>(ex.relation)).array() +=
            gc * out.row(r).array() * out.row(t).array();
      }
    }
  }
  loss *= scale;
  if (!std::isfinite(loss)) throw Error("rgcn: non-finite loss; lower the learning rate");
  if (!grads) return loss;

  RowMatrix d_h = std::move(d_out);
  for (std::size_t k = params.layers(); k-- > 0;) {
    const auto& block = cg.blocks[k];
    RowMatrix d_z = d_h;
    if (k + 1 < params.layers()) d_z.array() *= (cache.pre[k].array() > 0.0).cast<double>();
    const RowMatrix& h_in = cache.h[k];
    RowMatrix d_in = RowMatrix::Zero(h_in.rows(), h_in.cols());

    grads->self_weight[k].noalias() += cache.self_rows[k].transpose() * d_z;
    const RowMatrix d_self = d_z * params.self_weight[k].transpose();
    for (std::size_t i = 0; i < block.self.size(); ++i) {
      d_in.row(static_cast<Eigen::Index>(block.self[i])) += d_self.row(static_cast<Eigen::Index>(i));
    }
    for (std::size_t l = 0; l < params.rel_weight[k].size(); ++l) {
      grads->rel_weight[k][l].noalias() += cache.agg[k][l].transpose() * d_z;
      const RowMatrix d_agg = d_z * params.rel_weight[k][l].transpose();
      for (std::size_t i = 0; i < block.self.size(); ++i) {
        const auto& nb = block.neighbors[i][l];
        if (nb.empty()) continue;
        const double inv = 1.0 / static_cast<double>(nb.size());
        for (std::size_t v : nb) d_in.row(static_cast<Eigen::Index>(v)) += inv * d_agg.row(static_cast<Eigen::Index>(i));
      }
    }
    d_h = std::move(d_in);
  }
  if (params.input.size() > 0) {
    const auto& inputs = cg.levels.front();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      grads->input.row(static_cast<Eigen::Index>(inputs[i])) += d_h.row(static_cast<Eigen::Index>(i));
    }
  }
  return loss;
}

EmbeddingTable rgcn_embed(const HeteroGraph& g, const RgcnParams& params) {
  const RgcnBlock block = full_block(g);
  std::vector<NodeId> all(g.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  RowMatrix h = rgcn_inputs(g, params, all);
  for (std::size_t k = 0; k < params.layers(); ++k) {
    h = rgcn_block_forward(block, h, params.self_weight[k], params.rel_weight[k], k + 1 < params.layers());
  }
  EmbeddingTable table(g.num_nodes(), static_cast<std::size_t>(h.cols()));
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    auto dst = table.row(v);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = h(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j));
  }
  return table;
}

RgcnResult train_rgcn(const HeteroGraph& g, const TrainSpec& cfg, bool use_attributes) {
  cfg.validate();
  Rng rng(cfg.seed);
  RgcnParams init = init_rgcn(g, cfg, use_attributes, rng);
  return train_rgcn(g, std::move(init), cfg);
}

RgcnResult train_rgcn(const HeteroGraph& g, RgcnParams params, const TrainSpec& cfg) {
  cfg.validate();
  if (g.num_links() == 0) throw Error("R-GCN training needs at least one link");
  Eigen::setNbThreads(cfg.workers());
  const NoiseDistribution noise(g);
  Rng rng(cfg.seed + 1);

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  RgcnParams m = zeros_like(params);
  RgcnParams v = zeros_like(params);
  RgcnParams grads = zeros_like(params);
  auto p_blocks = blocks_of(params);
  auto m_blocks = blocks_of(m);
  auto v_blocks = blocks_of(v);
  auto g_blocks = blocks_of(grads);

  std::vector<std::size_t> order(g.num_links());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch_size = std::max<std::size_t>(cfg.batch_size, 1);
  const double total_steps =
      static_cast<double>(cfg.epochs * ((g.num_links() + batch_size - 1) / batch_size));
  std::size_t step = 0;
  RgcnResult result;
  std::vector<RgcnExample> batch;
  std::vector<NodeId> seeds;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      batch.clear();
      seeds.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
        const Link& link = g.links()[order[i]];
        RgcnExample ex{link.src, link.type, link.dst, noise.sample_negative(g.node_type(link.src), cfg.negatives, rng)};
        seeds.push_back(ex.head);
        seeds.push_back(ex.tail);
        seeds.insert(seeds.end(), ex.negatives.begin(), ex.negatives.end());
        batch.push_back(std::move(ex));
      }
      const ComputationGraph cg = sample_neighborhood(g, seeds, cfg.fanout, params.layers(), rng);
      for (auto* gb : g_blocks) gb->setZero();
      epoch_loss += rgcn_batch_loss(g, params, cg, batch, &grads) * static_cast<double>(batch.size());

      ++step;
      const double rate = scheduled_rate(cfg, static_cast<double>(step - 1), total_steps);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t b = 0; b < p_blocks.size(); ++b) {
        auto& gm = *g_blocks[b];
        auto& mm = *m_blocks[b];
        auto& vm = *v_blocks[b];
        mm = beta1 * mm + (1.0 - beta1) * gm;
        vm = beta2 * vm + (1.0 - beta2) * gm.cwiseProduct(gm);
        p_blocks[b]->array() -= rate * (mm.array() / c1) / ((vm.array() / c2).sqrt() + eps);
      }
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  result.embeddings = rgcn_embed(g, params);
  if (!result.embeddings.values.all_finite()) throw Error("rgcn: non-finite embeddings after training");
  result.params = std::move(params);
  return result;
}

}  // namespace hne
