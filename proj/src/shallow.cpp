#include "hne/shallow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace hne {

ShallowModelSpec ShallowModelSpec::of(ShallowFamily family) {
  const bool bilinear = family == ShallowFamily::hin2vec || family == ShallowFamily::heer;
  return {family, bilinear ? ScoreKind::bilinear_diag : ScoreKind::dot};
}

std::string to_string(ShallowFamily family) {
  switch (family) {
    case ShallowFamily::metapath2vec: return "metapath2vec";
    case ShallowFamily::pte: return "pte";
    case ShallowFamily::hin2vec: return "hin2vec";
    case ShallowFamily::heer: return "heer";
  }
  return "unknown";
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double score_pair(ScoreKind kind, std::span<const double> e_u, std::span<const double> e_v,
                  std::span<const double> a) {
  if (e_u.size() != e_v.size()) throw Error("score_pair: embedding dimensions differ");
  double s = 0.0;
  if (kind == ScoreKind::dot) {
    for (std::size_t i = 0; i < e_u.size(); ++i) s += e_u[i] * e_v[i];
    return s;
  }
  if (a.size() != e_u.size()) throw Error("score_pair: relation diagonal has the wrong dimension");
  for (std::size_t i = 0; i < e_u.size(); ++i) s += a[i] * e_u[i] * e_v[i];
  return s;
}

namespace {

inline double weighted_dot(const double* x, const double* y, const double* a, std::size_t d) {
  double s = 0.0;
  if (a == nullptr) {
    for (std::size_t i = 0; i < d; ++i) s += x[i] * y[i];
  } else {
    for (std::size_t i = 0; i < d; ++i) s += a[i] * x[i] * y[i];
  }
  return s;
}

// grad += coef * (a ⊙ x)
inline void axpy_weighted(double* grad, double coef, const double* x, const double* a, std::size_t d) {
  if (a == nullptr) {
    for (std::size_t i = 0; i < d; ++i) grad[i] += coef * x[i];
  } else {
    for (std::size_t i = 0; i < d; ++i) grad[i] += coef * a[i] * x[i];
  }
}

inline void hadamard_axpy(double* grad, double coef, const double* x, const double* y, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) grad[i] += coef * x[i] * y[i];
}

}  // namespace

NsLossResult ns_loss(ScoreKind kind, std::span<const double> center, std::span<const double> context,
                     std::span<const std::span<const double>> negatives, std::span<const double> a) {
  const std::size_t d = center.size();
  if (context.size() != d) throw Error("ns_loss: embedding dimensions differ");
  for (const auto& n : negatives) {
    if (n.size() != d) throw Error("ns_loss: negative embedding has the wrong dimension");
  }
  const bool bilinear = kind == ScoreKind::bilinear_diag;
  if (bilinear && a.size() != d) throw Error("ns_loss: relation diagonal has the wrong dimension");
  const double* ap = bilinear ? a.data() : nullptr;

  NsLossResult r;
  r.grad_center.assign(d, 0.0);
  r.grad_context.assign(d, 0.0);
  r.grad_negatives.assign(negatives.size(), std::vector<double>(d, 0.0));
  if (bilinear) r.grad_relation.assign(d, 0.0);

  const double s_pos = weighted_dot(context.data(), center.data(), ap, d);
  r.loss = -log_sigmoid(s_pos);
  const double g_pos = sigmoid(s_pos) - 1.0;
  axpy_weighted(r.grad_context.data(), g_pos, center.data(), ap, d);
  axpy_weighted(r.grad_center.data(), g_pos, context.data(), ap, d);
  if (bilinear) hadamard_axpy(r.grad_relation.data(), g_pos, context.data(), center.data(), d);

  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const double s_neg = weighted_dot(negatives[k].data(), center.data(), ap, d);
    r.loss -= log_sigmoid(-s_neg);
    const double g_neg = sigmoid(s_neg);
    axpy_weighted(r.grad_negatives[k].data(), g_neg, center.data(), ap, d);
    axpy_weighted(r.grad_center.data(), g_neg, negatives[k].data(), ap, d);
    if (bilinear) hadamard_axpy(r.grad_relation.data(), g_neg, negatives[k].data(), center.data(), d);
  }
  if (!std::isfinite(r.loss)) throw Error("ns_loss: non-finite loss (learning rate too large?)");
  return r;
}

double ns_sgd_step(ScoreKind kind, std::span<double> center, std::span<double> context,
                   std::span<const std::span<double>> negatives, std::span<double> a, double learning_rate,
                   double weight, NsWorkspace& ws) {
  const std::size_t d = center.size();
  const bool bilinear = kind == ScoreKind::bilinear_diag;
  const double* ap = bilinear ? a.data() : nullptr;
  ws.center.assign(d, 0.0);
  ws.context.assign(d, 0.0);
  ws.negatives.assign(negatives.size() * d, 0.0);
  if (bilinear) ws.relation.assign(d, 0.0);

  const double s_pos = weighted_dot(context.data(), center.data(), ap, d);
  double loss = -log_sigmoid(s_pos);
  const double g_pos = weight * (sigmoid(s_pos) - 1.0);
  axpy_weighted(ws.context.data(), g_pos, center.data(), ap, d);
  axpy_weighted(ws.center.data(), g_pos, context.data(), ap, d);
  if (bilinear) hadamard_axpy(ws.relation.data(), g_pos, context.data(), center.data(), d);
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const double s_neg = weighted_dot(negatives[k].data(), center.data(), ap, d);
    loss -= log_sigmoid(-s_neg);
    const double g_neg = weight * sigmoid(s_neg);
    axpy_weighted(ws.negatives.data() + k * d, g_neg, center.data(), ap, d);
    axpy_weighted(ws.center.data(), g_neg, negatives[k].data(), ap, d);
    if (bilinear) hadamard_axpy(ws.relation.data(), g_neg, negatives[k].data(), center.data(), d);
  }

  for (std::size_t i = 0; i < d; ++i) context[i] -= learning_rate * ws.context[i];
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    for (std::size_t i = 0; i < d; ++i) negatives[k][i] -= learning_rate * ws.negatives[k * d + i];
  }
  for (std::size_t i = 0; i < d; ++i) center[i] -= learning_rate * ws.center[i];
  if (bilinear) {
    for (std::size_t i = 0; i < d; ++i) a[i] -= learning_rate * ws.relation[i];
  }
  return weight * loss;
}

// ---------------------------------------------------------------------------
// Exact objective and its smoothness decomposition

std::vector<PairWeight> edge_pair_weights(const HeteroGraph& g) {
  std::vector<PairWeight> out;
  out.reserve(g.num_links());
  for (const auto& link : g.links()) out.push_back({link.src, link.dst, link.type, link.weight});
  return out;
}

std::vector<PairWeight> aggregate_pair_weights(std::span<const ContextPair> pairs) {
  std::map<std::tuple<NodeId, NodeId, std::uint32_t>, double> counts;
  for (const auto& p : pairs) counts[{p.center, p.context, p.tag}] += 1.0;
  std::vector<PairWeight> out;
  out.reserve(counts.size());
  for (const auto& [key, w] : counts) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), w});
  return out;
}

namespace {

void check_exact_inputs(const HeteroGraph& g, std::span<const PairWeight> pairs, const EmbeddingTable& table,
                        const RelationParams* relations, ScoreKind kind) {
  if (g.num_nodes() > kExactObjectiveMaxNodes) {
    throw Error("exact objective is limited to graphs with at most " + std::to_string(kExactObjectiveMaxNodes) +
                " nodes");
  }
  if (table.num_nodes() != g.num_nodes()) throw Error("embedding table does not match the graph");
  if (kind == ScoreKind::bilinear_diag) {
    if (relations == nullptr) throw Error("bilinear score needs relation parameters");
    for (const auto& p : pairs) {
      if (p.tag >= relations->size()) throw Error("pair tag has no relation row");
    }
  }
}

double log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double objective_exact(const HeteroGraph& g, std::span<const PairWeight> pairs, const EmbeddingTable& table,
                       const RelationParams* relations, ScoreKind kind) {
  check_exact_inputs(g, pairs, table, relations, kind);
  double total = 0.0;
  std::vector<double> scores;
  for (const auto& p : pairs) {
    std::span<const double> a;
    if (kind == ScoreKind::bilinear_diag) a = relations->row(p.tag);
    const auto center = table.row(p.center);
    const double s_pos = score_pair(kind, table.row(p.context), center, a);
    const auto candidates = g.type_range(g.node_type(p.context));
    scores.clear();
    for (NodeId u = candidates.begin; u < candidates.end; ++u) scores.push_back(score_pair(kind, table.row(u), center, a));
    total += p.weight * (s_pos - log_sum_exp(scores));
  }
  return total;
}

SmoothnessTerms smoothness_decomposition(const HeteroGraph& g, std::span<const PairWeight> pairs,
                                         const EmbeddingTable& table, const RelationParams* relations,
                                         ScoreKind kind) {
  check_exact_inputs(g, pairs, table, relations, kind);
  const std::size_t d = table.width();
  auto mapped = [&](NodeId v, std::span<const double> sqrt_a) {
    std::vector<double> f(table.row(v).begin(), table.row(v).end());
    if (!sqrt_a.empty()) {
      for (std::size_t i = 0; i < d; ++i) f[i] *= sqrt_a[i];
    }
    return f;
  };
  auto squared_norm = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return s;
  };

  SmoothnessTerms terms;
  std::vector<double> sqrt_a;
  std::vector<double> logits;
  for (const auto& p : pairs) {
    sqrt_a.clear();
    if (kind == ScoreKind::bilinear_diag) {
      for (double ai : relations->row(p.tag)) {
        if (ai < 0.0) {
          throw Error("smoothness decomposition needs a nonnegative relation diagonal; use objective_exact for "
                      "real-valued scores");
        }
        sqrt_a.push_back(std::sqrt(ai));
      }
    }
    const auto fu = mapped(p.context, sqrt_a);
    const auto fv = mapped(p.center, sqrt_a);
    double dist = 0.0;
    for (std::size_t i = 0; i < d; ++i) dist += (fu[i] - fv[i]) * (fu[i] - fv[i]);
    terms.smoothness += 0.5 * p.weight * dist;
    terms.jr1 += 0.5 * p.weight * (squared_norm(fu) + squared_norm(fv));

    const auto candidates = g.type_range(g.node_type(p.context));
    logits.clear();
    for (NodeId u = candidates.begin; u < candidates.end; ++u) {
      const auto fc = mapped(u, sqrt_a);
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += fc[i] * fv[i];
      logits.push_back(dot);
    }
    terms.jr2 += p.weight * log_sum_exp(logits);
  }
  return terms;
}

// ---------------------------------------------------------------------------
// Trainer

struct ShallowTrainer::State {
  const HeteroGraph* graph = nullptr;
  ShallowModelSpec model;
  TrainSpec cfg;
  WalkConfig walk_cfg;

  EmbeddingTable emb;
  RelationParams rel;
  NoiseDistribution noise;
  EdgeSampler edges;

  std::vector<TaggedWalk> metapath_walks;
  std::vector<double> metapath_weights;
  std::vector<TypedWalk> homogeneous_walks;
  /// HIN2Vec: path tag of every forward (i, j) pair, flattened per walk.
  std::vector<std::vector<std::uint32_t>> walk_tags;
  /// Edge models: cumulative draw counts per link type.
  std::vector<std::size_t> draw_offsets;

  std::vector<Rng> rngs;
  std::size_t updates = 0;
  std::size_t epochs_done = 0;
  std::atomic<std::size_t> progress{0};
  std::vector<double> epoch_loss;

  std::size_t work_items() const {
    if (model.family == ShallowFamily::metapath2vec) return metapath_walks.size();
    if (model.family == ShallowFamily::hin2vec) return homogeneous_walks.size();
    return draw_offsets.back();
  }

  void ensure_rngs(std::size_t workers) {
    while (rngs.size() < workers) rngs.emplace_back(cfg.seed + rngs.size());
  }

  double process(std::size_t begin, std::size_t end, Rng& rng);
};

double ShallowTrainer::State::process(std::size_t begin, std::size_t end, Rng& rng) {
  const HeteroGraph& g = *graph;
  const std::size_t total = updates * cfg.epochs;
  const std::size_t b = cfg.negatives;
  NsWorkspace ws;
  std::vector<std::span<double>> negs;
  negs.reserve(b);
  std::size_t local = 0;
  std::size_t base = progress.load(std::memory_order_relaxed);
  double rate = scheduled_rate(cfg, static_cast<double>(base), static_cast<double>(total));
  double loss = 0.0;

  auto flush = [&]() {
    base = progress.fetch_add(local, std::memory_order_relaxed) + local;
    local = 0;
    rate = scheduled_rate(cfg, static_cast<double>(base), static_cast<double>(total));
  };

  // Negatives replace the context node; draws equal to the context are dropped.
  auto step = [&](NodeId center, NodeId context, std::uint32_t tag, double weight) {
    negs.clear();
    const TypeId t = g.node_type(context);
    for (std::size_t k = 0; k < b; ++k) {
      const NodeId n = noise.sample(t, rng);
      if (n != context) negs.push_back(emb.row(n));
    }
    std::span<double> a;
    if (model.score == ScoreKind::bilinear_diag) a = rel.row(tag);
    loss += ns_sgd_step(model.score, emb.row(center), emb.row(context), negs, a, rate, weight, ws);
    if (++local == 1024) flush();
  };

  for (std::size_t item = begin; item < end; ++item) {
    switch (model.family) {
      case ShallowFamily::metapath2vec: {
        const auto& walk = metapath_walks[item];
        const double w = metapath_weights[walk.tag];
        for_each_context_pair(std::span<const NodeId>(walk.nodes), walk_cfg.window,
                              [&](NodeId center, NodeId context) { step(center, context, walk.tag, w); });
        break;
      }
      case ShallowFamily::hin2vec: {
        const auto& nodes = homogeneous_walks[item].nodes;
        const auto& tags = walk_tags[item];
        std::size_t k = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          for (std::size_t j = i + 1; j < nodes.size() && j <= i + walk_cfg.window; ++j) {
            step(nodes[j], nodes[i], tags[k++], 1.0);
          }
        }
        break;
      }
      case ShallowFamily::pte:
      case ShallowFamily::heer: {
        const auto l = static_cast<LinkTypeId>(
            std::upper_bound(draw_offsets.begin(), draw_offsets.end(), item) - draw_offsets.begin() - 1);
        const Link& link = edges.sample(l, rng);
        NodeId center = link.src;
        NodeId context = link.dst;
        // PTE flips undirected links; HEER corrupts either endpoint.
        const bool flip = model.family == ShallowFamily::heer || !g.schema(l).directed;
        if (flip && std::bernoulli_distribution(0.5)(rng)) std::swap(center, context);
        step(center, context, l, 1.0);
        break;
      }
    }
  }
  flush();
  return loss;
}

ShallowTrainer::ShallowTrainer(const HeteroGraph& g, ShallowModelSpec model, TrainSpec cfg, WalkConfig walk_cfg)
    : state_(std::make_unique<State>()) {
  cfg.validate();
  auto& s = *state_;
  s.graph = &g;
  s.model = model;
  s.cfg = cfg;
  s.walk_cfg = std::move(walk_cfg);
  s.noise = NoiseDistribution(g);
  s.edges = EdgeSampler(g);

  Rng init_rng(cfg.seed);
  s.emb = EmbeddingTable(g.num_nodes(), cfg.dim);
  init_uniform(s.emb, init_rng);

  const int workers = cfg.workers();
  std::size_t relation_rows = 0;
  switch (model.family) {
    case ShallowFamily::metapath2vec: {
      if (s.walk_cfg.metapaths.empty()) throw Error("metapath2vec needs at least one meta-path");
      s.metapath_walks = generate_metapath_walks(g, s.walk_cfg, workers);
      std::vector<std::size_t> counts(s.walk_cfg.metapaths.size(), 0);
      for (const auto& w : s.metapath_walks) {
        const std::size_t c = context_pair_count(w.nodes.size(), s.walk_cfg.window);
        counts[w.tag] += c;
        s.updates += c;
      }
      if (s.updates == 0) throw Error("no training pairs: every meta-path walk is a dead end");
      s.metapath_weights = metapath_weights_from_counts(counts);
      break;
    }
    case ShallowFamily::hin2vec: {
      s.homogeneous_walks = generate_homogeneous_walks(g, s.walk_cfg, workers);
      std::map<std::vector<std::uint32_t>, std::uint32_t> paths;
      std::vector<std::uint32_t> key;
      for (const auto& walk : s.homogeneous_walks) {
        std::vector<std::uint32_t> tags;
        const auto& nodes = walk.nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          key.assign({g.node_type(nodes[i])});
          for (std::size_t j = i + 1; j < nodes.size() && j <= i + s.walk_cfg.window; ++j) {
            key.push_back(walk.steps[j - 1]);
            key.push_back(g.node_type(nodes[j]));
            auto [it, fresh] = paths.try_emplace(key, static_cast<std::uint32_t>(paths.size()));
            tags.push_back(it->second);
          }
        }
        s.updates += tags.size();
        s.walk_tags.push_back(std::move(tags));
      }
      if (s.updates == 0) throw Error("no training pairs: the graph has no links");
      relation_rows = paths.size();
      s.rel.names.resize(paths.size());
      for (const auto& [k, id] : paths) {
        std::string name = std::to_string(g.original_type(k[0]));
        for (std::size_t i = 1; i + 1 < k.size(); i += 2) {
          name += "-" + std::to_string(g.schema(k[i]).original_id) + "-" + std::to_string(g.original_type(k[i + 1]));
        }
        s.rel.names[id] = name;
      }
      break;
    }
    case ShallowFamily::pte:
    case ShallowFamily::heer: {
      s.draw_offsets.assign(1, 0);
      for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
        const auto n = g.links_of_type(l).size();
        const auto draws = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * cfg.edge_samples_per_link));
        s.draw_offsets.push_back(s.draw_offsets.back() + draws);
      }
      s.updates = s.draw_offsets.back();
      if (s.updates == 0) throw Error("no training pairs: the graph has no links");
      if (model.family == ShallowFamily::heer) {
        relation_rows = g.num_link_types();
        for (const auto& schema : g.schemas()) s.rel.names.push_back(std::to_string(schema.original_id));
      }
      break;
    }
  }
  if (model.score == ScoreKind::bilinear_diag) {
    s.rel.dim = cfg.dim;
    s.rel.values = Matrix(relation_rows, cfg.dim, 1.0);
  }
}

ShallowTrainer::~ShallowTrainer() = default;
ShallowTrainer::ShallowTrainer(ShallowTrainer&&) noexcept = default;
ShallowTrainer& ShallowTrainer::operator=(ShallowTrainer&&) noexcept = default;

double ShallowTrainer::run_epoch_serial() {
  auto& s = *state_;
  s.ensure_rngs(1);
  const double loss = s.process(0, s.work_items(), s.rngs[0]);
  ++s.epochs_done;
  s.epoch_loss.push_back(loss);
  return loss;
}

double ShallowTrainer::run_epoch_parallel(int threads) {
  auto& s = *state_;
  const auto workers = static_cast<std::size_t>(std::max(threads, 1));
  s.ensure_rngs(workers);
  const std::size_t n = s.work_items();
  double loss = 0.0;
#pragma omp parallel for schedule(static, 1) num_threads(static_cast<int>(workers)) reduction(+ : loss)
  for (std::size_t w = 0; w < workers; ++w) {
    loss += s.process(w * n / workers, (w + 1) * n / workers, s.rngs[w]);
  }
  ++s.epochs_done;
  s.epoch_loss.push_back(loss);
  return loss;
}

std::size_t ShallowTrainer::updates_per_epoch() const { return state_->updates; }

const EmbeddingTable& ShallowTrainer::embeddings() const { return state_->emb; }

ShallowResult ShallowTrainer::take_result() {
  auto& s = *state_;
  return {std::move(s.emb), std::move(s.rel), std::move(s.metapath_weights), std::move(s.epoch_loss)};
}

ShallowResult train_shallow(const HeteroGraph& g, const ShallowModelSpec& model, const TrainSpec& cfg,
                            const WalkConfig& walk_cfg) {
  ShallowTrainer trainer(g, model, cfg, walk_cfg);
  const int workers = cfg.workers();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (workers == 1) {
      trainer.run_epoch_serial();
    } else {
      trainer.run_epoch_parallel(workers);
    }
    if (!trainer.embeddings().values.all_finite()) {
      throw Error("non-finite embeddings after epoch " + std::to_string(epoch + 1) + "; lower the learning rate");
    }
  }
  return trainer.take_result();
}

}  // namespace hne
