#include "hne/relational.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <numbers>
#include <numeric>

namespace hne {

std::string to_string(RelationKind kind) {
  switch (kind) {
    case RelationKind::transe: return "transe";
    case RelationKind::distmult: return "distmult";
    case RelationKind::complex: return "complex";
    case RelationKind::rotate: return "rotate";
  }
  return "unknown";
}

std::optional<RelationKind> parse_relation_kind(const std::string& name) {
  for (auto kind : {RelationKind::transe, RelationKind::distmult, RelationKind::complex, RelationKind::rotate}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

bool is_complex(RelationKind kind) { return kind == RelationKind::complex || kind == RelationKind::rotate; }

LossMode default_loss_mode(RelationKind kind) {
  return kind == RelationKind::transe || kind == RelationKind::rotate ? LossMode::margin : LossMode::log_sigmoid;
}

namespace {

constexpr double kUnitModulusTolerance = 1e-6;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

void add_to(std::span<double> dst, std::size_t i, double x) {
  if (!dst.empty()) dst[i] += x;
}

}  // namespace

double triplet_score_grad(RelationKind kind, std::span<const double> h, std::span<const double> r,
                          std::span<const double> t, int p, double scale, std::span<double> gh,
                          std::span<double> gr, std::span<double> gt) {
  const std::size_t n = h.size();
  double s = 0.0;
  switch (kind) {
    case RelationKind::transe: {
      if (p == 1) {
        for (std::size_t i = 0; i < n; ++i) {
          const double res = h[i] + r[i] - t[i];
          s -= std::abs(res);
          const double g = res > 0.0 ? -scale : (res < 0.0 ? scale : 0.0);
          add_to(gh, i, g);
          add_to(gr, i, g);
          add_to(gt, i, -g);
        }
        return s;
      }
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double res = h[i] + r[i] - t[i];
        sq += res * res;
      }
      const double norm = std::sqrt(sq);
      if (norm > 0.0 && (!gh.empty() || !gr.empty() || !gt.empty())) {
        for (std::size_t i = 0; i < n; ++i) {
          const double g = -scale * (h[i] + r[i] - t[i]) / norm;
          add_to(gh, i, g);
          add_to(gr, i, g);
          add_to(gt, i, -g);
        }
      }
      return -norm;
    }
    case RelationKind::distmult: {
      for (std::size_t i = 0; i < n; ++i) {
        s += r[i] * (h[i] * t[i]);
        add_to(gh, i, scale * r[i] * t[i]);
        add_to(gt, i, scale * r[i] * h[i]);
        add_to(gr, i, scale * h[i] * t[i]);
      }
      return s;
    }
    case RelationKind::complex: {
      for (std::size_t k = 0; k + 1 < n; k += 2) {
        const double a = h[k], b = h[k + 1];
        const double c = r[k], d = r[k + 1];
        const double x = t[k], y = t[k + 1];
        s += (a * c - b * d) * x + (a * d + b * c) * y;
        add_to(gh, k, scale * (c * x + d * y));
        add_to(gh, k + 1, scale * (c * y - d * x));
        add_to(gr, k, scale * (a * x + b * y));
        add_to(gr, k + 1, scale * (a * y - b * x));
        add_to(gt, k, scale * (a * c - b * d));
        add_to(gt, k + 1, scale * (a * d + b * c));
      }
      return s;
    }
    case RelationKind::rotate: {
      for (std::size_t k = 0; k + 1 < n; k += 2) {
        const double a = h[k], b = h[k + 1];
        const double c = r[k], d = r[k + 1];
        const double x = t[k], y = t[k + 1];
        const double wr = a * c - b * d - x;
        const double wi = a * d + b * c - y;
        s -= wr * wr + wi * wi;
        add_to(gh, k, -2.0 * scale * (wr * c + wi * d));
        add_to(gh, k + 1, -2.0 * scale * (wi * c - wr * d));
        add_to(gr, k, -2.0 * scale * (wr * a + wi * b));
        add_to(gr, k + 1, -2.0 * scale * (wi * a - wr * b));
        add_to(gt, k, 2.0 * scale * wr);
        add_to(gt, k + 1, 2.0 * scale * wi);
      }
      return s;
    }
  }
  return s;
}

double score_triplet(RelationKind kind, std::span<const double> head, std::span<const double> relation,
                     std::span<const double> tail, int p) {
  if (head.size() != relation.size() || head.size() != tail.size()) {
    throw Error("score_triplet: head, relation and tail dimensions differ");
  }
  if (is_complex(kind) && head.size() % 2 != 0) throw Error("score_triplet: complex vectors need an even length");
  if (kind == RelationKind::transe && p != 1 && p != 2) throw Error("score_triplet: TransE norm order must be 1 or 2");
  if (kind == RelationKind::rotate) {
    for (std::size_t k = 0; k < relation.size(); k += 2) {
      const double modulus = std::hypot(relation[k], relation[k + 1]);
      if (std::abs(modulus - 1.0) > kUnitModulusTolerance) {
        throw Error("score_triplet: RotatE relation entry has modulus " + std::to_string(modulus) +
                    "; apply constraints first");
      }
    }
  }
  return triplet_score_grad(kind, head, relation, tail, p, 0.0, {}, {}, {});
}

double margin_loss(double s_pos, double s_neg, double gamma) { return std::max(0.0, gamma - s_pos + s_neg); }

ScoreGradient margin_loss_grad(double s_pos, double s_neg, double gamma) {
  if (gamma - s_pos + s_neg > 0.0) return {-1.0, 1.0};
  return {0.0, 0.0};
}

double log_sigmoid_pair_loss(double s_pos, double s_neg) { return -log_sigmoid(s_pos) - log_sigmoid(-s_neg); }

ScoreGradient log_sigmoid_pair_loss_grad(double s_pos, double s_neg) {
  return {sigmoid(s_pos) - 1.0, sigmoid(s_neg)};
}

TripletLossResult triplet_loss(RelationKind kind, LossMode mode, const TripletVectors& pos,
                               const TripletVectors& neg, double gamma, int p) {
  const std::size_t n = pos.head.size();
  for (auto v : {pos.relation, pos.tail, neg.head, neg.relation, neg.tail}) {
    if (v.size() != n) throw Error("triplet_loss: vector dimensions differ");
  }
  TripletLossResult r;
  for (auto* g : {&r.pos_head, &r.pos_relation, &r.pos_tail, &r.neg_head, &r.neg_relation, &r.neg_tail}) {
    g->assign(n, 0.0);
  }
  const double s_pos = triplet_score_grad(kind, pos.head, pos.relation, pos.tail, p, 0.0, {}, {}, {});
  const double s_neg = triplet_score_grad(kind, neg.head, neg.relation, neg.tail, p, 0.0, {}, {}, {});
  ScoreGradient g;
  if (mode == LossMode::margin) {
    r.loss = margin_loss(s_pos, s_neg, gamma);
    g = margin_loss_grad(s_pos, s_neg, gamma);
  } else {
    r.loss = log_sigmoid_pair_loss(s_pos, s_neg);
    g = log_sigmoid_pair_loss_grad(s_pos, s_neg);
  }
  if (g.d_pos != 0.0) {
    triplet_score_grad(kind, pos.head, pos.relation, pos.tail, p, g.d_pos, r.pos_head, r.pos_relation, r.pos_tail);
  }
  if (g.d_neg != 0.0) {
    triplet_score_grad(kind, neg.head, neg.relation, neg.tail, p, g.d_neg, r.neg_head, r.neg_relation, r.neg_tail);
  }
  return r;
}

Triplet corrupt_triplet(const Triplet& t, const HeteroGraph& g, const NoiseDistribution& noise, Rng& rng) {
  const bool replace_head = std::bernoulli_distribution(0.5)(rng);
  const TypeId type = g.node_type(replace_head ? t.head : t.tail);
  Triplet out = t;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const NodeId n = noise.sample(type, rng);
    out = t;
    (replace_head ? out.head : out.tail) = n;
    if (!g.has_link(out.head, out.tail, out.relation)) break;
  }
  return out;
}

void project_node_row(RelationKind kind, std::span<double> row) {
  if (kind == RelationKind::rotate) return;
  double sq = 0.0;
  for (double x : row) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm == 0.0) return;
  if (kind == RelationKind::transe || norm > 1.0) {
    for (double& x : row) x /= norm;
  }
}

void project_relation_row(RelationKind kind, std::span<double> row) {
  if (kind != RelationKind::rotate) return;
  for (std::size_t k = 0; k + 1 < row.size(); k += 2) {
    const double modulus = std::hypot(row[k], row[k + 1]);
    if (modulus == 0.0) continue;
    row[k] /= modulus;
    row[k + 1] /= modulus;
  }
}

void apply_constraints(RelationKind kind, EmbeddingTable& nodes, RelationParams& relations) {
  for (NodeId v = 0; v < nodes.num_nodes(); ++v) project_node_row(kind, nodes.row(v));
  for (std::size_t l = 0; l < relations.size(); ++l) project_relation_row(kind, relations.row(l));
}

// ---------------------------------------------------------------------------
// Trainer

struct RelationalTrainer::State {
  const HeteroGraph* graph = nullptr;
  RelationKind kind = RelationKind::transe;
  TrainSpec cfg;
  LossMode mode = LossMode::margin;
  EmbeddingTable emb;
  RelationParams rel;
  NoiseDistribution noise;
  std::vector<Triplet> triplets;
  std::vector<std::size_t> order;
  Rng order_rng;
  std::vector<Rng> rngs;
  std::size_t epochs_done = 0;
  std::atomic<std::size_t> progress{0};
  std::vector<double> epoch_loss;

  void ensure_rngs(std::size_t workers) {
    while (rngs.size() < workers) rngs.emplace_back(cfg.seed + 1 + rngs.size());
  }

  void shuffle_order() {
    order.resize(triplets.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), order_rng);
  }

  double process(std::size_t begin, std::size_t end, Rng& rng);
};

double RelationalTrainer::State::process(std::size_t begin, std::size_t end, Rng& rng) {
  const HeteroGraph& g = *graph;
  const std::size_t w = emb.width();
  const double total = static_cast<double>(triplets.size() * cfg.epochs);
  std::vector<double> gh(w), gr(w), gt(w), ngh(w), ngr(w), ngt(w);
  double loss = 0.0;
  std::size_t local = 0;
  std::size_t base = progress.load(std::memory_order_relaxed);
  double rate = scheduled_rate(cfg, static_cast<double>(base), total);

  for (std::size_t i = begin; i < end; ++i) {
    const Triplet pos = triplets[order[i]];
    const Triplet neg = corrupt_triplet(pos, g, noise, rng);
    auto h = emb.row(pos.head), t = emb.row(pos.tail), r = rel.row(pos.relation);
    auto nh = emb.row(neg.head), nt = emb.row(neg.tail);

    const double s_pos = triplet_score_grad(kind, h, r, t, cfg.norm_p, 0.0, {}, {}, {});
    const double s_neg = triplet_score_grad(kind, nh, r, nt, cfg.norm_p, 0.0, {}, {}, {});
    ScoreGradient sg;
    if (mode == LossMode::margin) {
      loss += margin_loss(s_pos, s_neg, cfg.margin);
      sg = margin_loss_grad(s_pos, s_neg, cfg.margin);
    } else {
      loss += log_sigmoid_pair_loss(s_pos, s_neg);
      sg = log_sigmoid_pair_loss_grad(s_pos, s_neg);
    }
    if (sg.d_pos != 0.0 || sg.d_neg != 0.0) {
      for (auto* buf : {&gh, &gr, &gt, &ngh, &ngr, &ngt}) std::fill(buf->begin(), buf->end(), 0.0);
      triplet_score_grad(kind, h, r, t, cfg.norm_p, sg.d_pos, gh, gr, gt);
      triplet_score_grad(kind, nh, r, nt, cfg.norm_p, sg.d_neg, ngh, ngr, ngt);
      for (std::size_t k = 0; k < w; ++k) {
        h[k] -= rate * gh[k];
        t[k] -= rate * gt[k];
        nh[k] -= rate * ngh[k];
        nt[k] -= rate * ngt[k];
        r[k] -= rate * (gr[k] + ngr[k]);
      }
      project_node_row(kind, h);
      project_node_row(kind, t);
      project_node_row(kind, nh);
      project_node_row(kind, nt);
      project_relation_row(kind, r);
    }
    if (++local == 1024) {
      base = progress.fetch_add(local, std::memory_order_relaxed) + local;
      local = 0;
      rate = scheduled_rate(cfg, static_cast<double>(base), total);
    }
  }
  progress.fetch_add(local, std::memory_order_relaxed);
  return loss;
}

RelationalTrainer::RelationalTrainer(const HeteroGraph& g, RelationKind kind, TrainSpec cfg)
    : state_(std::make_unique<State>()) {
  cfg.validate();
  if (g.num_links() == 0) throw Error("relation learning needs at least one link");
  auto& s = *state_;
  s.graph = &g;
  s.kind = kind;
  s.cfg = cfg;
  s.mode = cfg.loss_mode_set ? cfg.loss_mode : default_loss_mode(kind);
  s.noise = NoiseDistribution(g);
  s.order_rng.seed(cfg.seed);
  for (const auto& link : g.links()) s.triplets.push_back({link.src, link.type, link.dst});

  const bool cplx = is_complex(kind);
  Rng init(cfg.seed);
  s.emb = EmbeddingTable(g.num_nodes(), cfg.dim, cplx);
  s.rel.dim = cfg.dim;
  s.rel.complex = cplx;
  s.rel.values = Matrix(g.num_link_types(), s.emb.width());
  for (const auto& schema : g.schemas()) s.rel.names.push_back(std::to_string(schema.original_id));

  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (double& x : s.emb.values.data()) x = uniform(init);
  if (kind == RelationKind::rotate) {
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    for (std::size_t l = 0; l < s.rel.size(); ++l) {
      auto row = s.rel.row(l);
      for (std::size_t k = 0; k + 1 < row.size(); k += 2) {
        const double theta = phase(init);
        row[k] = std::cos(theta);
        row[k + 1] = std::sin(theta);
      }
    }
  } else {
    for (double& x : s.rel.values.data()) x = uniform(init);
    if (kind == RelationKind::transe) {
      for (std::size_t l = 0; l < s.rel.size(); ++l) {
        auto row = s.rel.row(l);
        double sq = 0.0;
        for (double x : row) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm > 0.0) {
          for (double& x : row) x /= norm;
        }
      }
    }
  }
  apply_constraints(kind, s.emb, s.rel);
}

RelationalTrainer::~RelationalTrainer() = default;
RelationalTrainer::RelationalTrainer(RelationalTrainer&&) noexcept = default;
RelationalTrainer& RelationalTrainer::operator=(RelationalTrainer&&) noexcept = default;

double RelationalTrainer::run_epoch_serial() {
  auto& s = *state_;
  s.ensure_rngs(1);
  s.shuffle_order();
  const double loss = s.process(0, s.triplets.size(), s.rngs[0]);
  ++s.epochs_done;
  s.epoch_loss.push_back(loss);
  return loss;
}

double RelationalTrainer::run_epoch_parallel(int threads) {
  auto& s = *state_;
  const auto workers = static_cast<std::size_t>(std::max(threads, 1));
  s.ensure_rngs(workers);
  s.shuffle_order();
  const std::size_t n = s.triplets.size();
  double loss = 0.0;
#pragma omp parallel for schedule(static, 1) num_threads(static_cast<int>(workers)) reduction(+ : loss)
  for (std::size_t w = 0; w < workers; ++w) {
    loss += s.process(w * n / workers, (w + 1) * n / workers, s.rngs[w]);
  }
  ++s.epochs_done;
  s.epoch_loss.push_back(loss);
  return loss;
}

double RelationalTrainer::evaluate_loss(std::uint64_t seed) const {
  const auto& s = *state_;
  Rng rng(seed);
  double total = 0.0;
  for (const auto& pos : s.triplets) {
    const Triplet neg = corrupt_triplet(pos, *s.graph, s.noise, rng);
    const auto r = s.rel.row(pos.relation);
    const double sp = triplet_score_grad(s.kind, s.emb.row(pos.head), r, s.emb.row(pos.tail), s.cfg.norm_p, 0.0, {},
                                         {}, {});
    const double sn = triplet_score_grad(s.kind, s.emb.row(neg.head), r, s.emb.row(neg.tail), s.cfg.norm_p, 0.0, {},
                                         {}, {});
    total += s.mode == LossMode::margin ? margin_loss(sp, sn, s.cfg.margin) : log_sigmoid_pair_loss(sp, sn);
  }
  return total / static_cast<double>(s.triplets.size());
}

const EmbeddingTable& RelationalTrainer::embeddings() const { return state_->emb; }
const RelationParams& RelationalTrainer::relations() const { return state_->rel; }

RelationalResult RelationalTrainer::take_result() {
  auto& s = *state_;
  return {std::move(s.emb), std::move(s.rel), std::move(s.epoch_loss)};
}

RelationalResult train_relational(const HeteroGraph& g, RelationKind kind, const TrainSpec& cfg) {
  RelationalTrainer trainer(g, kind, cfg);
  const int workers = cfg.workers();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (workers == 1) {
      trainer.run_epoch_serial();
    } else {
      trainer.run_epoch_parallel(workers);
    }
    if (!trainer.embeddings().values.all_finite() || !trainer.relations().values.all_finite()) {
      throw Error("non-finite parameters after epoch " + std::to_string(epoch + 1) + "; lower the learning rate");
    }
  }
  return trainer.take_result();
}

}  // namespace hne
