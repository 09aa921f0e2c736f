#include "hne/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace hne {

namespace {

using json = nlohmann::json;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const std::uint64_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

bool contains(const LabelSet& set, LabelId x) { return std::find(set.begin(), set.end(), x) != set.end(); }

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows, std::size_t width) {
  Matrix m(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

}  // namespace

std::vector<double> LinearClassifier::margins(std::span<const double> x) const {
  std::vector<double> out(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) out[c] = margin(x, c);
  return out;
}

double LinearClassifier::margin(std::span<const double> x, std::size_t class_index) const {
  if (x.size() != mean.size()) throw Error("classifier input has the wrong width");
  auto w = weights.row(class_index);
  double s = bias[class_index];
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * (x[j] - mean[j]) / scale[j];
  return s;
}

LabelSet LinearClassifier::predict(std::span<const double> x) const {
  const auto m = margins(x);
  const auto best = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
  if (!multi_label) return {classes[best]};
  LabelSet out;
  for (std::size_t c = 0; c < m.size(); ++c) {
    if (m[c] > 0.0) out.push_back(classes[c]);
  }
  if (out.empty()) out.push_back(classes[best]);
  return out;
}

LinearClassifier train_linear_classifier(const Matrix& x, std::span<const LabelSet> y, const ClassifierConfig& cfg) {
  if (x.rows() != y.size()) throw Error("feature rows and labels differ in length");
  if (x.rows() == 0) throw Error("classifier needs training rows");
  if (!(cfg.lambda > 0.0) || !(cfg.learning_rate > 0.0)) throw Error("classifier needs positive lambda and rate");
  LinearClassifier model;
  std::set<LabelId> classes;
  for (const auto& labels : y) {
    if (labels.empty()) throw Error("every training row needs a label");
    if (labels.size() > 1) model.multi_label = true;
    classes.insert(labels.begin(), labels.end());
  }
  if (classes.size() < 2) throw Error("classifier needs at least two classes");
  model.classes.assign(classes.begin(), classes.end());

  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  model.mean.assign(d, 0.0);
  model.scale.assign(d, 1.0);
  if (cfg.standardize) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) model.mean[j] += x(i, j);
    }
    for (auto& m : model.mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) var[j] += (x(i, j) - model.mean[j]) * (x(i, j) - model.mean[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(n));
      model.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
  }
  Matrix z(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z(i, j) = (x(i, j) - model.mean[j]) / model.scale[j];
  }

  const std::size_t k = model.classes.size();
  model.weights = Matrix(k, d);
  model.bias.assign(k, 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = contains(y[i], model.classes[c]) ? 1.0 : -1.0;
    auto w = model.weights.row(c);
    double& b = model.bias[c];
    Rng rng(cfg.seed + c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        const double eta = cfg.learning_rate / (1.0 + cfg.lambda * cfg.learning_rate * static_cast<double>(t++));
        auto row = z.row(i);
        const double m = target[i] * (dot(w, row) + b);
        const double shrink = 1.0 - eta * cfg.lambda;
        for (auto& wj : w) wj *= shrink;
        if (m < 1.0) {
          for (std::size_t j = 0; j < d; ++j) w[j] += eta * target[i] * row[j];
          b += eta * target[i];
        }
      }
    }
  }
  return model;
}

F1Scores f1_scores(std::span<const LabelSet> pred, std::span<const LabelSet> gold) {
  if (pred.size() != gold.size()) throw Error("predictions and gold labels differ in length");
  if (pred.empty()) throw Error("F1 of an empty prediction set");
  std::map<LabelId, std::array<std::uint64_t, 3>> counts;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (LabelId p : pred[i]) counts[p][contains(gold[i], p) ? 0 : 1]++;
    for (LabelId g : gold[i]) {
      if (!contains(pred[i], g)) counts[g][2]++;
    }
  }
  if (counts.empty()) throw Error("F1 with no labels in predictions or gold");
  F1Scores out;
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& [label, c] : counts) {
    out.macro += f1(c[0], c[1], c[2]);
    tp += c[0];
    fp += c[1];
    fn += c[2];
  }
  out.macro /= static_cast<double>(counts.size());
  out.micro = f1(tp, fp, fn);
  return out;
}

std::vector<double> hadamard_features(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("Hadamard features need equal dimensions");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  std::vector<std::pair<double, int>> items(scores.size());
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("AUC labels must be 0 or 1");
    if (std::isnan(scores[i])) throw Error("AUC score is NaN");
    items[i] = {scores[i], labels[i]};
    pos += static_cast<std::uint64_t>(labels[i]);
  }
  const std::uint64_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw Error("AUC needs both positive and negative examples");
  std::sort(items.begin(), items.end());
  // Twice the Mann-Whitney count: 2 per won pair, 1 per tie.
  std::uint64_t twice = 0;
  std::uint64_t neg_below = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::uint64_t p = 0, q = 0;
    while (j < items.size() && items[j].first == items[i].first) {
      (items[j].second ? p : q)++;
      ++j;
    }
    twice += p * (2 * neg_below + q);
    neg_below += q;
    i = j;
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double mrr(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw Error("MRR of an empty task list");
  double s = 0.0;
  for (std::size_t r : ranks) {
    if (r == 0) throw Error("ranks start at 1");
    s += 1.0 / static_cast<double>(r);
  }
  return s / static_cast<double>(ranks.size());
}

std::optional<std::size_t> rank_of_best_true(std::span<const NodeId> candidates, std::span<const double> scores,
                                             std::span<const NodeId> truth) {
  if (candidates.size() != scores.size()) throw Error("candidates and scores differ in length");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (std::find(truth.begin(), truth.end(), candidates[i]) == truth.end()) continue;
    if (!best || scores[i] > scores[*best] || (scores[i] == scores[*best] && candidates[i] < candidates[*best])) {
      best = i;
    }
  }
  if (!best) return std::nullopt;
  std::size_t rank = 1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (scores[i] > scores[*best] || (scores[i] == scores[*best] && candidates[i] < candidates[*best])) ++rank;
  }
  return rank;
}

double EvalReport::mean(const std::string& metric) const {
  const auto& v = metrics.at(metric);
  if (v.empty()) throw Error("metric " + metric + " has no values");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double EvalReport::stddev(const std::string& metric) const {
  const auto& v = metrics.at(metric);
  if (v.size() < 2) return 0.0;
  const double m = mean(metric);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["task"] = report.task;
  j["method"] = report.method;
  j["seeds"] = report.seeds;
  j["config_digest"] = report.config_digest;
  j["metadata"] = report.metadata;
  json metrics = json::object();
  for (const auto& [name, values] : report.metrics) {
    metrics[name] = {{"repeats", values}, {"mean", report.mean(name)}, {"std", report.stddev(name)}};
  }
  j["metrics"] = metrics;
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  EvalReport r;
  try {
    const json j = json::parse(text);
    r.task = j.at("task").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& [name, m] : j.at("metrics").items()) r.metrics[name] = m.at("repeats").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string report_to_text(const EvalReport& report) {
  std::string out = "task: " + report.task + "\nmethod: " + report.method + "\n";
  out += "seeds:";
  for (auto s : report.seeds) out += " " + std::to_string(s);
  out += "\n";
  std::size_t width = 6;
  for (const auto& [name, v] : report.metrics) width = std::max(width, name.size());
  for (const auto& [name, v] : report.metrics) {
    out += name + std::string(width - name.size() + 2, ' ') + format_number(report.mean(name)) + " +- " +
           format_number(report.stddev(name)) + "  [";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_number(v[i]);
    out += "]\n";
  }
  for (const auto& [k, v] : report.metadata) out += k + ": " + v + "\n";
  return out;
}

EvalReport run_node_classification(const EmbeddingTable& emb, std::span<const NodeId> nodes,
                                   std::span<const LabelSet> labels, std::uint64_t seed,
                                   const EvalOptions& options) {
  if (nodes.size() != labels.size()) throw Error("nodes and labels differ in length");
  if (nodes.size() < 10) throw Error("node classification needs at least 10 labeled nodes");
  if (options.repeats == 0) throw Error("need at least one repeat");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) throw Error("train fraction must be in (0, 1)");
  for (NodeId v : nodes) {
    if (v >= emb.num_nodes()) throw Error("labeled node outside the embedding table");
  }

  bool multi = false;
  std::map<LabelId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) throw Error("labeled node without labels");
    if (labels[i].size() > 1) multi = true;
    by_class[labels[i].front()].push_back(i);
  }
  std::vector<std::vector<std::size_t>> strata;
  std::vector<std::size_t> pooled;
  bool fallback = multi;
  if (multi) {
    pooled.resize(labels.size());
    std::iota(pooled.begin(), pooled.end(), std::size_t{0});
  } else {
    for (auto& [label, members] : by_class) {
      if (members.size() < 5) {
        pooled.insert(pooled.end(), members.begin(), members.end());
        fallback = true;
      } else {
        strata.push_back(members);
      }
    }
  }
  if (!pooled.empty()) strata.push_back(pooled);

  const std::size_t width = emb.width();
  std::vector<F1Scores> scores(options.repeats);
  std::vector<std::string> errors(options.repeats);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(options.threads, 1))
  for (std::size_t r = 0; r < options.repeats; ++r) {
    try {
      Rng rng(seed + r);
      std::vector<std::size_t> train, test;
      for (auto members : strata) {
        std::shuffle(members.begin(), members.end(), rng);
        auto cut = static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(members.size())));
        cut = std::clamp<std::size_t>(cut, 1, members.size() - 1);
        train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(cut));
        test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(cut), members.end());
      }
      std::vector<std::vector<double>> rows;
      std::vector<LabelSet> y;
      for (std::size_t i : train) {
        rows.push_back(feature_vector(emb, nodes[i]));
        y.push_back(labels[i]);
      }
      ClassifierConfig cc = options.classifier;
      cc.seed = seed + r;
      const auto model = train_linear_classifier(rows_to_matrix(rows, width), y, cc);
      std::vector<LabelSet> pred, gold;
      for (std::size_t i : test) {
        pred.push_back(model.predict(feature_vector(emb, nodes[i])));
        gold.push_back(labels[i]);
      }
      scores[r] = f1_scores(pred, gold);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }

  EvalReport report;
  report.task = "node_classification";
  for (std::size_t r = 0; r < options.repeats; ++r) {
    report.seeds.push_back(seed + r);
    report.metrics["macro_f1"].push_back(scores[r].macro);
    report.metrics["micro_f1"].push_back(scores[r].micro);
  }
  report.metadata["labeled_nodes"] = std::to_string(nodes.size());
  report.metadata["classes"] = std::to_string(by_class.size());
  report.metadata["classifier"] = "one-vs-rest hinge-loss SGD, L2";
  report.metadata["stratification_fallback"] = fallback ? "true" : "false";
  return report;
}

EvalReport run_node_classification(const EmbeddingTable& emb, const HeteroGraph& g, std::uint64_t seed,
                                   const EvalOptions& options) {
  if (!g.has_labels()) throw Error("graph has no node labels");
  std::vector<NodeId> nodes;
  std::vector<LabelSet> labels;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    auto l = g.labels(v);
    if (l.empty()) continue;
    nodes.push_back(v);
    labels.emplace_back(l.begin(), l.end());
  }
  return run_node_classification(emb, nodes, labels, seed, options);
}

std::pair<NodeId, NodeId> sample_non_edge(const HeteroGraph& g, LinkTypeId l, Rng& rng) {
  const auto& s = g.schema(l);
  const auto src = g.type_range(s.src_type);
  const auto dst = g.type_range(s.dst_type);
  std::uniform_int_distribution<NodeId> pick_src(src.begin, src.end - 1);
  std::uniform_int_distribution<NodeId> pick_dst(dst.begin, dst.end - 1);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const NodeId u = pick_src(rng);
    const NodeId v = pick_dst(rng);
    if (u != v && !g.has_link(u, v, l)) return {u, v};
  }
  throw Error("could not find a non-edge for link type " + std::to_string(g.schema(l).original_id));
}

EvalReport run_link_prediction(const EmbeddingTable& emb, const LinkSplit& split, const HeteroGraph& full,
                               std::uint64_t seed, const EvalOptions& options) {
  if (split.held_out.empty()) throw Error("link prediction needs held-out links");
  if (options.repeats == 0) throw Error("need at least one repeat");
  if (emb.num_nodes() != full.num_nodes() || split.train.num_nodes() != full.num_nodes()) {
    throw Error("split, graph and embeddings disagree on the node count");
  }
  for (const auto& h : split.held_out) {
    if (!full.has_link(h.src, h.dst, h.type)) throw Error("held-out link missing from the full graph");
  }
  const HeteroGraph& train = split.train;
  const std::size_t width = emb.width();
  auto pair_feature = [&](NodeId u, NodeId v) { return hadamard_features(emb.row(u), emb.row(v)); };

  // Ranking queries: held-out targets per source, candidates without train neighbors.
  std::map<NodeId, std::vector<NodeId>> truth;
  for (const auto& h : split.held_out) truth[h.src].push_back(h.dst);
  std::vector<std::pair<NodeId, std::vector<NodeId>>> queries;
  for (auto& [u, targets] : truth) {
    std::unordered_set<NodeId> known;
    for (LinkTypeId l = 0; l < train.num_link_types(); ++l) {
      for (const auto& nb : train.neighbors(u, l)) known.insert(nb.node);
      for (const auto& nb : train.in_neighbors(u, l)) known.insert(nb.node);
    }
    for (NodeId t : targets) known.erase(t);
    std::vector<NodeId> candidates;
    for (NodeId c : two_hop_candidates(full, u)) {
      if (!known.contains(c)) candidates.push_back(c);
    }
    queries.emplace_back(u, std::move(candidates));
  }

  struct Outcome {
    double auc = 0.0;
    double mrr = 0.0;
  };
  std::vector<Outcome> outcomes(options.repeats);
  std::vector<std::string> errors(options.repeats);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(options.threads, 1))
  for (std::size_t r = 0; r < options.repeats; ++r) {
    try {
      Rng rng(seed + r);
      std::vector<std::vector<double>> rows;
      std::vector<LabelSet> y;
      for (const auto& link : train.links()) {
        rows.push_back(pair_feature(link.src, link.dst));
        y.push_back({1});
        auto [u, v] = sample_non_edge(full, link.type, rng);
        rows.push_back(pair_feature(u, v));
        y.push_back({0});
      }
      ClassifierConfig cc = options.classifier;
      cc.seed = seed + r;
      const auto model = train_linear_classifier(rows_to_matrix(rows, width), y, cc);
      const std::size_t positive =
          static_cast<std::size_t>(std::find(model.classes.begin(), model.classes.end(), 1) - model.classes.begin());
      auto score = [&](NodeId u, NodeId v) { return model.margin(pair_feature(u, v), positive); };

      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& h : split.held_out) {
        scores.push_back(score(h.src, h.dst));
        labels.push_back(1);
        auto [u, v] = sample_non_edge(full, h.type, rng);
        scores.push_back(score(u, v));
        labels.push_back(0);
      }
      outcomes[r].auc = auc(scores, labels);

      std::vector<std::size_t> ranks;
      std::vector<double> cand_scores;
      for (const auto& [u, candidates] : queries) {
        cand_scores.clear();
        for (NodeId c : candidates) cand_scores.push_back(score(u, c));
        if (auto rank = rank_of_best_true(candidates, cand_scores, truth.at(u))) ranks.push_back(*rank);
      }
      outcomes[r].mrr = mrr(ranks);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }

  EvalReport report;
  report.task = "link_prediction";
  for (std::size_t r = 0; r < options.repeats; ++r) {
    report.seeds.push_back(seed + r);
    report.metrics["auc"].push_back(outcomes[r].auc);
    report.metrics["mrr"].push_back(outcomes[r].mrr);
  }
  report.metadata["held_out_links"] = std::to_string(split.held_out.size());
  report.metadata["ranking_queries"] = std::to_string(queries.size());
  report.metadata["negatives"] = "uniform schema-valid non-edges, resampled per repeat";
  report.metadata["mrr_candidates"] = "two-hop neighbors of the source, training neighbors removed";
  report.metadata["classifier"] = "two-class hinge-loss SGD on Hadamard features";
  return report;
}

}  // namespace hne
