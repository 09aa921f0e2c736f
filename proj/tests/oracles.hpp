#pragma once

// Brute-force reference computations. None of these call into the library's
// metric or objective code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "hne/graph.hpp"

namespace oracle {

/// Pair enumeration: 2 per won pair, 1 per tie, over 2 * P * N.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  std::uint64_t twice = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) ++pos; else ++neg;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) twice += 2;
      else if (scores[i] == scores[j]) twice += 1;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

struct RankingTask {
  std::vector<hne::NodeId> candidates;
  std::vector<double> scores;
  std::vector<hne::NodeId> truth;
};

/// Full sort by (score desc, id asc); rank of the first true candidate.
inline std::size_t rank_by_sorting(const RankingTask& t) {
  std::vector<std::size_t> idx(t.candidates.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (t.scores[a] != t.scores[b]) return t.scores[a] > t.scores[b];
    return t.candidates[a] < t.candidates[b];
  });
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (std::find(t.truth.begin(), t.truth.end(), t.candidates[idx[r]]) != t.truth.end()) return r + 1;
  }
  return 0;
}

inline double mrr(const std::vector<RankingTask>& tasks) {
  double s = 0.0;
  for (const auto& t : tasks) s += 1.0 / static_cast<double>(rank_by_sorting(t));
  return s / static_cast<double>(tasks.size());
}

struct F1 {
  double macro = 0.0;
  double micro = 0.0;
};

/// Precision/recall form, looping the label universe.
inline F1 f1(const std::vector<std::vector<hne::LabelId>>& pred, const std::vector<std::vector<hne::LabelId>>& gold) {
  std::set<hne::LabelId> universe;
  for (const auto& p : pred) universe.insert(p.begin(), p.end());
  for (const auto& g : gold) universe.insert(g.begin(), g.end());
  auto has = [](const std::vector<hne::LabelId>& s, hne::LabelId x) { return std::find(s.begin(), s.end(), x) != s.end(); };
  auto f1_of = [](double tp, double fp, double fn) {
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  };
  double tp_all = 0, fp_all = 0, fn_all = 0, macro = 0;
  for (hne::LabelId label : universe) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = has(pred[i], label), g = has(gold[i], label);
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    macro += f1_of(tp, fp, fn);
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  return {macro / static_cast<double>(universe.size()), f1_of(tp_all, fp_all, fn_all)};
}

/// Direct softmax objective: sum w [s(u,v) - log sum_{u' of type(u)} exp s(u',v)],
/// with s(u,v) = sum_i a_i e_u[i] e_v[i] (a = ones for the dot score).
inline double softmax_objective(const hne::HeteroGraph& g,
                                const std::vector<std::tuple<hne::NodeId, hne::NodeId, std::vector<double>, double>>& pairs,
                                const std::function<std::span<const double>(hne::NodeId)>& emb) {
  double total = 0.0;
  for (const auto& [center, context, a, w] : pairs) {
    auto score = [&](hne::NodeId u) {
      double s = 0.0;
      auto eu = emb(u), ev = emb(center);
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * eu[i] * ev[i];
      return s;
    };
    const auto range = g.type_range(g.node_type(context));
    double mx = -1e300;
    for (hne::NodeId u = range.begin; u < range.end; ++u) mx = std::max(mx, score(u));
    double z = 0.0;
    for (hne::NodeId u = range.begin; u < range.end; ++u) z += std::exp(score(u) - mx);
    total += w * (score(context) - (mx + std::log(z)));
  }
  return total;
}

/// Breadth-first two-hop set from the link list, ignoring direction.
inline std::vector<hne::NodeId> two_hop(const hne::HeteroGraph& g, hne::NodeId u) {
  std::map<hne::NodeId, std::set<hne::NodeId>> adj;
  for (const auto& l : g.links()) {
    adj[l.src].insert(l.dst);
    adj[l.dst].insert(l.src);
  }
  std::set<hne::NodeId> out;
  for (auto v : adj[u]) {
    out.insert(v);
    for (auto w : adj[v]) out.insert(w);
  }
  out.erase(u);
  return {out.begin(), out.end()};
}

/// Upper tail of the chi-square distribution.
inline double chi_square_p_value(double statistic, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

/// Central difference of f along coordinate i of x.
inline double central_difference(const std::function<double()>& f, double& x, double h = 1e-6) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2 * h);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace oracle
