#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include "hne/graph.hpp"

namespace hne {

enum class LossMode { margin, log_sigmoid };

/// Hyperparameters shared by every trainer. Fields a trainer does not use
/// are ignored.
struct TrainSpec {
  std::size_t dim = 50;
  double learning_rate = 0.025;
  /// Linear decay from learning_rate to learning_rate/100 over training;
  /// constant when false.
  bool linear_decay = true;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  int threads = 1;
  /// Pins a single worker so results are a pure function of the seed.
  bool strict = true;
  std::uint64_t seed = 1;

  /// Edge-sampling models draw this many samples per link each epoch.
  double edge_samples_per_link = 10.0;

  // Relation-learning models.
  double margin = 1.0;
  int norm_p = 2;
  /// Unset means the model default (margin for TransE/RotatE, log-sigmoid
  /// for DistMult/ComplEx).
  bool loss_mode_set = false;
  LossMode loss_mode = LossMode::margin;

  // R-GCN.
  std::size_t layers = 2;
  std::size_t fanout = 10;
  std::size_t batch_size = 128;

  int workers() const { return strict ? 1 : std::max(threads, 1); }

  void validate() const {
    if (!(learning_rate >= 0.0)) throw Error("learning rate must be nonnegative");
    if (dim == 0) throw Error("embedding dimension must be positive");
    if (negatives < 1) throw Error("need at least one negative sample");
    if (norm_p != 1 && norm_p != 2) throw Error("norm order must be 1 or 2");
  }
};

/// Learning rate after `done` of `total` updates.
inline double scheduled_rate(const TrainSpec& spec, double done, double total) {
  if (!spec.linear_decay || total <= 0.0) return spec.learning_rate;
  const double progress = std::clamp(done / total, 0.0, 1.0);
  return spec.learning_rate * (1.0 - 0.99 * progress);
}

}  // namespace hne
