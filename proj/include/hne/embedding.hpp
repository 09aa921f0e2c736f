#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hne/graph.hpp"

namespace hne {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// One embedding row per node, stored type-contiguously so that each node
/// type owns the block of rows [type_range(t).begin, type_range(t).end).
/// Complex embeddings keep `dim` complex entries as 2*dim interleaved
/// (real, imaginary) values.
struct EmbeddingTable {
  std::size_t dim = 0;
  bool complex = false;
  Matrix values;

  EmbeddingTable() = default;
  EmbeddingTable(std::size_t num_nodes, std::size_t dim, bool complex = false)
      : dim(dim), complex(complex), values(num_nodes, complex ? 2 * dim : dim) {}

  std::size_t num_nodes() const { return values.rows(); }
  std::size_t width() const { return values.cols(); }
  std::span<double> row(NodeId v) { return values.row(v); }
  std::span<const double> row(NodeId v) const { return values.row(v); }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

/// Per-relation parameter vectors (one row per link type or meta-path).
struct RelationParams {
  std::size_t dim = 0;
  bool complex = false;
  Matrix values;
  std::vector<std::string> names;

  std::size_t size() const { return values.rows(); }
  std::span<double> row(std::size_t r) { return values.row(r); }
  std::span<const double> row(std::size_t r) const { return values.row(r); }

  friend bool operator==(const RelationParams&, const RelationParams&) = default;
};

/// Fills every entry uniformly in [-0.5/dim, 0.5/dim].
void init_uniform(EmbeddingTable& table, Rng& rng);

/// Header `node_count dim[ complex]`, then `type:original_id v1 ... vk` per
/// node in dense-id order.
void write_embeddings(const HeteroGraph& g, const EmbeddingTable& table, const std::filesystem::path& path);
std::string format_embeddings(const HeteroGraph& g, const EmbeddingTable& table);
/// Reads an embedding file, mapping rows back to the dense ids of `g`.
EmbeddingTable read_embeddings(const HeteroGraph& g, const std::filesystem::path& path);

/// Real feature vector of a node: the row itself (complex rows keep both
/// halves).
std::vector<double> feature_vector(const EmbeddingTable& table, NodeId v);

}  // namespace hne
