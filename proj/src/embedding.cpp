#include "hne/embedding.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hne {

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void init_uniform(EmbeddingTable& table, Rng& rng) {
  const double half = 0.5 / static_cast<double>(table.dim);
  std::uniform_real_distribution<double> dist(-half, half);
  for (double& x : table.values.data()) x = dist(rng);
}

std::string format_embeddings(const HeteroGraph& g, const EmbeddingTable& table) {
  if (table.num_nodes() != g.num_nodes()) throw Error("embedding table does not cover every node");
  std::string out = std::to_string(table.num_nodes()) + " " + std::to_string(table.dim);
  if (table.complex) out += " complex";
  out += '\n';
  char buf[40];
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    out += std::to_string(g.original_type(g.node_type(v)));
    out += ':';
    out += std::to_string(g.original_id(v));
    for (double x : table.row(v)) {
      std::snprintf(buf, sizeof buf, " %.9g", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_embeddings(const HeteroGraph& g, const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << format_embeddings(g, table);
}

EmbeddingTable read_embeddings(const HeteroGraph& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty embedding file");
  std::istringstream header(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  std::string flag;
  if (!(header >> count >> dim)) throw Error(path.string() + ":1: expected 'node_count dim'");
  header >> flag;
  const bool complex = flag == "complex";
  if (count != g.num_nodes()) {
    throw Error(path.string() + ": header lists " + std::to_string(count) + " nodes but the graph has " +
                std::to_string(g.num_nodes()));
  }
  EmbeddingTable table(count, dim, complex);
  std::vector<bool> seen(count, false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::istringstream row(line);
    std::string key;
    row >> key;
    const auto colon = key.find(':');
    if (colon == std::string::npos) throw Error(where + ": expected type:original_id");
    std::int64_t id = -1;
    std::from_chars(key.data() + colon + 1, key.data() + key.size(), id);
    auto v = g.find_node(id);
    if (!v) throw Error(where + ": unknown node id " + key.substr(colon + 1));
    auto dst = table.row(*v);
    for (double& x : dst) {
      if (!(row >> x)) throw Error(where + ": expected " + std::to_string(dst.size()) + " values");
    }
    seen[*v] = true;
  }
  for (NodeId v = 0; v < count; ++v) {
    if (!seen[v]) throw Error(path.string() + ": missing embedding for node " + std::to_string(g.original_id(v)));
  }
  return table;
}

std::vector<double> feature_vector(const EmbeddingTable& table, NodeId v) {
  auto r = table.row(v);
  return {r.begin(), r.end()};
}

}  // namespace hne
