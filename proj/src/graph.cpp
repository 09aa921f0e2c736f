#include "hne/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace hne {

namespace {

std::string describe_link(std::int64_t src, std::int64_t dst, std::int64_t type) {
  return std::to_string(src) + " -> " + std::to_string(dst) + " (link type " + std::to_string(type) + ")";
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::int64_t parse_id(std::string_view token, const std::string& where) {
  token = trim(token);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || value < 0) {
    throw Error(where + ": expected a nonnegative integer id, got '" + std::string(token) + "'");
  }
  return value;
}

double parse_real(std::string_view token, const std::string& where) {
  token = trim(token);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw Error(where + ": expected a decimal number, got '" + std::string(token) + "'");
  }
  return value;
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// HeteroGraph

TypeId HeteroGraph::node_type(NodeId v) const {
  check_node(v);
  return node_type_[v];
}

NodeRange HeteroGraph::type_range(TypeId t) const {
  if (t >= num_node_types()) throw Error("unknown node type index " + std::to_string(t));
  return {type_offsets_[t], type_offsets_[t + 1]};
}

std::optional<NodeId> HeteroGraph::find_node(std::int64_t original_id) const {
  auto it = id_index_.find(original_id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TypeId> HeteroGraph::find_node_type(std::int64_t original_type) const {
  auto it = std::lower_bound(original_types_.begin(), original_types_.end(), original_type);
  if (it == original_types_.end() || *it != original_type) return std::nullopt;
  return static_cast<TypeId>(it - original_types_.begin());
}

std::optional<LinkTypeId> HeteroGraph::find_link_type(std::int64_t original_link_type) const {
  for (LinkTypeId l = 0; l < schema_.size(); ++l) {
    if (schema_[l].original_id == original_link_type) return l;
  }
  return std::nullopt;
}

std::span<const Link> HeteroGraph::links_of_type(LinkTypeId l) const {
  check_link_type(l);
  return std::span<const Link>(links_).subspan(link_type_offsets_[l],
                                               link_type_offsets_[l + 1] - link_type_offsets_[l]);
}

std::span<const Neighbor> HeteroGraph::neighbors(NodeId v, LinkTypeId l) const {
  check_node(v);
  check_link_type(l);
  const auto& off = out_offsets_[l];
  return std::span<const Neighbor>(out_entries_[l]).subspan(off[v], off[v + 1] - off[v]);
}

std::span<const Neighbor> HeteroGraph::in_neighbors(NodeId v, LinkTypeId l) const {
  check_node(v);
  check_link_type(l);
  const auto& off = in_offsets_[l];
  return std::span<const Neighbor>(in_entries_[l]).subspan(off[v], off[v + 1] - off[v]);
}

bool HeteroGraph::has_link(NodeId u, NodeId v, LinkTypeId l) const {
  auto nb = neighbors(u, l);
  auto it = std::lower_bound(nb.begin(), nb.end(), v, [](const Neighbor& n, NodeId x) { return n.node < x; });
  return it != nb.end() && it->node == v;
}

std::span<const double> HeteroGraph::attributes(NodeId v) const {
  check_node(v);
  if (attributes_.empty()) return {};
  return attributes_[v];
}

std::span<const LabelId> HeteroGraph::labels(NodeId v) const {
  check_node(v);
  if (labels_.empty()) return {};
  return labels_[v];
}

void HeteroGraph::check_node(NodeId v) const {
  if (v >= node_type_.size()) throw Error("unknown node " + std::to_string(v));
}

void HeteroGraph::check_link_type(LinkTypeId l) const {
  if (l >= schema_.size()) throw Error("unknown link type index " + std::to_string(l));
}

HeteroGraph HeteroGraph::with_links(std::vector<Link> links) const {
  HeteroGraph g = *this;
  std::stable_sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.type < b.type; });
  g.links_ = std::move(links);
  g.link_attributes_.clear();
  g.index_links();
  return g;
}

void HeteroGraph::index_links() {
  const std::size_t n = num_nodes();
  const std::size_t types = schema_.size();
  link_type_offsets_.assign(types + 1, 0);
  for (const auto& link : links_) ++link_type_offsets_[link.type + 1];
  std::partial_sum(link_type_offsets_.begin(), link_type_offsets_.end(), link_type_offsets_.begin());

  degree_.assign(n, 0.0);
  for (const auto& link : links_) {
    degree_[link.src] += link.weight;
    degree_[link.dst] += link.weight;
  }

  auto build_csr = [n](std::vector<std::pair<NodeId, Neighbor>>& arcs, std::vector<std::size_t>& offsets,
                       std::vector<Neighbor>& entries) {
    std::sort(arcs.begin(), arcs.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second.node < b.second.node;
    });
    entries.clear();
    offsets.assign(n + 1, 0);
    NodeId prev_owner = 0;
    bool have_prev = false;
    for (const auto& [owner, nb] : arcs) {
      if (have_prev && owner == prev_owner && entries.back().node == nb.node) {
        entries.back().weight += nb.weight;
        continue;
      }
      entries.push_back(nb);
      ++offsets[owner + 1];
      prev_owner = owner;
      have_prev = true;
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  };

  out_offsets_.assign(types, {});
  out_entries_.assign(types, {});
  in_offsets_.assign(types, {});
  in_entries_.assign(types, {});
  for (LinkTypeId l = 0; l < types; ++l) {
    std::vector<std::pair<NodeId, Neighbor>> out_arcs;
    std::vector<std::pair<NodeId, Neighbor>> in_arcs;
    for (std::size_t i = link_type_offsets_[l]; i < link_type_offsets_[l + 1]; ++i) {
      const Link& link = links_[i];
      out_arcs.push_back({link.src, {link.dst, link.weight}});
      if (schema_[l].directed) {
        in_arcs.push_back({link.dst, {link.src, link.weight}});
      } else {
        out_arcs.push_back({link.dst, {link.src, link.weight}});
      }
    }
    build_csr(out_arcs, out_offsets_[l], out_entries_[l]);
    if (schema_[l].directed) {
      build_csr(in_arcs, in_offsets_[l], in_entries_[l]);
    } else {
      in_offsets_[l] = out_offsets_[l];
      in_entries_[l] = out_entries_[l];
    }
  }
}

// ---------------------------------------------------------------------------
// GraphBuilder

void GraphBuilder::add_node(std::int64_t original_id, std::int64_t original_type, std::vector<double> attributes) {
  if (original_id < 0 || original_type < 0) throw Error("node and type ids must be nonnegative");
  if (nodes_.count(original_id)) throw Error("duplicate node id " + std::to_string(original_id));
  auto [it, inserted] = attr_dim_by_type_.try_emplace(original_type, attributes.size());
  if (!inserted && it->second != attributes.size()) {
    throw Error("node " + std::to_string(original_id) + " has " + std::to_string(attributes.size()) +
                " attributes but node type " + std::to_string(original_type) + " uses " +
                std::to_string(it->second));
  }
  nodes_.emplace(original_id, PendingNode{original_type, std::move(attributes)});
}

void GraphBuilder::set_directed(std::int64_t original_link_type, bool directed) {
  directed_[original_link_type] = directed;
}

void GraphBuilder::declare_link_type(std::int64_t original_link_type, std::int64_t src_type,
                                     std::int64_t dst_type, bool directed) {
  directed_[original_link_type] = directed;
  schema_[original_link_type] = {src_type, dst_type};
}

void GraphBuilder::add_link(std::int64_t src, std::int64_t dst, std::int64_t original_link_type, double weight,
                            std::vector<double> attributes) {
  auto src_it = nodes_.find(src);
  if (src_it == nodes_.end()) throw Error("link references unknown node id " + std::to_string(src));
  auto dst_it = nodes_.find(dst);
  if (dst_it == nodes_.end()) throw Error("link references unknown node id " + std::to_string(dst));
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw Error("negative or non-finite weight on link " + describe_link(src, dst, original_link_type));
  }
  if (original_link_type < 0) throw Error("link type ids must be nonnegative");
  const std::int64_t src_type = src_it->second.type;
  const std::int64_t dst_type = dst_it->second.type;
  auto [schema_it, fresh] = schema_.try_emplace(original_link_type, PendingSchema{src_type, dst_type});
  const auto& expected = schema_it->second;
  if (!fresh && !(expected.src_type == src_type && expected.dst_type == dst_type)) {
    const bool directed = directed_.count(original_link_type) && directed_.at(original_link_type);
    if (!directed && expected.src_type == dst_type && expected.dst_type == src_type) {
      std::swap(src, dst);
    } else {
      throw Error("schema violation: link " + describe_link(src, dst, original_link_type) + " joins node types (" +
                  std::to_string(src_type) + ", " + std::to_string(dst_type) + ") but the link type joins (" +
                  std::to_string(expected.src_type) + ", " + std::to_string(expected.dst_type) + ")");
    }
  }
  links_.push_back({src, dst, original_link_type, weight, std::move(attributes)});
}

void GraphBuilder::add_label(std::int64_t original_id, LabelId label) {
  if (!nodes_.count(original_id)) throw Error("label references unknown node id " + std::to_string(original_id));
  labels_[original_id].push_back(label);
}

HeteroGraph GraphBuilder::build() const {
  HeteroGraph g;

  std::set<std::int64_t> types;
  for (const auto& [id, node] : nodes_) types.insert(node.type);
  g.original_types_.assign(types.begin(), types.end());

  // Dense ids: grouped by type, ascending original id within a type.
  std::vector<std::vector<std::int64_t>> by_type(types.size());
  for (const auto& [id, node] : nodes_) {
    by_type[*g.find_node_type(node.type)].push_back(id);
  }
  g.type_offsets_.push_back(0);
  for (TypeId t = 0; t < by_type.size(); ++t) {
    for (std::int64_t id : by_type[t]) {
      g.id_index_.emplace(id, static_cast<NodeId>(g.original_ids_.size()));
      g.original_ids_.push_back(id);
      g.node_type_.push_back(t);
    }
    g.type_offsets_.push_back(static_cast<NodeId>(g.original_ids_.size()));
  }

  bool any_attributes = false;
  for (const auto& [type, dim] : attr_dim_by_type_) any_attributes = any_attributes || dim > 0;
  if (any_attributes) {
    g.attribute_dims_.assign(types.size(), 0);
    g.attributes_.resize(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      const auto& node = nodes_.at(g.original_ids_[v]);
      g.attribute_dims_[g.node_type_[v]] = node.attributes.size();
      g.attributes_[v] = node.attributes;
    }
  }

  std::set<std::int64_t> link_types;
  for (const auto& [type, schema] : schema_) link_types.insert(type);
  std::map<std::int64_t, LinkTypeId> link_index;
  for (std::int64_t orig : link_types) {
    const auto& schema = schema_.at(orig);
    auto src_type = g.find_node_type(schema.src_type);
    auto dst_type = g.find_node_type(schema.dst_type);
    if (!src_type || !dst_type) {
      throw Error("link type " + std::to_string(orig) + " refers to a node type with no nodes");
    }
    link_index[orig] = static_cast<LinkTypeId>(g.schema_.size());
    const bool directed = directed_.count(orig) && directed_.at(orig);
    g.schema_.push_back({*src_type, *dst_type, directed, orig});
  }

  std::vector<std::size_t> order(links_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return link_index[links_[a].type] < link_index[links_[b].type]; });
  bool any_link_attributes = false;
  for (std::size_t i : order) {
    const auto& link = links_[i];
    g.links_.push_back({g.id_index_.at(link.src), g.id_index_.at(link.dst), link_index[link.type], link.weight});
    any_link_attributes = any_link_attributes || !link.attributes.empty();
  }
  if (any_link_attributes) {
    for (std::size_t i : order) g.link_attributes_.push_back(links_[i].attributes);
  }

  if (!labels_.empty()) {
    g.labels_.resize(g.num_nodes());
    for (const auto& [id, labels] : labels_) {
      auto& dst = g.labels_[g.id_index_.at(id)];
      dst = labels;
      std::sort(dst.begin(), dst.end());
      dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
    }
  }

  g.index_links();
  return g;
}

// ---------------------------------------------------------------------------
// MetaPath

MetaPath MetaPath::resolve(const HeteroGraph& g, TypeId start_type, std::vector<LinkTypeId> links) {
  if (start_type >= g.num_node_types()) throw Error("meta-path starts at unknown node type");
  if (links.empty()) throw Error("meta-path needs at least one link type");
  MetaPath mp;
  mp.start_type = start_type;
  mp.node_types.push_back(start_type);
  TypeId current = start_type;
  for (LinkTypeId l : links) {
    if (l >= g.num_link_types()) throw Error("meta-path uses unknown link type index " + std::to_string(l));
    const auto& s = g.schema(l);
    if (s.src_type == current) {
      current = s.dst_type;
    } else if (!s.directed && s.dst_type == current) {
      current = s.src_type;
    } else {
      throw Error("meta-path step over link type " + std::to_string(s.original_id) +
                  " is not schema-compatible with node type " + std::to_string(g.original_type(current)));
    }
    mp.node_types.push_back(current);
  }
  mp.links = std::move(links);
  return mp;
}

MetaPath MetaPath::parse(const HeteroGraph& g, const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw Error("meta-path '" + text + "' must look like T:L1,L2,...");
  const std::string where = "meta-path '" + text + "'";
  auto start = g.find_node_type(parse_id(std::string_view(text).substr(0, colon), where));
  if (!start) throw Error(where + ": unknown start node type");
  std::vector<LinkTypeId> links;
  for (auto token : split(std::string_view(text).substr(colon + 1), ',')) {
    auto l = g.find_link_type(parse_id(token, where));
    if (!l) throw Error(where + ": unknown link type " + std::string(trim(token)));
    links.push_back(*l);
  }
  return resolve(g, *start, std::move(links));
}

std::string MetaPath::to_string(const HeteroGraph& g) const {
  std::string out = std::to_string(g.original_type(start_type)) + ":";
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(g.schema(links[i]).original_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// File ingestion

HeteroGraph load_graph(const std::filesystem::path& node_file, const std::filesystem::path& link_file,
                       const std::optional<std::filesystem::path>& label_file, bool read_attributes) {
  GraphBuilder builder;
  std::string line;

  {
    auto in = open_input(node_file);
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string where = node_file.filename().string() + ":" + std::to_string(line_no);
      std::string_view view = trim(line);
      if (view.empty() || view.front() == '#') continue;
      auto fields = split(view, '\t');
      if (fields.size() < 2 || fields.size() > 3) {
        throw Error(where + ": expected node_id<TAB>node_type[<TAB>attributes]");
      }
      std::vector<double> attrs;
      if (fields.size() == 3 && read_attributes) {
        for (auto tok : split(fields[2], ',')) attrs.push_back(parse_real(tok, where));
      }
      try {
        builder.add_node(parse_id(fields[0], where), parse_id(fields[1], where), std::move(attrs));
      } catch (const Error& e) {
        if (std::string(e.what()).rfind(where, 0) == 0) throw;
        throw Error(where + ": " + e.what());
      }
    }
  }

  {
    auto in = open_input(link_file);
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string where = link_file.filename().string() + ":" + std::to_string(line_no);
      std::string_view view = trim(line);
      if (view.empty()) continue;
      if (view.front() == '#') {
        constexpr std::string_view tag = "#directed:";
        if (view.substr(0, tag.size()) == tag) {
          std::string rest(view.substr(tag.size()));
          std::replace(rest.begin(), rest.end(), ',', ' ');
          std::replace(rest.begin(), rest.end(), '\t', ' ');
          std::istringstream ids(rest);
          std::string tok;
          while (ids >> tok) builder.set_directed(parse_id(tok, where));
        }
        continue;
      }
      auto fields = split(view, '\t');
      if (fields.size() != 4) throw Error(where + ": expected src_id<TAB>dst_id<TAB>link_type_id<TAB>weight");
      try {
        builder.add_link(parse_id(fields[0], where), parse_id(fields[1], where), parse_id(fields[2], where),
                         parse_real(fields[3], where));
      } catch (const Error& e) {
        if (std::string(e.what()).rfind(where, 0) == 0) throw;
        throw Error(where + ": " + e.what());
      }
    }
  }

  if (label_file) {
    auto in = open_input(*label_file);
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string where = label_file->filename().string() + ":" + std::to_string(line_no);
      std::string_view view = trim(line);
      if (view.empty() || view.front() == '#') continue;
      auto fields = split(view, '\t');
      if (fields.size() != 2) throw Error(where + ": expected node_id<TAB>label_id");
      try {
        builder.add_label(parse_id(fields[0], where), parse_id(fields[1], where));
      } catch (const Error& e) {
        if (std::string(e.what()).rfind(where, 0) == 0) throw;
        throw Error(where + ": " + e.what());
      }
    }
  }

  return builder.build();
}

void save_graph(const HeteroGraph& g, const std::filesystem::path& node_file, const std::filesystem::path& link_file,
                const std::optional<std::filesystem::path>& label_file) {
  {
    auto out = open_output(node_file);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      out << g.original_id(v) << '\t' << g.original_type(g.node_type(v));
      auto attrs = g.attributes(v);
      if (!attrs.empty()) {
        out << '\t';
        for (std::size_t i = 0; i < attrs.size(); ++i) out << (i ? "," : "") << format_real(attrs[i]);
      }
      out << '\n';
    }
  }
  {
    auto out = open_output(link_file);
    out << "#directed:";
    bool first = true;
    for (const auto& s : g.schemas()) {
      if (!s.directed) continue;
      out << (first ? " " : ",") << s.original_id;
      first = false;
    }
    out << '\n';
    for (const auto& link : g.links()) {
      out << g.original_id(link.src) << '\t' << g.original_id(link.dst) << '\t' << g.schema(link.type).original_id
          << '\t' << format_real(link.weight) << '\n';
    }
  }
  if (label_file) {
    auto out = open_output(*label_file);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      for (LabelId label : g.labels(v)) out << g.original_id(v) << '\t' << label << '\n';
    }
  }
}

void save_id_map(const HeteroGraph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    out << v << '\t' << g.original_type(g.node_type(v)) << '\t' << g.original_id(v) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Queries

std::vector<NodeId> two_hop_candidates(const HeteroGraph& g, NodeId u) {
  auto one_hop = [&g](NodeId v, std::vector<NodeId>& out) {
    for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
      for (const auto& nb : g.neighbors(v, l)) out.push_back(nb.node);
      if (g.schema(l).directed) {
        for (const auto& nb : g.in_neighbors(v, l)) out.push_back(nb.node);
      }
    }
  };
  std::vector<NodeId> first;
  one_hop(u, first);
  std::sort(first.begin(), first.end());
  first.erase(std::unique(first.begin(), first.end()), first.end());

  std::vector<NodeId> result = first;
  for (NodeId v : first) one_hop(v, result);
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  result.erase(std::remove(result.begin(), result.end(), u), result.end());
  return result;
}

bool schema_conformant(const HeteroGraph& g) {
  for (const auto& link : g.links()) {
    const auto& s = g.schema(link.type);
    if (g.node_type(link.src) != s.src_type || g.node_type(link.dst) != s.dst_type) return false;
  }
  return true;
}

LinkSplit split_links(const HeteroGraph& g, double holdout_ratio, std::uint64_t seed) {
  if (!(holdout_ratio > 0.0 && holdout_ratio < 1.0)) throw Error("holdout ratio must lie in (0, 1)");
  LinkSplit split;
  split.seed = seed;
  split.holdout_ratio = holdout_ratio;
  Rng rng(seed);
  std::vector<Link> kept;
  for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
    auto links = g.links_of_type(l);
    if (links.size() < 2) {
      kept.insert(kept.end(), links.begin(), links.end());
      split.kept_in_train.push_back(l);
      continue;
    }
    std::vector<std::size_t> order(links.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto held = static_cast<std::size_t>(std::llround(holdout_ratio * static_cast<double>(links.size())));
    std::vector<bool> is_held(links.size(), false);
    for (std::size_t i = 0; i < held; ++i) is_held[order[i]] = true;
    for (std::size_t i = 0; i < links.size(); ++i) {
      if (is_held[i]) {
        split.held_out.push_back({links[i].src, links[i].dst, links[i].type, links[i].weight});
      } else {
        kept.push_back(links[i]);
      }
    }
  }
  split.train = g.with_links(std::move(kept));
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic planted-partition graphs

SyntheticGraph generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (!(spec.p_in > spec.p_out)) throw Error("planted partition needs p_in > p_out");
  if (spec.p_out < 0.0 || spec.p_in > 1.0) throw Error("link probabilities must lie in [0, 1]");
  if (spec.communities == 0) throw Error("need at least one community");
  if (spec.nodes_per_type.empty()) throw Error("need at least one node type");
  if (spec.attribute_dim > 0 && spec.attribute_dim < spec.communities) {
    throw Error("attribute_dim must be at least the community count");
  }
  const auto num_types = static_cast<std::int64_t>(spec.nodes_per_type.size());
  if (spec.label_type < 0 || spec.label_type >= num_types) throw Error("label type out of range");

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, spec.attribute_noise);
  GraphBuilder builder;
  std::vector<std::int64_t> first_id;
  std::vector<std::size_t> community;
  std::int64_t next_id = 0;
  for (std::int64_t t = 0; t < num_types; ++t) {
    first_id.push_back(next_id);
    for (std::size_t i = 0; i < spec.nodes_per_type[t]; ++i) {
      const std::size_t c = i % spec.communities;
      std::vector<double> attrs;
      if (spec.attribute_dim > 0) {
        attrs.assign(spec.attribute_dim, 0.0);
        attrs[c] = 1.0;
        if (spec.attribute_noise > 0.0) {
          for (auto& a : attrs) a += noise(rng);
        }
      }
      builder.add_node(next_id, t, std::move(attrs));
      if (t == spec.label_type) builder.add_label(next_id, static_cast<LabelId>(c));
      community.push_back(c);
      ++next_id;
    }
  }

  std::bernoulli_distribution link_in(spec.p_in);
  std::bernoulli_distribution link_out(spec.p_out);
  std::bernoulli_distribution flip(0.5);
  for (std::size_t l = 0; l < spec.link_types.size(); ++l) {
    const auto& lt = spec.link_types[l];
    if (lt.src_type < 0 || lt.src_type >= num_types || lt.dst_type < 0 || lt.dst_type >= num_types) {
      throw Error("synthetic link type " + std::to_string(l) + " refers to an unknown node type");
    }
    const auto lid = static_cast<std::int64_t>(l);
    builder.declare_link_type(lid, lt.src_type, lt.dst_type, lt.directed);
    const std::size_t ns = spec.nodes_per_type[lt.src_type];
    const std::size_t nd = spec.nodes_per_type[lt.dst_type];
    const bool same = lt.src_type == lt.dst_type;
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = 0; j < nd; ++j) {
        if (same && (lt.directed ? i == j : j <= i)) continue;
        const bool intra = (i % spec.communities) == (j % spec.communities);
        if (intra ? link_in(rng) : link_out(rng)) {
          auto a = first_id[lt.src_type] + static_cast<std::int64_t>(i);
          auto b = first_id[lt.dst_type] + static_cast<std::int64_t>(j);
          // Undirected links within one type get a random orientation.
          if (same && !lt.directed && flip(rng)) std::swap(a, b);
          builder.add_link(a, b, lid, 1.0);
        }
      }
    }
  }

  SyntheticGraph out;
  out.graph = builder.build();
  // Original ids were assigned type-contiguously, so dense ids coincide.
  out.community = std::move(community);
  return out;
}

}  // namespace hne
