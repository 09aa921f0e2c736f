#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "hne/graph.hpp"
#include "oracles.hpp"

using namespace hne;
namespace fs = std::filesystem;

namespace {

// Authors 1..3 (type 0), papers 10..11 (type 1), venue 20 (type 2).
HeteroGraph small_graph() {
  GraphBuilder b;
  for (int a : {3, 1, 2}) b.add_node(a, 0);
  for (int p : {11, 10}) b.add_node(p, 1);
  b.add_node(20, 2);
  b.add_link(1, 10, 5, 1.0);
  b.add_link(2, 10, 5, 1.0);
  b.add_link(2, 11, 5, 2.0);
  b.add_link(3, 11, 5, 1.0);
  b.add_link(10, 20, 6, 1.0);
  b.add_link(11, 20, 6, 1.0);
  b.add_label(1, 0);
  b.add_label(2, 1);
  return b.build();
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hne_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("nodes are type-contiguous and sorted by original id") {
  const auto g = small_graph();
  CHECK(g.num_nodes() == 6);
  CHECK(g.num_node_types() == 3);
  const auto authors = g.type_range(0);
  CHECK(authors.size() == 3);
  for (NodeId v = authors.begin; v + 1 < authors.end; ++v) CHECK(g.original_id(v) < g.original_id(v + 1));
  CHECK(g.original_id(*g.find_node(10)) == 10);
  CHECK(g.node_type(*g.find_node(20)) == 2);
  CHECK_FALSE(g.find_node(99).has_value());
}

TEST_CASE("undirected neighbor lists are symmetric and sorted") {
  const auto g = small_graph();
  const LinkTypeId writes = *g.find_link_type(5);
  const NodeId a2 = *g.find_node(2), p10 = *g.find_node(10), p11 = *g.find_node(11);
  CHECK(g.has_link(a2, p10, writes));
  CHECK(g.has_link(p10, a2, writes));
  auto nb = g.neighbors(p11, writes);
  REQUIRE(nb.size() == 2);
  CHECK(nb[0].node < nb[1].node);
  CHECK(g.weighted_degree(a2) == doctest::Approx(3.0));
}

TEST_CASE("parallel links merge with summed weights") {
  GraphBuilder b;
  b.add_node(1, 0);
  b.add_node(2, 0);
  b.add_link(1, 2, 0, 1.5);
  b.add_link(2, 1, 0, 0.5);
  const auto g = b.build();
  CHECK(g.num_links() == 2);
  auto nb = g.neighbors(0, 0);
  REQUIRE(nb.size() == 1);
  CHECK(nb[0].weight == doctest::Approx(2.0));
}

TEST_CASE("directed links appear in out and in lists only") {
  GraphBuilder b;
  b.add_node(1, 0);
  b.add_node(2, 0);
  b.set_directed(7);
  b.add_link(1, 2, 7, 1.0);
  const auto g = b.build();
  CHECK(g.schema(0).directed);
  CHECK(g.neighbors(0, 0).size() == 1);
  CHECK(g.neighbors(1, 0).empty());
  CHECK(g.in_neighbors(1, 0).size() == 1);
  CHECK(g.has_link(0, 1, 0));
  CHECK_FALSE(g.has_link(1, 0, 0));
}

TEST_CASE("builder rejects malformed input") {
  SUBCASE("duplicate node") {
    GraphBuilder b;
    b.add_node(1, 0);
    CHECK_THROWS_AS(b.add_node(1, 0), Error);
  }
  SUBCASE("unknown endpoint") {
    GraphBuilder b;
    b.add_node(1, 0);
    CHECK_THROWS_AS((b.add_link(1, 9, 0, 1.0), b.build()), Error);
  }
  SUBCASE("negative weight") {
    GraphBuilder b;
    b.add_node(1, 0);
    b.add_node(2, 0);
    CHECK_THROWS_AS((b.add_link(1, 2, 0, -1.0), b.build()), Error);
  }
  SUBCASE("schema violation names the link") {
    GraphBuilder b;
    b.add_node(1, 0);
    b.add_node(2, 1);
    b.add_node(3, 2);
    b.set_directed(4);
    b.add_link(1, 2, 4, 1.0);
    try {
      b.add_link(1, 3, 4, 1.0);
      b.build();
      FAIL("expected a schema error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("1") != std::string::npos);
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
  }
  SUBCASE("inconsistent attribute width within a type") {
    GraphBuilder b;
    b.add_node(1, 0, {1.0, 2.0});
    CHECK_THROWS_AS((b.add_node(2, 0, {1.0}), b.build()), Error);
  }
}

TEST_CASE("files round-trip through save and load") {
  const auto dir = temp_dir("roundtrip");
  GraphBuilder b;
  b.add_node(1, 0, {0.5, -1.0});
  b.add_node(2, 0, {1.5, 2.0});
  b.add_node(5, 1, {3.0});
  b.set_directed(9);
  b.add_link(1, 5, 9, 0.25);
  b.add_link(1, 2, 3, 1.0);
  b.add_label(1, 4);
  const auto g = b.build();
  save_graph(g, dir / "n.tsv", dir / "l.tsv", dir / "y.tsv");
  const auto back = load_graph(dir / "n.tsv", dir / "l.tsv", dir / "y.tsv");
  CHECK(back == g);
}

TEST_CASE("loader reports file and line") {
  const auto dir = temp_dir("badline");
  write(dir / "n.tsv", "1\t0\n2\t0\n");
  write(dir / "l.tsv", "# comment\n1\t2\t0\t1\n1\tx\t0\t1\n");
  try {
    load_graph(dir / "n.tsv", dir / "l.tsv");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("l.tsv:3") != std::string::npos);
  }
}

TEST_CASE("meta-path parsing checks schema compatibility") {
  const auto g = small_graph();
  const auto apa = MetaPath::parse(g, "0:5,5");
  CHECK(apa.node_types == std::vector<TypeId>{0, 1, 0});
  CHECK(apa.cyclable());
  const auto apv = MetaPath::parse(g, "0:5,6");
  CHECK_FALSE(apv.cyclable());
  CHECK(apv.to_string(g) == "0:5,6");
  CHECK_THROWS_AS(MetaPath::parse(g, "0:6"), Error);
  CHECK_THROWS_AS(MetaPath::parse(g, "0:5,5,6,5"), Error);
  CHECK_THROWS_AS(MetaPath::parse(g, "bogus"), Error);
}

TEST_CASE("two-hop candidates match breadth-first search") {
  SyntheticSpec spec;
  spec.nodes_per_type = {30, 20};
  spec.communities = 2;
  spec.p_in = 0.2;
  spec.p_out = 0.02;
  spec.link_types = {{0, 1, false}, {0, 0, true}};
  const auto g = generate_synthetic(spec, 3).graph;
  for (NodeId u = 0; u < g.num_nodes(); ++u) CHECK(two_hop_candidates(g, u) == oracle::two_hop(g, u));
}

TEST_CASE("link split partitions each type") {
  SyntheticSpec spec;
  spec.nodes_per_type = {50, 50};
  spec.communities = 2;
  spec.p_in = 0.2;
  spec.p_out = 0.01;
  spec.link_types = {{0, 1, false}, {1, 1, false}};
  const auto g = generate_synthetic(spec, 5).graph;
  const auto split = split_links(g, 0.2, 11);
  CHECK(split.train.num_links() + split.held_out.size() == g.num_links());
  for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
    std::size_t held = 0;
    for (const auto& h : split.held_out) held += h.type == l;
    CHECK(held == static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(g.links_of_type(l).size()))));
  }
  for (const auto& h : split.held_out) CHECK(g.has_link(h.src, h.dst, h.type));
  const auto again = split_links(g, 0.2, 11);
  CHECK(again.train == split.train);
  CHECK(schema_conformant(split.train));
}

TEST_CASE("single-link types stay in train") {
  GraphBuilder b;
  b.add_node(1, 0);
  b.add_node(2, 0);
  b.add_node(3, 0);
  b.add_link(1, 2, 0, 1.0);
  b.add_link(2, 3, 0, 1.0);
  b.add_link(1, 3, 1, 1.0);
  const auto split = split_links(b.build(), 0.5, 1);
  CHECK(split.kept_in_train == std::vector<LinkTypeId>{1});
  CHECK(split.held_out.size() == 1);
}

TEST_CASE("planted partition hits its link probabilities") {
  SyntheticSpec spec;
  spec.nodes_per_type = {400, 400};
  spec.communities = 4;
  spec.p_in = 0.05;
  spec.p_out = 0.002;
  spec.link_types = {{0, 1, false}};
  const auto s = generate_synthetic(spec, 9);
  double in = 0, out = 0;
  for (const auto& l : s.graph.links()) (s.community[l.src] == s.community[l.dst] ? in : out) += 1;
  const double in_pairs = 4.0 * 100 * 100, out_pairs = 400.0 * 400 - in_pairs;
  // Binomial tolerance of five standard deviations.
  CHECK(std::abs(in / in_pairs - 0.05) < 5 * std::sqrt(0.05 * 0.95 / in_pairs));
  CHECK(std::abs(out / out_pairs - 0.002) < 5 * std::sqrt(0.002 * 0.998 / out_pairs));
  CHECK(generate_synthetic(spec, 9).graph == s.graph);
  CHECK(schema_conformant(s.graph));
}

TEST_CASE("planted partition attributes and labels") {
  SyntheticSpec spec;
  spec.nodes_per_type = {40, 10};
  spec.communities = 4;
  spec.p_in = 0.3;
  spec.p_out = 0.01;
  spec.link_types = {{0, 1, false}};
  spec.attribute_dim = 6;
  spec.attribute_noise = 0.0;
  const auto s = generate_synthetic(spec, 2);
  for (NodeId v = 0; v < s.graph.num_nodes(); ++v) {
    auto x = s.graph.attributes(v);
    REQUIRE(x.size() == 6);
    for (std::size_t j = 0; j < 6; ++j) CHECK(x[j] == (j == s.community[v] ? 1.0 : 0.0));
    if (s.graph.node_type(v) == 0) {
      REQUIRE(s.graph.labels(v).size() == 1);
      CHECK(s.graph.labels(v)[0] == static_cast<LabelId>(s.community[v]));
    } else {
      CHECK(s.graph.labels(v).empty());
    }
  }
  spec.p_out = spec.p_in;
  CHECK_THROWS_AS(generate_synthetic(spec, 2), Error);
}

TEST_CASE("with_links keeps nodes and schema") {
  const auto g = small_graph();
  const auto h = g.with_links({});
  CHECK(h.num_nodes() == g.num_nodes());
  CHECK(h.num_links() == 0);
  CHECK(h.schemas().size() == g.schemas().size());
}

TEST_CASE("planted same-type links carry no orientation") {
  SyntheticSpec spec;
  spec.nodes_per_type = {200};
  spec.communities = 2;
  spec.p_in = 0.1;
  spec.p_out = 0.02;
  spec.link_types = {{0, 0, false}};
  const auto g = generate_synthetic(spec, 6).graph;
  double forward = 0;
  for (const auto& l : g.links()) forward += l.src < l.dst;
  const double n = static_cast<double>(g.num_links());
  // Fair-coin orientation within five standard deviations.
  CHECK(std::abs(forward / n - 0.5) < 5 * std::sqrt(0.25 / n));
}
