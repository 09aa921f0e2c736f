#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hne/embedding.hpp"
#include "hne/eval.hpp"
#include "hne/graph.hpp"
#include "hne/pipeline.hpp"

extern char** environ;

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<bool> strict;
  std::string out;
  std::string method;
  std::vector<std::string> set;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Sectioned key = value config file");
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--threads", f.threads, "Worker threads (ignored in strict mode)");
  cmd->add_flag("--strict,!--no-strict", f.strict, "Single worker, deterministic output (default on)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--set", f.set, "Override a setting: section.key=value");
}

hne::Settings gather_settings(const CommonFlags& f) {
  hne::Settings s;
  if (!f.config.empty()) s = hne::read_settings(f.config);
  hne::apply_environment(s, environ);
  for (const auto& item : f.set) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw hne::ConfigError("--set expects section.key=value, got '" + item + "'");
    s[item.substr(0, eq)] = item.substr(eq + 1);
  }
  if (!f.method.empty()) s["train.method"] = f.method;
  if (f.seed) s["run.seed"] = std::to_string(*f.seed);
  if (f.threads) s["run.threads"] = std::to_string(*f.threads);
  if (f.strict) s["run.strict"] = *f.strict ? "true" : "false";
  if (!f.out.empty()) s["run.out"] = f.out;
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hne::Error("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw hne::Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_graph_dir(const hne::HeteroGraph& g, const fs::path& dir, const std::string& summary_source) {
  fs::create_directories(dir);
  const bool labels = g.has_labels();
  hne::save_graph(g, dir / "nodes.tsv", dir / "links.tsv",
                  labels ? std::optional<fs::path>(dir / "labels.tsv") : std::nullopt);
  hne::save_id_map(g, dir / "id_map.tsv");
  nlohmann::json summary;
  summary["source"] = summary_source;
  summary["nodes"] = g.num_nodes();
  summary["links"] = g.num_links();
  summary["node_types"] = g.num_node_types();
  summary["link_types"] = g.num_link_types();
  std::vector<std::string> files = {"nodes.tsv", "links.tsv", "id_map.tsv", "summary.json"};
  if (labels) files.insert(files.begin() + 2, "labels.tsv");
  summary["artifacts"] = files;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

int cmd_generate(const CommonFlags& f) {
  auto cfg = hne::make_run_config(gather_settings(f));
  const auto g = hne::generate_synthetic(cfg.synthetic_spec, cfg.seed).graph;
  write_graph_dir(g, cfg.out_dir, "synthetic seed " + std::to_string(cfg.seed));
  std::cout << "wrote " << g.num_nodes() << " nodes and " << g.num_links() << " links to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_ingest(const CommonFlags& f, const std::string& nodes, const std::string& links, const std::string& labels) {
  auto cfg = hne::make_run_config(gather_settings(f));
  const auto g = hne::load_graph(nodes, links, labels.empty() ? std::nullopt : std::optional<fs::path>(labels));
  write_graph_dir(g, cfg.out_dir, links);
  std::cout << "ingested " << g.num_nodes() << " nodes, " << g.num_links() << " links, " << g.num_node_types()
            << " node types, " << g.num_link_types() << " link types into " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonFlags& f) {
  const auto cfg = hne::make_run_config(gather_settings(f));
  const auto result = hne::run_pipeline(cfg);
  for (const auto& r : result.reports) std::cout << hne::report_to_text(r) << "\n";
  std::cout << "artifacts in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& embeddings, const std::string& task) {
  const auto cfg = hne::make_run_config(gather_settings(f));
  const auto g = hne::load_input_graph(cfg);
  const auto emb = hne::read_embeddings(g, embeddings);
  hne::EvalOptions opts;
  opts.repeats = cfg.repeats;
  opts.threads = cfg.train.workers();
  hne::EvalReport report;
  if (task == "node_classification") {
    report = hne::run_node_classification(emb, g, cfg.seed, opts);
  } else {
    const auto split = hne::split_links(g, cfg.holdout, cfg.seed);
    report = hne::run_link_prediction(emb, split, g, cfg.seed, opts);
  }
  report.method = cfg.method;
  report.config_digest = cfg.digest();
  fs::create_directories(cfg.out_dir);
  write_file(cfg.out_dir / ("report_" + task + ".json"), hne::report_to_json(report) + "\n");
  write_file(cfg.out_dir / ("report_" + task + ".txt"), hne::report_to_text(report));
  std::cout << hne::report_to_text(report);
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format, const std::string& out) {
  std::vector<hne::EvalReport> reports;
  for (const auto& path : inputs) reports.push_back(hne::report_from_json(read_file(path)));
  const auto text = hne::emit_report(reports, format == "json" ? hne::ReportFormat::json : hne::ReportFormat::table);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous network embedding: generate, ingest, train, eval, report"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HNE_VERSION);

  CommonFlags gen_f, ing_f, train_f, eval_f;
  auto* gen = app.add_subcommand("generate", "Write a planted-partition synthetic graph");
  add_common(gen, gen_f);

  auto* ing = app.add_subcommand("ingest", "Validate and normalize node/link/label files");
  add_common(ing, ing_f);
  std::string nodes, links, labels;
  ing->add_option("--nodes", nodes, "Node file")->required();
  ing->add_option("--links", links, "Link file")->required();
  ing->add_option("--labels", labels, "Label file");

  auto* train = app.add_subcommand("train", "Train a method, evaluate, and write a run manifest");
  add_common(train, train_f);
  train->add_option("--method", train_f.method, "One of: metapath2vec, pte, hin2vec, heer, transe, distmult, complex, rotate, rgcn");

  auto* ev = app.add_subcommand("eval", "Evaluate an embedding file");
  add_common(ev, eval_f);
  std::string embeddings, task = "node_classification";
  ev->add_option("--embeddings", embeddings, "Embedding file")->required();
  ev->add_option("--task", task, "node_classification or link_prediction")
      ->check(CLI::IsMember({"node_classification", "link_prediction"}));

  auto* rep = app.add_subcommand("report", "Render report JSON files as a methods x metrics grid");
  std::vector<std::string> inputs;
  std::string format = "table", rep_out;
  rep->add_option("reports", inputs, "Report JSON files")->required();
  rep->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));
  rep->add_option("--out", rep_out, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_generate(gen_f);
    if (*ing) return cmd_ingest(ing_f, nodes, links, labels);
    if (*train) return cmd_train(train_f);
    if (*ev) return cmd_eval(eval_f, embeddings, task);
    if (*rep) return cmd_report(inputs, format, rep_out);
  } catch (const hne::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
