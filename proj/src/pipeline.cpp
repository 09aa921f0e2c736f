#include "hne/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hne/embedding.hpp"
#include "hne/relational.hpp"
#include "hne/rgcn.hpp"
#include "hne/shallow.hpp"

#ifndef HNE_VERSION
#define HNE_VERSION "0.1.0"
#endif

namespace hne {

namespace {

using json = nlohmann::json;

const std::set<std::string> kSections = {"data", "synthetic", "train", "walk", "eval", "run"};

const std::set<std::string> kKeys = {
    "data.nodes",          "data.links",           "data.labels",         "data.synthetic",
    "synthetic.nodes_per_type", "synthetic.communities", "synthetic.p_in", "synthetic.p_out",
    "synthetic.link_types", "synthetic.label_type", "synthetic.attribute_dim", "synthetic.attribute_noise",
    "train.method",        "train.dim",            "train.learning_rate", "train.linear_decay",
    "train.negatives",     "train.epochs",         "train.edge_samples",  "train.margin",
    "train.norm",          "train.loss",           "train.layers",        "train.fanout",
    "train.batch_size",    "train.use_attributes", "walk.walks_per_node", "walk.walk_length",
    "walk.window",         "walk.metapaths",       "eval.node_classification", "eval.link_prediction",
    "eval.holdout",        "eval.repeats",         "run.seed",            "run.threads",
    "run.strict",          "run.out"};

const std::vector<std::string> kGridMetrics = {"macro_f1", "micro_f1", "auc", "mrr"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string shortest(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string list_methods() {
  std::string out;
  for (const auto& m : method_names()) out += (out.empty() ? "" : ", ") + m;
  return out;
}

bool is_shallow(const std::string& m) { return m == "metapath2vec" || m == "pte" || m == "hin2vec" || m == "heer"; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string dataset_label(const RunConfig& cfg) {
  if (cfg.synthetic) {
    std::string s = "synthetic";
    for (auto n : cfg.synthetic_spec.nodes_per_type) s += ":" + std::to_string(n);
    s += " seed " + std::to_string(cfg.seed);
    return s;
  }
  return cfg.link_file ? cfg.link_file->string() : "";
}

}  // namespace

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"metapath2vec", "pte",     "hin2vec", "heer",  "transe",
                                                 "distmult",     "complex", "rotate",  "rgcn"};
  return names;
}

bool is_valid_method(const std::string& name) {
  const auto& n = method_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings out;
  std::string section = "run";
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!kSections.contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const auto key = section + "." + trim(line.substr(0, eq));
    if (!kKeys.contains(key)) throw ConfigError(where + "unknown key " + key);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str(), path.string());
}

void apply_environment(Settings& base, char** envp) {
  if (!envp) return;
  for (char** e = envp; *e; ++e) {
    const std::string entry(*e);
    if (!entry.starts_with("HNE_")) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(4, eq - 4);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto us = name.find('_');
    if (us == std::string::npos) continue;
    const auto section = name.substr(0, us);
    if (!kSections.contains(section)) continue;
    const auto key = section + "." + name.substr(us + 1);
    if (!kKeys.contains(key)) throw ConfigError("environment variable " + entry.substr(0, eq) + " names no setting");
    base[key] = entry.substr(eq + 1);
  }
}

RunConfig make_run_config(const Settings& s) {
  for (const auto& [k, v] : s) {
    if (!kKeys.contains(k)) throw ConfigError("unknown setting " + k);
  }
  auto get = [&s](const std::string& key) -> std::optional<std::string> {
    auto it = s.find(key);
    if (it == s.end()) return std::nullopt;
    return it->second;
  };
  auto num = [&]<typename T>(const std::string& key, T& field) {
    if (auto v = get(key)) field = parse_number<T>(key, *v);
  };
  auto flag = [&](const std::string& key, bool& field) {
    if (auto v = get(key)) field = parse_bool(key, *v);
  };

  RunConfig cfg;
  if (auto v = get("train.method")) cfg.method = *v;
  if (!is_valid_method(cfg.method)) {
    throw ConfigError("unknown method '" + cfg.method + "'; valid methods: " + list_methods());
  }

  if (auto v = get("data.nodes")) cfg.node_file = *v;
  if (auto v = get("data.links")) cfg.link_file = *v;
  if (auto v = get("data.labels")) cfg.label_file = *v;
  cfg.synthetic = !cfg.link_file;
  flag("data.synthetic", cfg.synthetic);
  if (!cfg.synthetic && (!cfg.node_file || !cfg.link_file)) {
    throw ConfigError("file input needs both data.nodes and data.links");
  }

  auto& sy = cfg.synthetic_spec;
  sy.nodes_per_type = {500, 500};
  sy.communities = 4;
  sy.p_in = 0.05;
  sy.p_out = 0.002;
  sy.link_types = {{0, 1, false}, {0, 0, false}};
  if (auto v = get("synthetic.nodes_per_type")) {
    sy.nodes_per_type.clear();
    for (const auto& item : split(*v, ',')) sy.nodes_per_type.push_back(parse_number<std::size_t>("synthetic.nodes_per_type", item));
  }
  num("synthetic.communities", sy.communities);
  num("synthetic.p_in", sy.p_in);
  num("synthetic.p_out", sy.p_out);
  if (auto v = get("synthetic.link_types")) {
    sy.link_types.clear();
    for (const auto& item : split(*v, ',')) {
      const auto sep = item.find_first_of("->");
      if (sep == std::string::npos) throw ConfigError("synthetic.link_types: expected SRC-DST or SRC>DST, got '" + item + "'");
      SyntheticLinkType lt;
      lt.src_type = parse_number<std::int64_t>("synthetic.link_types", item.substr(0, sep));
      lt.dst_type = parse_number<std::int64_t>("synthetic.link_types", item.substr(sep + 1));
      lt.directed = item[sep] == '>';
      sy.link_types.push_back(lt);
    }
  }
  num("synthetic.label_type", sy.label_type);
  num("synthetic.attribute_dim", sy.attribute_dim);
  num("synthetic.attribute_noise", sy.attribute_noise);
  if (sy.nodes_per_type.empty() || sy.link_types.empty()) throw ConfigError("synthetic graph needs node and link types");
  if (!(sy.p_in > sy.p_out)) throw ConfigError("synthetic.p_in must exceed synthetic.p_out");

  auto& t = cfg.train;
  const bool relational = parse_relation_kind(cfg.method).has_value();
  if (is_shallow(cfg.method)) {
    t.epochs = 5;
    t.learning_rate = 0.025;
  } else if (relational) {
    t.epochs = 100;
    t.learning_rate = 0.01;
  } else {
    t.epochs = 20;
    t.learning_rate = 0.01;
  }
  num("train.dim", t.dim);
  num("train.learning_rate", t.learning_rate);
  flag("train.linear_decay", t.linear_decay);
  num("train.negatives", t.negatives);
  num("train.epochs", t.epochs);
  num("train.edge_samples", t.edge_samples_per_link);
  num("train.margin", t.margin);
  num("train.norm", t.norm_p);
  if (auto v = get("train.loss")) {
    t.loss_mode_set = true;
    if (*v == "margin") {
      t.loss_mode = LossMode::margin;
    } else if (*v == "log_sigmoid") {
      t.loss_mode = LossMode::log_sigmoid;
    } else {
      throw ConfigError("train.loss: expected margin or log_sigmoid, got '" + *v + "'");
    }
  }
  num("train.layers", t.layers);
  num("train.fanout", t.fanout);
  num("train.batch_size", t.batch_size);
  flag("train.use_attributes", cfg.use_attributes);

  num("walk.walks_per_node", cfg.walk.walks_per_node);
  num("walk.walk_length", cfg.walk.walk_length);
  num("walk.window", cfg.walk.window);
  if (auto v = get("walk.metapaths")) cfg.metapaths = split(*v, ';');

  flag("eval.node_classification", cfg.node_classification);
  flag("eval.link_prediction", cfg.link_prediction);
  num("eval.holdout", cfg.holdout);
  num("eval.repeats", cfg.repeats);
  if (!(cfg.holdout > 0.0 && cfg.holdout < 1.0)) throw ConfigError("eval.holdout must be in (0, 1)");
  if (cfg.repeats == 0) throw ConfigError("eval.repeats must be positive");

  num("run.seed", cfg.seed);
  num("run.threads", t.threads);
  flag("run.strict", t.strict);
  if (auto v = get("run.out")) cfg.out_dir = *v;
  if (t.threads < 1) throw ConfigError("run.threads must be positive");

  t.seed = cfg.seed;
  cfg.walk.seed = cfg.seed;
  try {
    t.validate();
    cfg.walk.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string RunConfig::canonical() const {
  std::ostringstream o;
  if (synthetic) {
    o << "synthetic.nodes_per_type=";
    for (auto n : synthetic_spec.nodes_per_type) o << n << ",";
    o << "\nsynthetic.communities=" << synthetic_spec.communities << "\nsynthetic.p_in=" << shortest(synthetic_spec.p_in)
      << "\nsynthetic.p_out=" << shortest(synthetic_spec.p_out) << "\nsynthetic.link_types=";
    for (const auto& lt : synthetic_spec.link_types) o << lt.src_type << (lt.directed ? ">" : "-") << lt.dst_type << ",";
    o << "\nsynthetic.label_type=" << synthetic_spec.label_type << "\nsynthetic.attribute_dim="
      << synthetic_spec.attribute_dim << "\nsynthetic.attribute_noise=" << shortest(synthetic_spec.attribute_noise)
      << "\n";
  } else {
    o << "data.nodes=" << node_file->string() << "\ndata.links=" << link_file->string()
      << "\ndata.labels=" << (label_file ? label_file->string() : "") << "\n";
  }
  o << "train.method=" << method << "\ntrain.dim=" << train.dim << "\ntrain.learning_rate="
    << shortest(train.learning_rate) << "\ntrain.linear_decay=" << train.linear_decay
    << "\ntrain.negatives=" << train.negatives << "\ntrain.epochs=" << train.epochs;
  if (is_shallow(method)) {
    o << "\ntrain.edge_samples=" << shortest(train.edge_samples_per_link) << "\nwalk.walks_per_node="
      << walk.walks_per_node << "\nwalk.walk_length=" << walk.walk_length << "\nwalk.window=" << walk.window
      << "\nwalk.metapaths=";
    for (const auto& m : metapaths) o << m << ";";
  } else if (method == "rgcn") {
    o << "\ntrain.layers=" << train.layers << "\ntrain.fanout=" << train.fanout << "\ntrain.batch_size="
      << train.batch_size << "\ntrain.use_attributes=" << use_attributes;
  } else {
    o << "\ntrain.margin=" << shortest(train.margin) << "\ntrain.norm=" << train.norm_p << "\ntrain.loss="
      << (train.loss_mode_set ? (train.loss_mode == LossMode::margin ? "margin" : "log_sigmoid") : "default");
  }
  o << "\neval.node_classification=" << node_classification << "\neval.link_prediction=" << link_prediction
    << "\neval.holdout=" << shortest(holdout) << "\neval.repeats=" << repeats << "\nrun.seed=" << seed
    << "\nrun.strict=" << train.strict << "\n";
  if (!train.strict) o << "run.threads=" << train.threads << "\n";
  return o.str();
}

std::string RunConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

HeteroGraph load_input_graph(const RunConfig& cfg) {
  if (cfg.synthetic) return generate_synthetic(cfg.synthetic_spec, cfg.seed).graph;
  return load_graph(*cfg.node_file, *cfg.link_file, cfg.label_file, cfg.method == "rgcn" && cfg.use_attributes);
}

std::vector<MetaPath> resolve_metapaths(const HeteroGraph& g, const RunConfig& cfg) {
  std::vector<MetaPath> out;
  try {
    for (const auto& text : cfg.metapaths) out.push_back(MetaPath::parse(g, text));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!out.empty()) return out;
  for (LinkTypeId l = 0; l < g.num_link_types(); ++l) {
    const auto& s = g.schema(l);
    if (s.src_type == s.dst_type) {
      out.push_back(MetaPath::resolve(g, s.src_type, {l}));
    } else if (!s.directed) {
      out.push_back(MetaPath::resolve(g, s.src_type, {l, l}));
    }
  }
  if (out.empty()) throw ConfigError("no default meta-path exists; set walk.metapaths");
  return out;
}

EmbeddingTable train_method(const HeteroGraph& g, const RunConfig& cfg) {
  if (cfg.method == "rgcn") return train_rgcn(g, cfg.train, cfg.use_attributes).embeddings;
  if (auto kind = parse_relation_kind(cfg.method)) return train_relational(g, *kind, cfg.train).embeddings;
  const ShallowFamily family = cfg.method == "metapath2vec" ? ShallowFamily::metapath2vec
                               : cfg.method == "pte"        ? ShallowFamily::pte
                               : cfg.method == "hin2vec"    ? ShallowFamily::hin2vec
                                                            : ShallowFamily::heer;
  WalkConfig walk = cfg.walk;
  walk.metapaths.clear();
  if (family == ShallowFamily::metapath2vec) walk.metapaths = resolve_metapaths(g, cfg);
  return train_shallow(g, ShallowModelSpec::of(family), cfg.train, walk).embeddings;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  if (!is_valid_method(cfg.method)) {
    throw ConfigError("unknown method '" + cfg.method + "'; valid methods: " + list_methods());
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path failed = cfg.out_dir / "FAILED";
  fs::remove(failed);
  const auto start = std::chrono::steady_clock::now();
  PipelineResult result;
  try {
    const HeteroGraph g = load_input_graph(cfg);
    if (cfg.method == "metapath2vec" || !cfg.metapaths.empty()) resolve_metapaths(g, cfg);
    EvalOptions eval_opts;
    eval_opts.repeats = cfg.repeats;
    eval_opts.threads = cfg.train.workers();

    auto write = [&](const std::string& name, const std::string& text) {
      write_text(cfg.out_dir / name, text);
      result.artifacts.push_back(cfg.out_dir / name);
    };
    auto add_report = [&](EvalReport report, const std::string& stem) {
      report.method = cfg.method;
      report.config_digest = cfg.digest();
      report.metadata["dataset"] = dataset_label(cfg);
      write(stem + ".json", report_to_json(report) + "\n");
      write(stem + ".txt", report_to_text(report));
      result.reports.push_back(std::move(report));
    };

    const EmbeddingTable emb = train_method(g, cfg);
    write("embeddings.txt", format_embeddings(g, emb));
    if (cfg.node_classification && g.has_labels()) {
      add_report(run_node_classification(emb, g, cfg.seed, eval_opts), "report_node_classification");
    }
    if (cfg.link_prediction) {
      const LinkSplit split = split_links(g, cfg.holdout, cfg.seed);
      const EmbeddingTable lp_emb = train_method(split.train, cfg);
      write("embeddings_link_prediction.txt", format_embeddings(g, lp_emb));
      add_report(run_link_prediction(lp_emb, split, g, cfg.seed, eval_opts), "report_link_prediction");
    }

    json manifest;
    manifest["version"] = HNE_VERSION;
    manifest["method"] = cfg.method;
    manifest["config_digest"] = cfg.digest();
    manifest["config"] = cfg.canonical();
    manifest["seeds"] = {{"global", cfg.seed}, {"train", cfg.train.seed}, {"walk", cfg.walk.seed}};
    std::vector<std::uint64_t> eval_seeds;
    for (std::size_t r = 0; r < cfg.repeats; ++r) eval_seeds.push_back(cfg.seed + r);
    manifest["seeds"]["eval"] = eval_seeds;
    manifest["strict"] = cfg.train.strict;
    manifest["threads"] = cfg.train.workers();
    manifest["graph"] = {{"nodes", g.num_nodes()}, {"links", g.num_links()}, {"node_types", g.num_node_types()},
                         {"link_types", g.num_link_types()}};
    if (cfg.node_classification && !g.has_labels()) manifest["skipped"] = {"node_classification: graph has no labels"};
    const fs::path manifest_path = cfg.out_dir / "manifest.json";
    result.artifacts.push_back(manifest_path);
    std::vector<std::string> names;
    for (const auto& a : result.artifacts) names.push_back(a.filename().string());
    manifest["artifacts"] = names;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(manifest_path, manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::ofstream marker(failed);
    marker << e.what() << "\n";
    throw;
  }
  return result;
}

std::string emit_report(const std::vector<EvalReport>& reports, ReportFormat format) {
  if (reports.empty()) throw Error("no reports to render");
  std::vector<std::string> methods;
  std::map<std::string, std::map<std::string, std::pair<double, double>>> cells;
  std::set<std::pair<std::string, std::string>> seen;
  const std::string dataset = reports.front().metadata.contains("dataset") ? reports.front().metadata.at("dataset") : "";
  for (const auto& r : reports) {
    if (r.task != "node_classification" && r.task != "link_prediction") throw Error("unknown report task '" + r.task + "'");
    const std::string ds = r.metadata.contains("dataset") ? r.metadata.at("dataset") : "";
    if (ds != dataset) throw Error("reports come from different datasets: '" + dataset + "' and '" + ds + "'");
    if (!seen.insert({r.method, r.task}).second) throw Error("duplicate " + r.task + " report for " + r.method);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    for (const auto& [name, values] : r.metrics) {
      if (std::find(kGridMetrics.begin(), kGridMetrics.end(), name) == kGridMetrics.end()) continue;
      cells[r.method][name] = {r.mean(name), r.stddev(name)};
    }
  }

  if (format == ReportFormat::json) {
    json j;
    j["dataset"] = dataset;
    j["metrics"] = kGridMetrics;
    j["rows"] = json::array();
    for (const auto& m : methods) {
      json row;
      row["method"] = m;
      for (const auto& metric : kGridMetrics) {
        auto it = cells[m].find(metric);
        row[metric] = it == cells[m].end() ? json(nullptr) : json{{"mean", it->second.first}, {"std", it->second.second}};
      }
      j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
  }

  std::size_t width = 6;
  for (const auto& m : methods) width = std::max(width, m.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  const std::size_t cell = 16;
  std::string out = pad("method", width);
  for (const auto& metric : kGridMetrics) out += "  " + pad(metric, cell);
  out += "\n";
  char buf[64];
  for (const auto& m : methods) {
    out += pad(m, width);
    for (const auto& metric : kGridMetrics) {
      auto it = cells[m].find(metric);
      if (it == cells[m].end()) {
        out += "  " + pad("-", cell);
      } else {
        std::snprintf(buf, sizeof buf, "%.4f +- %.4f", it->second.first, it->second.second);
        out += "  " + pad(buf, cell);
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
  }
  return out;
}

}  // namespace hne
