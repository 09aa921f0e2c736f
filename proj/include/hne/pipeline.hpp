#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hne/eval.hpp"
#include "hne/graph.hpp"
#include "hne/sampler.hpp"
#include "hne/train_spec.hpp"

namespace hne {

/// Raised for invalid configuration; the CLI maps it to a usage error.
class ConfigError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string>& method_names();
bool is_valid_method(const std::string& name);

/// Flat `section.key -> value` settings.
using Settings = std::map<std::string, std::string>;

/// Parses `[section]` headers and `key = value` lines; `#` and `;` start
/// comments. Keys before any header land in section "run".
Settings parse_settings(const std::string& text, const std::string& origin = "config");
Settings read_settings(const std::filesystem::path& path);
/// Applies HNE_SECTION_KEY variables (for example HNE_TRAIN_DIM) from the
/// environment on top of `base`.
void apply_environment(Settings& base, char** envp);

struct RunConfig {
  // Data: either files or a synthetic spec.
  std::optional<std::filesystem::path> node_file;
  std::optional<std::filesystem::path> link_file;
  std::optional<std::filesystem::path> label_file;
  bool synthetic = false;
  SyntheticSpec synthetic_spec;

  std::string method = "metapath2vec";
  TrainSpec train;
  WalkConfig walk;
  /// Meta-paths as written ("T:L1,L2"); resolved against the loaded graph.
  std::vector<std::string> metapaths;
  bool use_attributes = true;

  bool node_classification = true;
  bool link_prediction = false;
  double holdout = 0.2;
  std::size_t repeats = 5;

  std::filesystem::path out_dir = "hne_out";
  std::uint64_t seed = 1;

  /// Canonical text of every field that can change results.
  std::string canonical() const;
  /// FNV-1a of canonical(), as 16 hex digits.
  std::string digest() const;
};

/// Builds a config from settings, filling per-method defaults for any
/// unset epochs and learning rate. Throws ConfigError on unknown keys, bad
/// values or an unknown method.
RunConfig make_run_config(const Settings& settings);

HeteroGraph load_input_graph(const RunConfig& cfg);
/// Resolves cfg.metapaths against g; with none given, one symmetric path
/// per link type (there and back for undirected links between two types).
std::vector<MetaPath> resolve_metapaths(const HeteroGraph& g, const RunConfig& cfg);

/// Trains cfg.method on g.
EmbeddingTable train_method(const HeteroGraph& g, const RunConfig& cfg);

struct PipelineResult {
  std::vector<EvalReport> reports;
  std::vector<std::filesystem::path> artifacts;
};

/// Loads or generates the graph, trains, evaluates and writes embeddings,
/// reports and manifest.json into cfg.out_dir. On failure a FAILED marker
/// holding the message is left behind and the error rethrown.
PipelineResult run_pipeline(const RunConfig& cfg);

enum class ReportFormat { json, table };

/// Methods x {macro_f1, micro_f1, auc, mrr} grid of mean and std. Throws on
/// an empty list, an unknown task, or two reports of the same method and task.
std::string emit_report(const std::vector<EvalReport>& reports, ReportFormat format);

}  // namespace hne
