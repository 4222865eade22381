#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhetoric/corpus.hpp"
#include "rhetoric/ensemble.hpp"
#include "rhetoric/llm_gateway.hpp"
#include "rhetoric/metrics.hpp"
#include "rhetoric/postprocess.hpp"
#include "rhetoric/prompting.hpp"

namespace rhetoric {

struct RunConfig {
  std::string run_name;
  std::string dataset_path;
  DatasetFormat dataset_format = DatasetFormat::Internal;
  std::string demo_store_path;
  BackendConfig backend;
  RunPolicy policy;
  ScopePolicy scope;
  std::string cache_dir;            // gateway cache; empty disables
  std::string embedding_cache_dir;  // empty disables
  std::string embedding_endpoint;   // only for http embedder ids
  std::string embedding_credential_env;
  int parallelism = 1;
  uint64_t seed = 0;
  bool clamp_k = true;  // clamp k to store size for small corpora
  std::string output_dir;
};

RunConfig run_config_from_json(const std::string& json_text);
// output_dir and cache locations are operational, not part of a run's
// identity, so `include_operational=false` (manifest form) drops them.
std::string run_config_to_json(const RunConfig& config, bool include_operational = true);

// Applies a shipped preset's backend + policy onto config.
void apply_run_preset(RunConfig& config, const std::string& preset_name);
std::vector<std::string> run_preset_names();

// One predictions.jsonl line: overall status plus full items; the file
// also carries the three per-track projections.
struct DocPrediction {
  std::string doc_id;
  std::string status;  // "ok" | gateway failure | parse_collapse | parse_quote
  std::vector<PredItem> items;
  std::string source_member;  // set by ensemble fallback output

  bool ok() const { return status == "ok"; }
};

void save_predictions(const std::vector<DocPrediction>& docs, const std::string& path);
std::vector<DocPrediction> load_predictions(const std::string& path);

struct RunSummary {
  std::string run_name;
  std::string backend_name;
  int docs = 0;
  PostprocessCounters counters;
  TokenUsage usage;
};

std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& json_text);

// Runs inference: builds per-group prompts, selects demos, calls the
// backend, post-processes, and writes raw.jsonl, predictions.jsonl,
// summary.json and manifest.json under config.output_dir.
RunSummary run_infer(const RunConfig& config);

// Re-runs a manifest into a fresh output directory; verifies input
// hashes first. Mock-backend runs reproduce byte-identical outputs.
RunSummary run_replay(const std::string& manifest_path, const std::string& output_dir);

struct EnsembleRunSpec {
  std::string name;
  std::string mode;  // "vote" | "fallback"
  int track = 1;
  EnsembleSpec spec;
};

EnsembleRunSpec ensemble_spec_from_json(const std::string& json_text);
EnsembleRunSpec ensemble_preset(const std::string& preset_name);
std::vector<std::string> ensemble_preset_names();

// member_files maps member run name -> predictions.jsonl path. Every
// member must cover the same documents. Writes the combined predictions
// and a manifest next to them.
void run_ensemble(const EnsembleRunSpec& spec,
                  const std::map<std::string, std::string>& member_files,
                  const std::string& output_dir);

// Failure-rate table (no-output %, parse-error %, wrong-type counts)
// over run summary files.
std::string error_report_table(const std::vector<std::string>& summary_paths);

// Projections of predictions per track, used by evaluate.
std::map<std::string, std::vector<PredItem>> predictions_by_doc(
    const std::vector<DocPrediction>& docs);

}  // namespace rhetoric
