#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rhetoric/corpus.hpp"
#include "rhetoric/digest.hpp"
#include "rhetoric/metrics.hpp"
#include "rhetoric/prompt_asset.hpp"
#include "rhetoric/prompting.hpp"
#include "rhetoric/runner.hpp"

namespace {

using namespace rhetoric;

// Data-preparation commands write "<output>.manifest.json" so any
// artifact can be traced back to its inputs.
void write_artifact_manifest(const std::string& command, const std::string& input,
                             const std::string& output,
                             const std::map<std::string, std::string>& extra = {}) {
  nlohmann::ordered_json j;
  j["format"] = "rhetoric-artifact-manifest";
  j["command"] = command;
  j["input"] = {{"path", input}, {"sha256", sha256_file_hex(input)}};
  j["output"] = {{"path", output}, {"sha256", sha256_file_hex(output)}};
  for (const auto& [k, v] : extra) j[k] = v;
  std::ofstream out(output + ".manifest.json");
  out << j.dump(2) << "\n";
}

DatasetFormat format_from(const std::string& s) {
  if (s == "official") return DatasetFormat::Official;
  if (s == "internal") return DatasetFormat::Internal;
  throw CLI::ValidationError("--format must be official or internal");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_prepare_data(const std::string& input, const std::string& format,
                     const std::string& output) {
  const auto instances = load_dataset(input, format_from(format));
  save_dataset(instances, output);
  write_artifact_manifest("prepare-data", input, output);
  std::cout << "wrote " << instances.size() << " instances to " << output << "\n";
  return 0;
}

int cmd_stats(const std::string& data, const std::string& format, bool as_json) {
  const auto instances = load_dataset(data, format_from(format));
  const CorpusStats stats = compute_stats(instances);
  if (as_json) {
    std::cout << stats_to_json(stats) << "\n";
    return 0;
  }
  std::cout << "instances:        " << stats.instances << "\n";
  std::cout << "form devices:     " << stats.form_devices << "\n";
  std::cout << "content devices:  " << stats.content_devices << "\n";
  std::cout << "components:       " << stats.components << "\n";
  std::printf("avg characters:   %.6g\n", stats.avg_chars);
  std::printf("avg sentences:    %.6g\n", stats.avg_sentences);
  const auto& tax = Taxonomy::instance();
  auto print_track = [&](int track, const char* label,
                         const std::map<std::string, int>& counts) {
    std::cout << label << ":\n";
    for (const auto& entry : tax.coarse) {
      const auto& fines = track == kTrackForm ? entry.form_fines : entry.content_fines;
      if (fines.empty()) continue;
      std::cout << "  " << entry.name << ": ";
      bool first = true;
      for (const auto& fine : fines) {
        const auto it = counts.find(fine);
        if (!first) std::cout << ", ";
        first = false;
        std::cout << fine << ":" << (it == counts.end() ? 0 : it->second);
      }
      const ModalFine modal = modal_fine_type(stats, entry.name, track);
      std::cout << "  (modal: " << modal.fine
                << (modal.taxonomy_default ? ", taxonomy default)" : ")") << "\n";
    }
  };
  print_track(kTrackForm, "form-level counts", stats.form_fine_counts);
  print_track(kTrackContent, "content-level counts", stats.content_fine_counts);
  return 0;
}

int cmd_build_demos(const std::string& data, const std::string& format,
                    const std::string& output, const std::string& embedder_kind,
                    uint64_t seed, const std::string& endpoint, const std::string& model,
                    std::size_t dimension, const std::string& credential_env,
                    const std::string& cache_dir) {
  const auto instances = load_dataset(data, format_from(format));
  std::unique_ptr<Embedder> embedder;
  if (embedder_kind == "hash") {
    embedder = std::make_unique<HashEmbedder>(seed);
  } else if (embedder_kind == "http") {
    if (endpoint.empty()) throw std::runtime_error("--endpoint required for http embedder");
    embedder = std::make_unique<HttpEmbedder>(endpoint, model, dimension, credential_env);
  } else {
    throw std::runtime_error("--embedder must be hash or http");
  }
  std::optional<EmbeddingCache> cache;
  if (!cache_dir.empty()) cache.emplace(cache_dir);
  const DemoStore store = build_demo_store(instances, *embedder, cache ? &*cache : nullptr);
  save_demo_store(store, output);
  write_artifact_manifest("build-demos", data, output, {{"embedder", store.embedder_id}});
  std::cout << "demo store: " << instances.size() << " entries x " << store.groups.size()
            << " groups, embedder " << store.embedder_id << " -> " << output << "\n";
  return 0;
}

int cmd_export_train(const std::string& data, const std::string& format,
                     const std::string& output, const std::string& prompt_version) {
  const auto instances = load_dataset(data, format_from(format));
  const std::string system_prompt =
      build_system_prompt(prompt_version, Taxonomy::instance().coarse_names());
  export_training_jsonl(instances, system_prompt, output);
  write_artifact_manifest("export-train", data, output,
                          {{"prompt_version", prompt_version}});
  std::cout << "wrote " << instances.size() << " training lines to " << output
            << " (+ recipe sidecar)\n";
  return 0;
}

int cmd_infer(const std::string& config_path, const std::string& preset,
              const std::map<std::string, std::string>& overrides) {
  RunConfig config;
  if (!config_path.empty()) config = run_config_from_json(read_file(config_path));
  if (!preset.empty()) apply_run_preset(config, preset);

  auto s = [&](const char* key) { return overrides.count(key) ? overrides.at(key) : ""; };
  if (!s("dataset").empty()) config.dataset_path = s("dataset");
  if (!s("dataset_format").empty()) config.dataset_format = format_from(s("dataset_format"));
  if (!s("demos").empty()) config.demo_store_path = s("demos");
  if (!s("output_dir").empty()) config.output_dir = s("output_dir");
  if (!s("backend_kind").empty()) config.backend.kind = s("backend_kind");
  if (!s("backend_name").empty()) config.backend.name = s("backend_name");
  if (!s("fixture").empty()) config.backend.fixture_path = s("fixture");
  if (!s("endpoint").empty()) config.backend.endpoint = s("endpoint");
  if (!s("credential_env").empty()) config.backend.credential_env = s("credential_env");
  if (!s("cache_dir").empty()) config.cache_dir = s("cache_dir");
  if (!s("k").empty()) config.policy.k = std::stoi(s("k"));
  if (!s("partition").empty()) config.policy.partition = partition_from_string(s("partition"));
  if (!s("instruct").empty()) config.policy.instruct = s("instruct");
  if (!s("parallelism").empty()) config.parallelism = std::stoi(s("parallelism"));
  if (!s("seed").empty()) config.seed = std::stoull(s("seed"));
  if (!s("run_name").empty()) config.run_name = s("run_name");
  if (overrides.count("no_clamp_k")) config.clamp_k = false;
  if (config.backend.name.empty()) config.backend.name = config.backend.kind;
  if (config.run_name.empty()) config.run_name = config.backend.name;

  const RunSummary summary = run_infer(config);
  std::cout << "run " << summary.run_name << ": " << summary.docs << " documents, "
            << summary.counters.replies << " replies\n";
  std::cout << "  failures: no_output=" << summary.counters.gateway_no_output
            << " refusal=" << summary.counters.gateway_refusal
            << " timeout=" << summary.counters.gateway_timeout
            << " protocol=" << summary.counters.gateway_protocol_error
            << " parse=" << summary.counters.parse_collapse + summary.counters.parse_quote_error
            << "\n";
  std::cout << "  records: parsed=" << summary.counters.records_parsed
            << " repaired_replies=" << summary.counters.repaired_replies
            << " wrong_coarse=" << summary.counters.wrong_coarse_type
            << " wrong_fine=" << summary.counters.wrong_fine_type << "\n";
  std::cout << "  tokens: prompt=" << summary.usage.prompt_tokens
            << " completion=" << summary.usage.completion_tokens << "\n";
  std::cout << "  outputs in " << config.output_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& gold,
                 const std::string& gold_format, int track, bool relaxed, bool as_json,
                 bool per_doc, const std::string& out_path) {
  const auto instances = load_dataset(gold, format_from(gold_format));
  const auto predictions = load_predictions(pred);
  const EvalReport report =
      evaluate(instances, predictions_by_doc(predictions), track, relaxed);
  const std::string text = as_json ? report_json(report, per_doc) : report_table(report);
  std::cout << text;
  if (!as_json) std::cout.flush();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write report: " + out_path);
    out << report_json(report, per_doc) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chinese essay rhetoric recognition pipeline"};
  app.require_subcommand(1);

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data", "Normalize a dataset into the internal format");
  std::string prep_input, prep_format = "official", prep_output;
  prep->add_option("--input", prep_input, "input dataset")->required();
  prep->add_option("--format", prep_format, "official|internal");
  prep->add_option("--output", prep_output, "output path")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Training-set statistics");
  std::string stats_data, stats_format = "internal";
  bool stats_json = false;
  stats->add_option("--data", stats_data, "dataset path")->required();
  stats->add_option("--format", stats_format, "official|internal");
  stats->add_flag("--json", stats_json, "machine-readable output");

  // build-demos
  auto* demos = app.add_subcommand("build-demos", "Build the demonstration store");
  std::string demos_data, demos_format = "internal", demos_output;
  std::string demos_embedder = "hash", demos_endpoint, demos_model = "text-embedding-v3";
  std::string demos_cred = "DASHSCOPE_API_KEY", demos_cache;
  uint64_t demos_seed = 0;
  std::size_t demos_dim = 1024;
  demos->add_option("--data", demos_data, "training dataset")->required();
  demos->add_option("--format", demos_format, "official|internal");
  demos->add_option("--output", demos_output, "store output path")->required();
  demos->add_option("--embedder", demos_embedder, "hash|http");
  demos->add_option("--seed", demos_seed, "hash embedder seed");
  demos->add_option("--endpoint", demos_endpoint, "embedding endpoint (http)");
  demos->add_option("--model", demos_model, "embedding model id (http)");
  demos->add_option("--dimension", demos_dim, "embedding dimension (http)");
  demos->add_option("--credential-env", demos_cred, "env var with the API key (http)");
  demos->add_option("--cache-dir", demos_cache, "embedding cache directory");

  // export-train
  auto* train = app.add_subcommand("export-train", "Export fine-tuning JSONL + recipe");
  std::string train_data, train_format = "internal", train_output, train_prompt = "v1";
  train->add_option("--data", train_data, "training dataset")->required();
  train->add_option("--format", train_format, "official|internal");
  train->add_option("--output", train_output, "JSONL output path")->required();
  train->add_option("--prompt-version", train_prompt, "system prompt version");

  // infer
  auto* infer = app.add_subcommand("infer", "Run inference and post-processing");
  std::string infer_config, infer_preset;
  std::map<std::string, std::string> ov;
  std::string ov_dataset, ov_dataset_format, ov_demos, ov_output, ov_kind, ov_name,
      ov_fixture, ov_endpoint, ov_cred, ov_cache, ov_k, ov_partition, ov_instruct,
      ov_parallelism, ov_seed, ov_run;
  bool ov_no_clamp = false;
  infer->add_option("--config", infer_config, "full run config JSON");
  infer->add_option("--preset", infer_preset, "shipped preset name");
  infer->add_option("--dataset", ov_dataset, "documents to run on");
  infer->add_option("--dataset-format", ov_dataset_format, "official|internal");
  infer->add_option("--demos", ov_demos, "demo store path");
  infer->add_option("--output-dir", ov_output, "run output directory");
  infer->add_option("--backend-kind", ov_kind, "mock|http (overrides preset)");
  infer->add_option("--backend-name", ov_name, "backend display name");
  infer->add_option("--fixture", ov_fixture, "mock fixture path");
  infer->add_option("--endpoint", ov_endpoint, "chat completion endpoint");
  infer->add_option("--credential-env", ov_cred, "env var with the API key");
  infer->add_option("--cache-dir", ov_cache, "gateway cache directory");
  infer->add_option("--k", ov_k, "demo count");
  infer->add_option("--partition", ov_partition, "JOIN|SEPA");
  infer->add_option("--instruct", ov_instruct, "extra test-turn instruction");
  infer->add_option("--parallelism", ov_parallelism, "parallel requests");
  infer->add_option("--seed", ov_seed, "run seed");
  infer->add_option("--run-name", ov_run, "run name in outputs");
  infer->add_flag("--no-clamp-k", ov_no_clamp, "error instead of clamping k to store size");

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "Combine member runs (vote or fallback)");
  std::string ens_spec, ens_preset, ens_output;
  std::vector<std::string> ens_inputs;
  ens->add_option("--spec", ens_spec, "ensemble spec JSON file");
  ens->add_option("--preset", ens_preset, "shipped ensemble preset name");
  ens->add_option("--input", ens_inputs, "member=predictions.jsonl (repeatable)");
  ens->add_option("--output-dir", ens_output, "output directory")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score predictions against gold");
  std::string eval_pred, eval_gold, eval_gold_format = "internal", eval_out;
  int eval_track = 1;
  bool eval_relaxed = false, eval_json = false, eval_per_doc = false;
  eval->add_option("--pred", eval_pred, "predictions.jsonl")->required();
  eval->add_option("--gold", eval_gold, "gold dataset")->required();
  eval->add_option("--gold-format", eval_gold_format, "official|internal");
  eval->add_option("--track", eval_track, "1|2|3")->required();
  eval->add_flag("--relaxed-spans", eval_relaxed, "track-3 text-only span equality");
  eval->add_flag("--json", eval_json, "JSON report on stdout");
  eval->add_flag("--per-doc", eval_per_doc, "include per-document diagnostics");
  eval->add_option("--out", eval_out, "also write JSON report here");

  // error-report
  auto* errrep = app.add_subcommand("error-report", "Failure-rate table across runs");
  std::vector<std::string> err_summaries;
  errrep->add_option("--summary", err_summaries, "summary.json paths (repeatable)")
      ->required();

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a manifest into a new directory");
  std::string replay_manifest, replay_output;
  replay->add_option("--manifest", replay_manifest, "manifest.json path")->required();
  replay->add_option("--output-dir", replay_output, "new output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prep->parsed()) return cmd_prepare_data(prep_input, prep_format, prep_output);
    if (stats->parsed()) return cmd_stats(stats_data, stats_format, stats_json);
    if (demos->parsed()) {
      return cmd_build_demos(demos_data, demos_format, demos_output, demos_embedder,
                             demos_seed, demos_endpoint, demos_model, demos_dim, demos_cred,
                             demos_cache);
    }
    if (train->parsed()) {
      return cmd_export_train(train_data, train_format, train_output, train_prompt);
    }
    if (infer->parsed()) {
      auto set = [&](const char* key, const std::string& v) {
        if (!v.empty()) ov[key] = v;
      };
      set("dataset", ov_dataset);
      set("dataset_format", ov_dataset_format);
      set("demos", ov_demos);
      set("output_dir", ov_output);
      set("backend_kind", ov_kind);
      set("backend_name", ov_name);
      set("fixture", ov_fixture);
      set("endpoint", ov_endpoint);
      set("credential_env", ov_cred);
      set("cache_dir", ov_cache);
      set("k", ov_k);
      set("partition", ov_partition);
      set("instruct", ov_instruct);
      set("parallelism", ov_parallelism);
      set("seed", ov_seed);
      set("run_name", ov_run);
      if (ov_no_clamp) ov["no_clamp_k"] = "1";
      return cmd_infer(infer_config, infer_preset, ov);
    }
    if (ens->parsed()) {
      EnsembleRunSpec spec;
      if (!ens_preset.empty()) {
        spec = ensemble_preset(ens_preset);
      } else if (!ens_spec.empty()) {
        spec = ensemble_spec_from_json(read_file(ens_spec));
      } else {
        throw std::runtime_error("ensemble needs --spec or --preset");
      }
      std::map<std::string, std::string> member_files;
      for (const auto& kv : ens_inputs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          throw std::runtime_error("--input expects member=path, got: " + kv);
        }
        member_files[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      run_ensemble(spec, member_files, ens_output);
      std::cout << "ensemble " << spec.name << " (" << spec.mode << ", track "
                << spec.track << ") -> " << ens_output << "\n";
      return 0;
    }
    if (eval->parsed()) {
      return cmd_evaluate(eval_pred, eval_gold, eval_gold_format, eval_track, eval_relaxed,
                          eval_json, eval_per_doc, eval_out);
    }
    if (errrep->parsed()) {
      std::cout << error_report_table(err_summaries);
      return 0;
    }
    if (replay->parsed()) {
      const RunSummary summary = run_replay(replay_manifest, replay_output);
      std::cout << "replayed " << summary.run_name << " -> " << replay_output << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
