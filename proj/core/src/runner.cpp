#include "rhetoric/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rhetoric/digest.hpp"
#include "rhetoric/prompt_asset.hpp"

namespace rhetoric {

namespace {

using nlohmann::ordered_json;

namespace fs = std::filesystem;

constexpr const char* kManifestFormat = "rhetoric-run-manifest";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << content;
}

BackendConfig backend_from_json(const ordered_json& j) {
  BackendConfig b;
  b.name = j.value("name", std::string());
  b.kind = j.value("kind", std::string("mock"));
  b.endpoint = j.value("endpoint", std::string());
  b.model = j.value("model", std::string());
  b.credential_env = j.value("credential_env", std::string());
  b.fixture_path = j.value("fixture", std::string());
  b.temperature = j.value("temperature", 0.0);
  b.top_p = j.value("top_p", 1.0);
  b.max_output_tokens = j.value("max_output_tokens", 2048);
  b.timeout_seconds = j.value("timeout_seconds", 60.0);
  b.max_retries = j.value("max_retries", 3);
  b.backoff_base_ms = j.value("backoff_base_ms", 250);
  return b;
}

ordered_json backend_to_json(const BackendConfig& b) {
  ordered_json j;
  j["name"] = b.name;
  j["kind"] = b.kind;
  j["endpoint"] = b.endpoint;
  j["model"] = b.model;
  j["credential_env"] = b.credential_env;
  j["fixture"] = b.fixture_path;
  j["temperature"] = b.temperature;
  j["top_p"] = b.top_p;
  j["max_output_tokens"] = b.max_output_tokens;
  j["timeout_seconds"] = b.timeout_seconds;
  j["max_retries"] = b.max_retries;
  j["backoff_base_ms"] = b.backoff_base_ms;
  return j;
}

RunPolicy policy_from_json(const ordered_json& j) {
  RunPolicy p;
  p.k = j.value("k", 0);
  p.partition = partition_from_string(j.value("partition", std::string("JOIN")));
  p.instruct = j.value("instruct", std::string());
  p.system_prompt_id = j.value("system_prompt", std::string("v1"));
  return p;
}

ordered_json policy_to_json(const RunPolicy& p) {
  ordered_json j;
  j["k"] = p.k;
  j["partition"] = to_string(p.partition);
  j["instruct"] = p.instruct;
  j["system_prompt"] = p.system_prompt_id;
  return j;
}

ordered_json item_to_json(const PredItem& item) {
  ordered_json j;
  j["sentence_ids"] = std::vector<int>(item.sentence_ids.begin(), item.sentence_ids.end());
  j["coarse"] = item.coarse;
  if (item.form_fine) j["form"] = *item.form_fine;
  if (item.content_fine) j["content"] = *item.content_fine;
  j["components"] = ordered_json::array();
  for (const auto& span : item.components) {
    ordered_json jc;
    jc["slot"] = span.slot;
    jc["pieces"] = ordered_json::array();
    for (const auto& p : span.pieces) {
      jc["pieces"].push_back({{"text", p.text}, {"begin", p.begin}, {"end", p.end}});
    }
    j["components"].push_back(std::move(jc));
  }
  j["provenance"] = {{"backend", item.provenance.backend},
                     {"repairs", repair_names(item.provenance.repair_flags)}};
  return j;
}

PredItem item_from_json(const ordered_json& j) {
  PredItem item;
  for (const auto& v : j.at("sentence_ids")) item.sentence_ids.insert(v.get<int>());
  item.coarse = j.at("coarse").get<std::string>();
  if (j.contains("form")) item.form_fine = j["form"].get<std::string>();
  if (j.contains("content")) item.content_fine = j["content"].get<std::string>();
  for (const auto& jc : j.value("components", ordered_json::array())) {
    ComponentSpan span;
    span.slot = jc.at("slot").get<std::string>();
    for (const auto& jp : jc.at("pieces")) {
      span.pieces.push_back({jp.at("text").get<std::string>(), jp.at("begin").get<int>(),
                             jp.at("end").get<int>()});
    }
    item.components.push_back(std::move(span));
  }
  if (j.contains("provenance")) {
    item.provenance.backend = j["provenance"].value("backend", std::string());
  }
  return item;
}

// The three per-track views written alongside the full items.
ordered_json track_projections(const std::vector<PredItem>& items) {
  ordered_json t1 = ordered_json::array();
  ordered_json t2 = ordered_json::array();
  ordered_json t3 = ordered_json::array();
  for (const auto& item : items) {
    const auto ids = std::vector<int>(item.sentence_ids.begin(), item.sentence_ids.end());
    ordered_json e1 = {{"sentence_ids", ids}, {"coarse", item.coarse}};
    if (item.form_fine) e1["form"] = *item.form_fine;
    t1.push_back(std::move(e1));
    ordered_json e2 = {{"sentence_ids", ids}, {"coarse", item.coarse}};
    if (item.content_fine) e2["content"] = *item.content_fine;
    t2.push_back(std::move(e2));
    ordered_json e3 = {{"sentence_ids", ids}, {"coarse", item.coarse}};
    e3["components"] = item_to_json(item)["components"];
    t3.push_back(std::move(e3));
  }
  ordered_json out;
  out["track1"] = std::move(t1);
  out["track2"] = std::move(t2);
  out["track3"] = std::move(t3);
  return out;
}

std::unique_ptr<Embedder> embedder_from_id(const std::string& id, std::size_t dimension,
                                           const RunConfig& config) {
  const std::string hash_prefix = "hash64-v1-seed";
  if (id.rfind(hash_prefix, 0) == 0) {
    return std::make_unique<HashEmbedder>(std::stoull(id.substr(hash_prefix.size())));
  }
  if (id.rfind("http:", 0) == 0) {
    if (config.embedding_endpoint.empty()) {
      throw std::runtime_error(
          "demo store was built with a remote embedder; set embedding_endpoint");
    }
    return std::make_unique<HttpEmbedder>(config.embedding_endpoint, id.substr(5),
                                          dimension, config.embedding_credential_env);
  }
  throw std::runtime_error("unknown embedder id in demo store: " + id);
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const ordered_json& preset_index() {
  static const ordered_json index = [] {
    ordered_json idx;
    for (const auto& [path, content] : embedded_assets()) {
      if (path.rfind("presets/", 0) != 0) continue;
      const auto j = ordered_json::parse(content);
      idx[j.at("preset").get<std::string>()] = j;
    }
    return idx;
  }();
  return index;
}

std::string known_presets(bool ensembles) {
  std::string out;
  for (const auto& [name, j] : preset_index().items()) {
    if (j.contains("mode") != ensembles) continue;
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

}  // namespace

RunConfig run_config_from_json(const std::string& json_text) {
  const auto j = ordered_json::parse(json_text);
  RunConfig c;
  c.run_name = j.value("run", std::string());
  if (j.contains("dataset")) {
    c.dataset_path = j["dataset"].value("path", std::string());
    const std::string fmt = j["dataset"].value("format", std::string("internal"));
    c.dataset_format = fmt == "official" ? DatasetFormat::Official : DatasetFormat::Internal;
  }
  c.demo_store_path = j.value("demo_store", std::string());
  if (j.contains("backend")) c.backend = backend_from_json(j["backend"]);
  if (j.contains("policy")) c.policy = policy_from_json(j["policy"]);
  if (j.contains("scope")) {
    c.scope.floor = j["scope"].value("floor", 5.0);
    c.scope.ratio = j["scope"].value("ratio", 0.6);
  }
  c.cache_dir = j.value("cache_dir", std::string());
  c.embedding_cache_dir = j.value("embedding_cache_dir", std::string());
  c.embedding_endpoint = j.value("embedding_endpoint", std::string());
  c.embedding_credential_env = j.value("embedding_credential_env", std::string());
  c.parallelism = j.value("parallelism", 1);
  c.seed = j.value("seed", 0ull);
  c.clamp_k = j.value("clamp_k", true);
  c.output_dir = j.value("output_dir", std::string());
  return c;
}

std::string run_config_to_json(const RunConfig& config, bool include_operational) {
  ordered_json j;
  j["run"] = config.run_name;
  j["dataset"] = {{"path", config.dataset_path},
                  {"format", config.dataset_format == DatasetFormat::Official
                                 ? "official"
                                 : "internal"}};
  j["demo_store"] = config.demo_store_path;
  j["backend"] = backend_to_json(config.backend);
  j["policy"] = policy_to_json(config.policy);
  j["scope"] = {{"floor", config.scope.floor}, {"ratio", config.scope.ratio}};
  j["embedding_endpoint"] = config.embedding_endpoint;
  j["embedding_credential_env"] = config.embedding_credential_env;
  j["parallelism"] = config.parallelism;
  j["seed"] = config.seed;
  j["clamp_k"] = config.clamp_k;
  if (include_operational) {
    j["cache_dir"] = config.cache_dir;
    j["embedding_cache_dir"] = config.embedding_cache_dir;
    j["output_dir"] = config.output_dir;
  }
  return j.dump(2);
}

void apply_run_preset(RunConfig& config, const std::string& preset_name) {
  const auto& idx = preset_index();
  if (!idx.contains(preset_name) || idx[preset_name].contains("mode")) {
    throw std::runtime_error("unknown run preset \"" + preset_name +
                             "\"; available: " + known_presets(false));
  }
  const auto& j = idx[preset_name];
  if (config.run_name.empty()) config.run_name = preset_name;
  config.backend = backend_from_json(j.at("backend"));
  config.policy = policy_from_json(j.at("policy"));
}

std::vector<std::string> run_preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, j] : preset_index().items()) {
    if (!j.contains("mode")) out.push_back(name);
  }
  return out;
}

void save_predictions(const std::vector<DocPrediction>& docs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  for (const auto& doc : docs) {
    ordered_json j;
    j["doc_id"] = doc.doc_id;
    j["status"] = doc.status;
    if (!doc.source_member.empty()) j["member"] = doc.source_member;
    j["items"] = ordered_json::array();
    for (const auto& item : doc.items) j["items"].push_back(item_to_json(item));
    auto proj = track_projections(doc.items);
    j["track1"] = std::move(proj["track1"]);
    j["track2"] = std::move(proj["track2"]);
    j["track3"] = std::move(proj["track3"]);
    out << j.dump() << "\n";
  }
}

std::vector<DocPrediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions: " + path);
  std::vector<DocPrediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed predictions line: " + e.what());
    }
    DocPrediction doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.status = j.value("status", std::string("ok"));
    doc.source_member = j.value("member", std::string());
    for (const auto& ji : j.value("items", ordered_json::array())) {
      doc.items.push_back(item_from_json(ji));
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::map<std::string, std::vector<PredItem>> predictions_by_doc(
    const std::vector<DocPrediction>& docs) {
  std::map<std::string, std::vector<PredItem>> out;
  for (const auto& doc : docs) out[doc.doc_id] = doc.items;
  return out;
}

std::string summary_to_json(const RunSummary& s) {
  ordered_json j;
  j["run"] = s.run_name;
  j["backend"] = s.backend_name;
  j["docs"] = s.docs;
  j["replies"] = s.counters.replies;
  j["failures"] = {{"no_output", s.counters.gateway_no_output},
                   {"refusal", s.counters.gateway_refusal},
                   {"timeout", s.counters.gateway_timeout},
                   {"protocol_error", s.counters.gateway_protocol_error}};
  j["parse_errors"] = {{"collapse", s.counters.parse_collapse},
                       {"quote", s.counters.parse_quote_error}};
  j["repaired_replies"] = s.counters.repaired_replies;
  j["records"] = {{"parsed", s.counters.records_parsed},
                  {"discarded_missing_coarse", s.counters.discarded_missing_coarse},
                  {"wrong_coarse_type", s.counters.wrong_coarse_type},
                  {"wrong_fine_type", s.counters.wrong_fine_type},
                  {"explicit_no_rhetoric", s.counters.explicit_no_rhetoric},
                  {"dropped_empty_scope", s.counters.dropped_empty_scope},
                  {"merged_duplicates", s.counters.merged_duplicates},
                  {"modal_defaults_used", s.counters.modal_defaults_used}};
  j["usage"] = {{"prompt_tokens", s.usage.prompt_tokens},
                {"completion_tokens", s.usage.completion_tokens}};
  return j.dump(2);
}

RunSummary summary_from_json(const std::string& json_text) {
  const auto j = ordered_json::parse(json_text);
  RunSummary s;
  s.run_name = j.value("run", std::string());
  s.backend_name = j.value("backend", std::string());
  s.docs = j.value("docs", 0);
  s.counters.replies = j.value("replies", 0);
  const auto f = j.value("failures", ordered_json::object());
  s.counters.gateway_no_output = f.value("no_output", 0);
  s.counters.gateway_refusal = f.value("refusal", 0);
  s.counters.gateway_timeout = f.value("timeout", 0);
  s.counters.gateway_protocol_error = f.value("protocol_error", 0);
  const auto p = j.value("parse_errors", ordered_json::object());
  s.counters.parse_collapse = p.value("collapse", 0);
  s.counters.parse_quote_error = p.value("quote", 0);
  s.counters.repaired_replies = j.value("repaired_replies", 0);
  const auto r = j.value("records", ordered_json::object());
  s.counters.records_parsed = r.value("parsed", 0);
  s.counters.discarded_missing_coarse = r.value("discarded_missing_coarse", 0);
  s.counters.wrong_coarse_type = r.value("wrong_coarse_type", 0);
  s.counters.wrong_fine_type = r.value("wrong_fine_type", 0);
  s.counters.explicit_no_rhetoric = r.value("explicit_no_rhetoric", 0);
  s.counters.dropped_empty_scope = r.value("dropped_empty_scope", 0);
  s.counters.merged_duplicates = r.value("merged_duplicates", 0);
  s.counters.modal_defaults_used = r.value("modal_defaults_used", 0);
  const auto u = j.value("usage", ordered_json::object());
  s.usage.prompt_tokens = u.value("prompt_tokens", 0L);
  s.usage.completion_tokens = u.value("completion_tokens", 0L);
  return s;
}

RunSummary run_infer(const RunConfig& config) {
  if (config.dataset_path.empty()) throw std::runtime_error("infer: dataset path not set");
  if (config.demo_store_path.empty()) {
    throw std::runtime_error("infer: demo store not set (run build-demos first)");
  }
  if (config.output_dir.empty()) throw std::runtime_error("infer: output_dir not set");

  const auto instances = load_dataset(config.dataset_path, config.dataset_format);
  const DemoStore store = load_demo_store(config.demo_store_path);
  const auto& tax = Taxonomy::instance();
  const auto groups = partition_types(tax, config.policy.partition);

  std::size_t store_size = 0;
  for (const auto& g : store.groups) store_size = std::max(store_size, g.entries.size());
  std::size_t effective_k = static_cast<std::size_t>(std::max(config.policy.k, 0));
  if (config.clamp_k) effective_k = std::min(effective_k, store_size);

  // query embeddings (skipped entirely for zero-shot runs)
  std::vector<std::vector<float>> query_vecs;
  if (effective_k > 0) {
    auto embedder = embedder_from_id(store.embedder_id, store.dimension, config);
    std::optional<EmbeddingCache> cache;
    if (!config.embedding_cache_dir.empty()) cache.emplace(config.embedding_cache_dir);
    std::vector<std::string> texts;
    texts.reserve(instances.size());
    for (const auto& inst : instances) texts.push_back(inst.paragraph.text);
    query_vecs = embed_cached(*embedder, texts, cache ? &*cache : nullptr);
  }

  ChatClient client(config.backend,
                    config.cache_dir.empty() ? std::nullopt
                                             : std::optional<std::string>(config.cache_dir));

  fs::create_directories(config.output_dir);
  std::ofstream raw_out(fs::path(config.output_dir) / "raw.jsonl", std::ios::binary);
  if (!raw_out) throw std::runtime_error("cannot write raw outputs");

  RunSummary summary;
  summary.run_name = config.run_name;
  summary.backend_name = config.backend.name;
  summary.docs = static_cast<int>(instances.size());

  struct DocState {
    std::string status = "ok";
    std::vector<RhetoricRecord> records;
    uint32_t repairs = 0;
  };
  std::vector<DocState> states(instances.size());

  for (const auto& group : groups) {
    const DemoGroup* demo_group = store.group(group.name);
    if (!demo_group) throw std::runtime_error("demo store lacks group: " + group.name);
    const std::string system_prompt =
        build_system_prompt(config.policy.system_prompt_id, group.coarse_types);

    std::vector<CompletionJob> jobs;
    jobs.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
      std::vector<const DemoEntry*> demos;
      if (effective_k > 0) {
        demos = select_demos(*demo_group, query_vecs[i], effective_k);
      }
      jobs.push_back({instances[i].paragraph.doc_id,
                      build_messages(config.policy, system_prompt, demos,
                                     instances[i].paragraph.text)});
    }
    const auto outputs = client.complete_batch(jobs, config.parallelism);

    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const RawOutput& out = outputs[i];
      ++summary.counters.replies;
      ordered_json raw_line;
      raw_line["doc_id"] = out.doc_id;
      raw_line["group"] = group.name;
      std::string status = "ok";
      if (out.ok()) {
        raw_line["text"] = *out.text;
        const ParseOutcome parsed = parse_lenient(*out.text);
        if (parsed.ok()) {
          if (parsed.repaired()) ++summary.counters.repaired_replies;
          states[i].repairs |= parsed.repairs;
          raw_line["repairs"] = repair_names(parsed.repairs);
          states[i].records.insert(states[i].records.end(), parsed.records.begin(),
                                   parsed.records.end());
        } else {
          status = parsed.error == ParseErrorKind::Collapse ? "parse_collapse"
                                                            : "parse_quote";
          if (parsed.error == ParseErrorKind::Collapse) {
            ++summary.counters.parse_collapse;
          } else {
            ++summary.counters.parse_quote_error;
          }
        }
      } else {
        status = to_string(*out.failure);
        raw_line["failure_detail"] = out.failure_detail;
        switch (*out.failure) {
          case FailureKind::NoOutput: ++summary.counters.gateway_no_output; break;
          case FailureKind::Refusal: ++summary.counters.gateway_refusal; break;
          case FailureKind::Timeout: ++summary.counters.gateway_timeout; break;
          case FailureKind::ProtocolError: ++summary.counters.gateway_protocol_error; break;
        }
      }
      raw_line["status"] = status;
      raw_line["prompt_tokens"] = out.usage.prompt_tokens;
      raw_line["completion_tokens"] = out.usage.completion_tokens;
      raw_line["from_cache"] = out.from_cache;
      raw_out << raw_line.dump() << "\n";
      // a document is valid only if every group run of it is valid
      if (status != "ok" && states[i].status == "ok") states[i].status = status;
    }
  }

  std::vector<DocPrediction> predictions;
  predictions.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    DocPrediction doc;
    doc.doc_id = instances[i].paragraph.doc_id;
    doc.status = states[i].status;
    doc.items = finalize(states[i].records, instances[i].paragraph, store.stats,
                         config.scope, config.backend.name, states[i].repairs,
                         &summary.counters);
    predictions.push_back(std::move(doc));
  }
  save_predictions(predictions, (fs::path(config.output_dir) / "predictions.jsonl").string());

  summary.usage = client.total_usage();
  write_file((fs::path(config.output_dir) / "summary.json").string(),
             summary_to_json(summary) + "\n");

  ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = 1;
  manifest["config"] = ordered_json::parse(run_config_to_json(config, false));
  manifest["effective_k"] = effective_k;
  manifest["prompt_version"] = config.policy.system_prompt_id;
  manifest["dataset_sha256"] = sha256_file_hex(config.dataset_path);
  manifest["demo_store_sha256"] = sha256_file_hex(config.demo_store_path);
  manifest["outputs"] = {{"raw", "raw.jsonl"},
                         {"predictions", "predictions.jsonl"},
                         {"summary", "summary.json"}};
  // mock runs are replayed byte-for-byte, so they carry no wall-clock stamp
  if (config.backend.kind != "mock") manifest["created_at"] = iso8601_now();
  write_file((fs::path(config.output_dir) / "manifest.json").string(),
             manifest.dump(2) + "\n");
  return summary;
}

RunSummary run_replay(const std::string& manifest_path, const std::string& output_dir) {
  const auto j = ordered_json::parse(read_file(manifest_path));
  if (j.value("format", "") != std::string(kManifestFormat)) {
    throw std::runtime_error(manifest_path + ": not a run manifest");
  }
  RunConfig config = run_config_from_json(j.at("config").dump());
  config.output_dir = output_dir;
  const std::string dataset_hash = sha256_file_hex(config.dataset_path);
  if (dataset_hash != j.value("dataset_sha256", "")) {
    throw std::runtime_error("replay: dataset changed since the manifest was written");
  }
  const std::string store_hash = sha256_file_hex(config.demo_store_path);
  if (store_hash != j.value("demo_store_sha256", "")) {
    throw std::runtime_error("replay: demo store changed since the manifest was written");
  }
  return run_infer(config);
}

EnsembleRunSpec ensemble_spec_from_json(const std::string& json_text) {
  const auto j = ordered_json::parse(json_text);
  EnsembleRunSpec spec;
  spec.name = j.value("preset", j.value("name", std::string("ensemble")));
  spec.mode = j.value("mode", std::string("vote"));
  if (spec.mode != "vote" && spec.mode != "fallback") {
    throw std::runtime_error("ensemble mode must be vote or fallback");
  }
  spec.track = j.value("track", 1);
  spec.spec.name = spec.name;
  spec.spec.members = j.at("members").get<std::vector<std::string>>();
  if (spec.mode == "vote") {
    spec.spec.pos = j.at("pos").get<std::vector<double>>();
    spec.spec.neg = j.value("neg", spec.spec.pos);
    spec.spec.theta_e = j.at("theta_e").get<double>();
    if (spec.spec.pos.size() != spec.spec.members.size() ||
        spec.spec.neg.size() != spec.spec.members.size()) {
      throw std::runtime_error("ensemble weights do not match member count");
    }
  }
  return spec;
}

EnsembleRunSpec ensemble_preset(const std::string& preset_name) {
  const auto& idx = preset_index();
  if (!idx.contains(preset_name) || !idx[preset_name].contains("mode")) {
    throw std::runtime_error("unknown ensemble preset \"" + preset_name +
                             "\"; available: " + known_presets(true));
  }
  return ensemble_spec_from_json(idx[preset_name].dump());
}

std::vector<std::string> ensemble_preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, j] : preset_index().items()) {
    if (j.contains("mode")) out.push_back(name);
  }
  return out;
}

void run_ensemble(const EnsembleRunSpec& spec,
                  const std::map<std::string, std::string>& member_files,
                  const std::string& output_dir) {
  std::vector<std::vector<DocPrediction>> member_docs;
  for (const auto& member : spec.spec.members) {
    const auto it = member_files.find(member);
    if (it == member_files.end()) {
      throw std::runtime_error("no predictions file given for member " + member);
    }
    member_docs.push_back(load_predictions(it->second));
  }
  // all members must cover the same documents
  std::set<std::string> doc_set;
  for (const auto& doc : member_docs.front()) doc_set.insert(doc.doc_id);
  for (std::size_t m = 1; m < member_docs.size(); ++m) {
    std::set<std::string> other;
    for (const auto& doc : member_docs[m]) other.insert(doc.doc_id);
    if (other != doc_set) {
      throw std::runtime_error("member " + spec.spec.members[m] +
                               " covers a different document set");
    }
  }

  auto doc_index = [](const std::vector<DocPrediction>& docs, const std::string& id) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (docs[i].doc_id == id) return i;
    }
    throw std::runtime_error("document missing: " + id);
  };

  std::vector<DocPrediction> combined;
  for (const auto& lead : member_docs.front()) {
    DocPrediction out;
    out.doc_id = lead.doc_id;
    if (spec.mode == "vote") {
      std::vector<std::vector<PredItem>> member_items;
      for (const auto& docs : member_docs) {
        member_items.push_back(docs[doc_index(docs, lead.doc_id)].items);
      }
      out.status = "ok";
      out.items = weighted_vote(member_items, spec.spec,
                                spec.track == 2 ? FineTrack::Content : FineTrack::Form);
    } else {
      std::vector<DocOutcome> outcomes;
      for (const auto& docs : member_docs) {
        const auto& doc = docs[doc_index(docs, lead.doc_id)];
        outcomes.push_back({doc.ok(), doc.items});
      }
      const FallbackChoice choice = fallback_select(outcomes);
      if (choice.member_index >= 0) {
        out.status = "ok";
        out.items = choice.items;
        out.source_member = spec.spec.members[static_cast<std::size_t>(choice.member_index)];
      } else {
        out.status = "exhausted";
      }
    }
    combined.push_back(std::move(out));
  }

  fs::create_directories(output_dir);
  save_predictions(combined, (fs::path(output_dir) / "predictions.jsonl").string());

  ordered_json manifest;
  manifest["format"] = "rhetoric-ensemble-manifest";
  manifest["version"] = 1;
  manifest["name"] = spec.name;
  manifest["mode"] = spec.mode;
  manifest["track"] = spec.track;
  manifest["members"] = ordered_json::array();
  for (const auto& member : spec.spec.members) {
    manifest["members"].push_back(
        {{"name", member},
         {"path", member_files.at(member)},
         {"sha256", sha256_file_hex(member_files.at(member))}});
  }
  if (spec.mode == "vote") {
    manifest["pos"] = spec.spec.pos;
    manifest["neg"] = spec.spec.neg;
    manifest["theta_e"] = spec.spec.theta_e;
  }
  manifest["outputs"] = {{"predictions", "predictions.jsonl"}};
  write_file((fs::path(output_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::string error_report_table(const std::vector<std::string>& summary_paths) {
  std::ostringstream out;
  out << "model name                     | No Output (%) | Parse Error (%) | # Wrong Coarse | # Wrong Fine | repaired\n";
  out << "-------------------------------+---------------+-----------------+----------------+--------------+---------\n";
  for (const auto& path : summary_paths) {
    const RunSummary s = summary_from_json(read_file(path));
    const double replies = std::max(1, s.counters.replies);
    const double no_output_pct = 100.0 * s.counters.gateway_no_output / replies;
    const double parse_pct =
        100.0 * (s.counters.parse_collapse + s.counters.parse_quote_error) / replies;
    char line[256];
    std::snprintf(line, sizeof(line), "%-30s | %13.2f | %15.2f | %14d | %12d | %8d\n",
                  s.run_name.c_str(), no_output_pct, parse_pct,
                  s.counters.wrong_coarse_type, s.counters.wrong_fine_type,
                  s.counters.repaired_replies);
    out << line;
  }
  return out.str();
}

}  // namespace rhetoric
