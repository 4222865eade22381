#include "rhetoric/prompting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"
#include "rhetoric/digest.hpp"
#include "rhetoric/text.hpp"

namespace rhetoric {

namespace {

using nlohmann::ordered_json;

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv1a(uint64_t h, std::string_view bytes) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

void accumulate_feature(std::vector<double>& acc, uint64_t seed_mix,
                        std::string_view feature) {
  const uint64_t h = fnv1a(seed_mix, feature);
  const std::size_t idx = h % acc.size();
  acc[idx] += ((h >> 32) & 1) ? 1.0 : -1.0;
}

}  // namespace

HashEmbedder::HashEmbedder(uint64_t seed) : seed_(seed) {}

std::string HashEmbedder::id() const { return "hash64-v1-seed" + std::to_string(seed_); }

std::vector<std::vector<float>> HashEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  const uint64_t seed_mix = fnv1a(kFnvOffset, std::string_view(
      reinterpret_cast<const char*>(&seed_), sizeof(seed_)));
  for (const auto& text : texts) {
    std::vector<double> acc(dimension(), 0.0);
    const std::u32string u = decode_utf8_lenient(text);
    for (std::size_t i = 0; i < u.size(); ++i) {
      accumulate_feature(acc, seed_mix, encode_utf8(u[i]));
      if (i + 1 < u.size()) {
        accumulate_feature(acc, seed_mix, encode_utf8(u[i]) + encode_utf8(u[i + 1]));
      }
    }
    double norm_sq = 0.0;
    for (const double v : acc) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    std::vector<float> vec(dimension(), 0.0f);
    if (norm > 0.0) {
      for (std::size_t k = 0; k < acc.size(); ++k) {
        vec[k] = static_cast<float>(acc[k] / norm);
      }
    }
    out.push_back(std::move(vec));
  }
  return out;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string model, std::size_t dimension,
                           std::string credential_env)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      dimension_(dimension),
      credential_env_(std::move(credential_env)) {}

std::string HttpEmbedder::id() const { return "http:" + model_; }

std::vector<std::vector<float>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  const auto slash = endpoint_.find('/', endpoint_.find("//") == std::string::npos
                                             ? 0
                                             : endpoint_.find("//") + 2);
  const std::string base = slash == std::string::npos ? endpoint_ : endpoint_.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : endpoint_.substr(slash);

  httplib::Client client(base);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!credential_env_.empty()) {
    const char* key = std::getenv(credential_env_.c_str());
    if (!key || !*key) {
      throw std::runtime_error("embedding credentials missing: set " + credential_env_);
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  ordered_json body;
  body["model"] = model_;
  body["texts"] = texts;
  const auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw std::runtime_error("embedding request failed: " + endpoint_);
  if (res->status != 200) {
    throw std::runtime_error("embedding endpoint returned status " +
                             std::to_string(res->status));
  }
  const auto j = ordered_json::parse(res->body);
  std::vector<std::vector<float>> out;
  for (const auto& v : j.at("vectors")) {
    out.push_back(v.get<std::vector<float>>());
    if (out.back().size() != dimension_) {
      throw std::runtime_error("embedding dimension mismatch from endpoint");
    }
  }
  if (out.size() != texts.size()) {
    throw std::runtime_error("embedding endpoint returned wrong vector count");
  }
  return out;
}

EmbeddingCache::EmbeddingCache(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

namespace {
std::string cache_key(const std::string& embedder_id, const std::string& text) {
  return sha256_hex(embedder_id + "\n" + text);
}
}  // namespace

std::optional<std::vector<float>> EmbeddingCache::lookup(const std::string& embedder_id,
                                                         const std::string& text) const {
  const auto path = std::filesystem::path(dir_) / (cache_key(embedder_id, text) + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    ordered_json j;
    in >> j;
    return j.at("vector").get<std::vector<float>>();
  } catch (...) {
    return std::nullopt;  // corrupt entry behaves like a miss
  }
}

void EmbeddingCache::store(const std::string& embedder_id, const std::string& text,
                           const std::vector<float>& vec) const {
  const auto path = std::filesystem::path(dir_) / (cache_key(embedder_id, text) + ".json");
  ordered_json j;
  j["embedder"] = embedder_id;
  j["vector"] = vec;
  std::ofstream out(path);
  out << j.dump();
}

std::vector<std::vector<float>> embed_cached(Embedder& embedder,
                                             const std::vector<std::string>& texts,
                                             const EmbeddingCache* cache) {
  std::vector<std::vector<float>> out(texts.size());
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (cache) {
      if (auto hit = cache->lookup(embedder.id(), texts[i])) {
        out[i] = std::move(*hit);
        continue;
      }
    }
    misses.push_back(i);
  }
  if (!misses.empty()) {
    std::vector<std::string> miss_texts;
    miss_texts.reserve(misses.size());
    for (const auto i : misses) miss_texts.push_back(texts[i]);
    auto vecs = embedder.embed(miss_texts);
    for (std::size_t k = 0; k < misses.size(); ++k) {
      if (cache) cache->store(embedder.id(), miss_texts[k], vecs[k]);
      out[misses[k]] = std::move(vecs[k]);
    }
  }
  return out;
}

const DemoGroup* DemoStore::group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

DemoStore build_demo_store(const std::vector<Instance>& instances, Embedder& embedder,
                           const EmbeddingCache* cache) {
  DemoStore store;
  store.embedder_id = embedder.id();
  store.dimension = embedder.dimension();
  store.stats = compute_stats(instances);

  std::vector<std::string> texts;
  std::set<std::string> seen_ids;
  for (const auto& inst : instances) {
    if (!seen_ids.insert(inst.paragraph.doc_id).second) {
      throw std::runtime_error("duplicate doc_id in training set: " + inst.paragraph.doc_id);
    }
    texts.push_back(inst.paragraph.text);
  }
  const auto embeddings = embed_cached(embedder, texts, cache);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    double norm_sq = 0.0;
    for (const float v : embeddings[i]) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("non-finite embedding for " +
                                 instances[i].paragraph.doc_id);
      }
      norm_sq += static_cast<double>(v) * v;
    }
    if (norm_sq == 0.0) {
      throw std::runtime_error("zero-norm embedding for " + instances[i].paragraph.doc_id);
    }
  }

  const auto& tax = Taxonomy::instance();
  std::vector<TypeGroup> groups;
  groups.push_back({"all", tax.coarse_names()});
  groups.push_back({"shared", tax.shared_coarse()});
  groups.push_back({"track1_only", tax.track1_only_coarse()});

  for (const auto& tg : groups) {
    DemoGroup group;
    group.name = tg.name;
    group.coarse_types = tg.coarse_types;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      DemoEntry entry;
      entry.doc_id = instances[i].paragraph.doc_id;
      entry.text = instances[i].paragraph.text;
      entry.embedding = embeddings[i];
      const auto records = annotation_to_records(instances[i]);
      entry.records_json = serialize_records(filter_records(records, tg.coarse_types));
      group.entries.push_back(std::move(entry));
    }
    store.groups.push_back(std::move(group));
  }
  return store;
}

void save_demo_store(const DemoStore& store, const std::string& path) {
  ordered_json j;
  j["format"] = "rhetoric-demo-store";
  j["version"] = store.version;
  j["embedder"] = store.embedder_id;
  j["dimension"] = store.dimension;
  j["stats"] = ordered_json::parse(stats_to_json(store.stats));
  j["groups"] = ordered_json::array();
  for (const auto& g : store.groups) {
    ordered_json jg;
    jg["name"] = g.name;
    jg["types"] = g.coarse_types;
    jg["entries"] = ordered_json::array();
    for (const auto& e : g.entries) {
      ordered_json je;
      je["doc_id"] = e.doc_id;
      je["text"] = e.text;
      je["embedding"] = e.embedding;
      je["records"] = e.records_json;
      jg["entries"].push_back(std::move(je));
    }
    j["groups"].push_back(std::move(jg));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write demo store: " + path);
  out << j.dump() << "\n";
}

DemoStore load_demo_store(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open demo store: " + path);
  ordered_json j;
  in >> j;
  if (j.value("format", "") != "rhetoric-demo-store") {
    throw std::runtime_error(path + ": not a demo store file");
  }
  DemoStore store;
  store.version = j.at("version").get<int>();
  store.embedder_id = j.at("embedder").get<std::string>();
  store.dimension = j.at("dimension").get<std::size_t>();
  store.stats = stats_from_json(j.at("stats").dump());
  for (const auto& jg : j.at("groups")) {
    DemoGroup g;
    g.name = jg.at("name").get<std::string>();
    g.coarse_types = jg.at("types").get<std::vector<std::string>>();
    for (const auto& je : jg.at("entries")) {
      DemoEntry e;
      e.doc_id = je.at("doc_id").get<std::string>();
      e.text = je.at("text").get<std::string>();
      e.embedding = je.at("embedding").get<std::vector<float>>();
      e.records_json = je.at("records").get<std::string>();
      g.entries.push_back(std::move(e));
    }
    store.groups.push_back(std::move(g));
  }
  return store;
}

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::vector<const DemoEntry*> select_demos(const DemoGroup& group,
                                           const std::vector<float>& query_vec,
                                           std::size_t k) {
  if (k > group.entries.size()) {
    throw std::invalid_argument("select_demos: k=" + std::to_string(k) +
                                " exceeds store size " +
                                std::to_string(group.entries.size()));
  }
  double qnorm = 0.0;
  for (const float v : query_vec) qnorm += static_cast<double>(v) * v;
  if (qnorm == 0.0) throw std::invalid_argument("select_demos: zero-norm query vector");

  struct Scored {
    double sim;
    const DemoEntry* entry;
  };
  std::vector<Scored> scored;
  scored.reserve(group.entries.size());
  for (const auto& e : group.entries) {
    if (e.embedding.size() != query_vec.size()) {
      throw std::invalid_argument("select_demos: query dimension " +
                                  std::to_string(query_vec.size()) +
                                  " != store dimension " +
                                  std::to_string(e.embedding.size()));
    }
    scored.push_back({cosine_similarity(e.embedding, query_vec), &e});
  }
  // pick the top k by (similarity desc, doc_id asc) ...
  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    return x.entry->doc_id < y.entry->doc_id;
  });
  scored.resize(k);
  // ... and present them ascending, most similar last.
  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.sim != y.sim) return x.sim < y.sim;
    return x.entry->doc_id < y.entry->doc_id;
  });
  std::vector<const DemoEntry*> out;
  out.reserve(k);
  for (const auto& s : scored) out.push_back(s.entry);
  return out;
}

std::string to_string(Partition p) { return p == Partition::Join ? "JOIN" : "SEPA"; }

Partition partition_from_string(const std::string& s) {
  if (s == "JOIN") return Partition::Join;
  if (s == "SEPA") return Partition::Sepa;
  throw std::invalid_argument("unknown partition mode: " + s);
}

std::vector<TypeGroup> partition_types(const Taxonomy& taxonomy, Partition mode) {
  if (mode == Partition::Join) {
    return {{"all", taxonomy.coarse_names()}};
  }
  return {{"shared", taxonomy.shared_coarse()},
          {"track1_only", taxonomy.track1_only_coarse()}};
}

MessageSeq build_messages(const RunPolicy& policy, const std::string& system_prompt,
                          const std::vector<const DemoEntry*>& demos,
                          const std::string& test_doc) {
  MessageSeq messages;
  messages.push_back({"system", system_prompt});
  for (const DemoEntry* demo : demos) {
    messages.push_back({"user", demo->text});
    messages.push_back({"assistant", demo->records_json});
  }
  std::string query = test_doc;
  if (!policy.instruct.empty()) query += "\n" + policy.instruct;
  messages.push_back({"user", query});
  return messages;
}

std::string FineTuneRecipe::manifest_text() const {
  std::ostringstream out;
  out << "epochs=" << epochs << "\n";
  out << "batch_size=" << batch_size << "\n";
  out << "peak_learning_rate=" << peak_learning_rate << "\n";
  out << "warmup_ratio=" << warmup_ratio << "\n";
  out << "weight_decay=" << weight_decay << "\n";
  out << "lora_rank=" << lora_rank << "\n";
  out << "lora_alpha=" << lora_alpha << "\n";
  out << "lora_dropout=" << lora_dropout << "\n";
  return out.str();
}

void export_training_jsonl(const std::vector<Instance>& instances,
                           const std::string& system_prompt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training file: " + path);
  for (const auto& inst : instances) {
    ordered_json line;
    line["messages"] = ordered_json::array();
    line["messages"].push_back({{"role", "system"}, {"content", system_prompt}});
    line["messages"].push_back({{"role", "user"}, {"content", inst.paragraph.text}});
    line["messages"].push_back(
        {{"role", "assistant"},
         {"content", serialize_records(annotation_to_records(inst))}});
    out << line.dump() << "\n";
  }
  out.close();
  std::ofstream recipe(path + ".recipe");
  if (!recipe) throw std::runtime_error("cannot write recipe sidecar: " + path + ".recipe");
  recipe << FineTuneRecipe{}.manifest_text();
}

}  // namespace rhetoric
