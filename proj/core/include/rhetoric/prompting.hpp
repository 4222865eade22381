#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rhetoric/corpus.hpp"
#include "rhetoric/schema.hpp"

namespace rhetoric {

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const Message&) const = default;
};
using MessageSeq = std::vector<Message>;

// Document embedding provider. The hash embedder is deterministic and
// local; the HTTP embedder talks to a remote text-embedding endpoint.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
};

// Seeded character n-gram hashing into a fixed 64-dim space, L2-normalized.
// Deterministic across platforms; exists so the pipeline runs offline.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(uint64_t seed = 0);
  std::string id() const override;
  std::size_t dimension() const override { return 64; }
  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

 private:
  uint64_t seed_;
};

// Remote endpoint: POST {"model": ..., "texts": [...]} ->
// {"vectors": [[...], ...]}; bearer credentials read from the named
// environment variable.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string endpoint, std::string model, std::size_t dimension,
               std::string credential_env);
  std::string id() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string endpoint_;
  std::string model_;
  std::size_t dimension_;
  std::string credential_env_;
};

// Disk cache of embeddings keyed by (embedder id, content hash).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::string dir);
  std::optional<std::vector<float>> lookup(const std::string& embedder_id,
                                           const std::string& text) const;
  void store(const std::string& embedder_id, const std::string& text,
             const std::vector<float>& vec) const;

 private:
  std::string dir_;
};

// Embeds texts through the cache when one is given.
std::vector<std::vector<float>> embed_cached(Embedder& embedder,
                                             const std::vector<std::string>& texts,
                                             const EmbeddingCache* cache);

struct DemoEntry {
  std::string doc_id;
  std::string text;            // raw document
  std::vector<float> embedding;
  std::string records_json;    // serialized records, restricted to the group's types
};

struct DemoGroup {
  std::string name;                       // "all" | "shared" | "track1_only"
  std::vector<std::string> coarse_types;
  std::vector<DemoEntry> entries;
};

struct DemoStore {
  int version = 1;
  std::string embedder_id;
  std::size_t dimension = 0;
  CorpusStats stats;  // training statistics, used for fine-type fallback
  std::vector<DemoGroup> groups;

  const DemoGroup* group(const std::string& name) const;
};

// Builds all three demo groups from the training set so any run policy
// can be served from one store.
DemoStore build_demo_store(const std::vector<Instance>& instances, Embedder& embedder,
                           const EmbeddingCache* cache = nullptr);

void save_demo_store(const DemoStore& store, const std::string& path);
DemoStore load_demo_store(const std::string& path);

// The k entries most similar to the query by cosine similarity, in
// ascending similarity order (most similar last, nearest the test turn).
// Ties break by doc_id. Throws on dimension mismatch, zero-norm query,
// or k > store size.
std::vector<const DemoEntry*> select_demos(const DemoGroup& group,
                                           const std::vector<float>& query_vec,
                                           std::size_t k);

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

enum class Partition { Join, Sepa };

std::string to_string(Partition p);
Partition partition_from_string(const std::string& s);

struct RunPolicy {
  int k = 0;
  Partition partition = Partition::Join;
  std::string instruct;                 // extra instruction on the test turn
  std::string system_prompt_id = "v1";
};

struct TypeGroup {
  std::string name;
  std::vector<std::string> coarse_types;
};

// JOIN: one group with all 8 types. SEPA: the shared 4-type group plus
// the track-1-only 4-type group.
std::vector<TypeGroup> partition_types(const Taxonomy& taxonomy, Partition mode);

// [system] ++ (user demo doc, assistant demo records)* ++ user test doc.
// Demos must already be in select_demos order.
MessageSeq build_messages(const RunPolicy& policy, const std::string& system_prompt,
                          const std::vector<const DemoEntry*>& demos,
                          const std::string& test_doc);

// Fine-tuning hyperparameters, exported as manifest metadata only.
struct FineTuneRecipe {
  int epochs = 24;
  int batch_size = 16;
  double peak_learning_rate = 3e-4;
  double warmup_ratio = 0.05;
  double weight_decay = 0.01;
  int lora_rank = 8;
  int lora_alpha = 32;
  double lora_dropout = 0.1;

  std::string manifest_text() const;
};

// One single-turn dialogue line per instance; writes a "<path>.recipe"
// sidecar with the fine-tuning hyperparameters.
void export_training_jsonl(const std::vector<Instance>& instances,
                           const std::string& system_prompt, const std::string& path);

}  // namespace rhetoric
