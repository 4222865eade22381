#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rhetoric/taxonomy.hpp"

namespace rhetoric {

// A sentence inside a paragraph. `start` is the 0-based code-point offset
// of its first character at paragraph level.
struct Sentence {
  int id = 0;  // 1-based, contiguous
  std::string text;
  int start = 0;
};

struct Paragraph {
  std::string doc_id;
  std::string text;
  std::vector<Sentence> sentences;

  const Sentence* sentence(int id) const;
};

// One piece of a component span; begin/end are inclusive paragraph-level
// code-point indices, and text must re-slice exactly.
struct Piece {
  std::string text;
  int begin = 0;
  int end = 0;

  bool operator==(const Piece&) const = default;
  auto operator<=>(const Piece&) const = default;
};

struct ComponentSpan {
  std::string slot;  // one of the 8 component slot names
  std::vector<Piece> pieces;  // ordered by begin

  bool operator==(const ComponentSpan&) const = default;
};

struct GoldItem {
  std::set<int> sentence_ids;
  std::string coarse;
  std::optional<std::string> form_fine;
  std::optional<std::string> content_fine;
  std::vector<ComponentSpan> components;
};

struct Instance {
  Paragraph paragraph;
  std::vector<GoldItem> items;
};

// Segments raw paragraph text on 。！？；… (closing quotes after a
// terminator stay with the sentence). Concatenation of the returned
// sentence texts is exactly the input.
std::vector<Sentence> segment_sentences(const std::string& text);

enum class DatasetFormat { Official, Internal };

// Loads a line-delimited dataset. The official format mirrors the raw
// annotation fields (camelCase keys, per-slot Begin/End index arrays);
// the internal format is the normalized canonical form with a versioned
// header line. Invalid records throw with the offending line number.
std::vector<Instance> load_dataset(const std::string& path, DatasetFormat format);

// Writes the internal canonical form; load_dataset(Internal) round-trips it.
void save_dataset(const std::vector<Instance>& instances, const std::string& path);

// Validates paragraph/item invariants; throws naming doc_id and slot on
// violation. Called by the loaders.
void validate_instance(const Instance& inst);

struct CorpusStats {
  int instances = 0;
  std::map<std::string, int> form_fine_counts;     // fine type -> count (track-1)
  std::map<std::string, int> content_fine_counts;  // fine type -> count (track-2)
  int form_devices = 0;     // items carrying a form-level fine type
  int content_devices = 0;  // items carrying a content-level fine type
  int components = 0;       // total component spans
  double avg_chars = 0.0;     // code points per paragraph
  double avg_sentences = 0.0;
};

CorpusStats compute_stats(const std::vector<Instance>& instances);

struct ModalFine {
  std::string fine;
  // True when the coarse type had no observed fine types and the first
  // taxonomy entry was used instead.
  bool taxonomy_default = false;
};

// Most frequent fine type for `coarse` on `track` (kTrackForm/kTrackContent),
// ties broken by taxonomy declaration order.
ModalFine modal_fine_type(const CorpusStats& stats, const std::string& coarse, int track);

// Serialization of CorpusStats used by the demo-store file and `stats --json`.
std::string stats_to_json(const CorpusStats& stats);
CorpusStats stats_from_json(const std::string& json_text);

}  // namespace rhetoric
