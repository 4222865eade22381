#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rhetoric/corpus.hpp"
#include "rhetoric/schema.hpp"

namespace rhetoric {

// Repair flags recorded by the lenient parser.
namespace repair {
inline constexpr uint32_t kInvalidUtf8 = 1u << 0;
inline constexpr uint32_t kFenceStripped = 1u << 1;
inline constexpr uint32_t kArrayExtracted = 1u << 2;
inline constexpr uint32_t kObjectWrapped = 1u << 3;
inline constexpr uint32_t kQuoteDelimiter = 1u << 4;  // typographic quote as delimiter
inline constexpr uint32_t kSingleQuote = 1u << 5;
inline constexpr uint32_t kTrailingComma = 1u << 6;
inline constexpr uint32_t kSkippedElement = 1u << 7;
inline constexpr uint32_t kCoercedValue = 1u << 8;
inline constexpr uint32_t kFullWidthPunct = 1u << 9;
}  // namespace repair

std::string repair_names(uint32_t flags);

enum class ParseErrorKind {
  Collapse,  // no array literal recoverable from the reply
  Quote,     // string delimiter repair failed (unterminated string)
};

struct ParseOutcome {
  std::vector<RhetoricRecord> records;
  uint32_t repairs = 0;
  std::optional<ParseErrorKind> error;
  std::string error_detail;

  bool ok() const { return !error.has_value(); }
  bool repaired() const { return repairs != 0; }
};

// Parses a model reply into records. Accepts strict JSON plus a relaxed
// dialect (single quotes, trailing commas, full-width punctuation,
// typographic quotes as delimiters where structurally unambiguous, JSON
// embedded in prose or markdown fences). A failed parse means the model
// predicted nothing; callers decide how to count that.
ParseOutcome parse_lenient(const std::string& text);

// Character-level (code point) longest common subsequence length.
std::size_t lcs_length(std::u32string_view a, std::u32string_view b);
std::size_t lcs_length(std::string_view a, std::string_view b);

struct CommonSubstring {
  std::size_t length = 0;
  std::size_t pos_a = 0;  // occurrence start in a
  std::size_t pos_b = 0;  // occurrence start in b
};

// Longest common substring; among equal-length candidates the one with
// the earliest occurrence in b (then in a) wins.
CommonSubstring longest_common_substring(std::u32string_view a, std::u32string_view b);

struct ScopePolicy {
  double floor = 5.0;
  double ratio = 0.6;
};

// Sentence ids whose LCS with the fragment reaches the threshold
// max(floor, ratio * sentence length); lengths in code points.
std::set<int> resolve_scope(const std::string& fragment, const Paragraph& paragraph,
                            const ScopePolicy& policy = {});

struct Provenance {
  std::string backend;
  uint32_t repair_flags = 0;

  bool operator==(const Provenance&) const = default;
};

// An evaluation-ready prediction with grounded component spans.
struct PredItem {
  std::set<int> sentence_ids;
  std::string coarse;
  std::optional<std::string> form_fine;
  std::optional<std::string> content_fine;
  std::vector<ComponentSpan> components;
  Provenance provenance;
};

// Counters behind the error-report table (failure classes, wrong-type
// tallies, repair and discard events).
struct PostprocessCounters {
  int replies = 0;
  int gateway_no_output = 0;
  int gateway_refusal = 0;
  int gateway_timeout = 0;
  int gateway_protocol_error = 0;
  int parse_collapse = 0;
  int parse_quote_error = 0;
  int repaired_replies = 0;
  int records_parsed = 0;
  int discarded_missing_coarse = 0;
  int wrong_coarse_type = 0;
  int wrong_fine_type = 0;
  int explicit_no_rhetoric = 0;
  int dropped_empty_scope = 0;
  int merged_duplicates = 0;
  int modal_defaults_used = 0;
};

// Replaces missing or out-of-label-set fine types with the modal fine
// type for the record's coarse type. Requires a valid coarse type.
RhetoricRecord fill_fine_types(RhetoricRecord record, const CorpusStats& stats,
                               PostprocessCounters* counters = nullptr);

// Grounds one "&"-joined component string inside the scope sentences via
// longest common substring; returns nothing when no piece matches.
std::optional<ComponentSpan> ground_component(const std::string& slot,
                                              const std::string& pred_text,
                                              const Paragraph& paragraph,
                                              const std::set<int>& scope);

// Full per-record pipeline: scope resolution, coarse validation,
// fine-type fallback, component grounding, duplicate merging.
std::vector<PredItem> finalize(const std::vector<RhetoricRecord>& records,
                               const Paragraph& paragraph, const CorpusStats& stats,
                               const ScopePolicy& policy, const std::string& backend,
                               uint32_t reply_repairs = 0,
                               PostprocessCounters* counters = nullptr);

}  // namespace rhetoric
