#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhetoric/corpus.hpp"

namespace rhetoric {

// The natural-language record models emit: Chinese keys, no indices, and
// discontinuous component pieces joined into one string with "&".
struct RhetoricRecord {
  std::string fragment;                      // 内容片段
  std::optional<std::string> coarse;         // 修辞手法
  std::optional<std::string> form_fine;      // 形式上的细粒度修辞分类
  std::optional<std::string> content_fine;   // 内容上的细粒度修辞分类
  std::map<std::string, std::string> components;  // slot name -> "&"-joined text

  bool operator==(const RhetoricRecord&) const = default;
};

// Record key strings.
inline constexpr const char* kKeyFragment = "内容片段";
inline constexpr const char* kKeyCoarse = "修辞手法";
inline constexpr const char* kKeyFormFine = "形式上的细粒度修辞分类";
inline constexpr const char* kKeyContentFine = "内容上的细粒度修辞分类";

// One record per gold item: the fragment is the item's sentences
// concatenated in order, component pieces are "&"-joined.
std::vector<RhetoricRecord> annotation_to_records(const Instance& instance);

// Compact JSON array with fixed key order and a single space after ":"
// and ",". CJK characters are written raw (no \u escapes).
std::string serialize_records(const std::vector<RhetoricRecord>& records);

std::string join_pieces(const std::vector<std::string>& pieces);

// Splits on "&", trims whitespace, drops empty pieces.
std::vector<std::string> split_component(const std::string& joined);

// Restrict records to items of the given coarse types (used by the
// SEPA partition when building per-group demonstrations).
std::vector<RhetoricRecord> filter_records(const std::vector<RhetoricRecord>& records,
                                           const std::vector<std::string>& coarse_types);

}  // namespace rhetoric
