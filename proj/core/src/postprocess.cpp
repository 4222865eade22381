#include "rhetoric/postprocess.hpp"

#include <algorithm>
#include <map>
#include <variant>

#include "rhetoric/text.hpp"

namespace rhetoric {

namespace {

bool is_standard_quote(char32_t c) { return c == U'"' || c == U'\''; }

bool is_typographic_quote(char32_t c) {
  return c == U'“' || c == U'”' || c == U'‘' || c == U'’' ||
         c == U'＂';
}

bool is_quote(char32_t c) { return is_standard_quote(c) || is_typographic_quote(c); }

// Minimal JSON-ish value for the relaxed dialect.
struct Value;
using Object = std::vector<std::pair<std::string, Value>>;
using Array = std::vector<Value>;

struct Value {
  std::variant<std::nullptr_t, bool, double, std::string, Array, Object> v;
};

// Recursive-descent reader for the relaxed dialect the models actually
// emit. Tracks which repairs it had to apply.
struct Reader {
  std::u32string_view s;
  std::size_t i = 0;
  uint32_t repairs = 0;
  bool unterminated_string = false;

  void skip_ws() {
    while (i < s.size() && is_space(s[i])) ++i;
  }

  bool eat(char32_t c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }

  // Accepts the full-width twin of an ASCII structural character.
  bool eat_struct(char32_t ascii, char32_t fullwidth) {
    skip_ws();
    if (i >= s.size()) return false;
    if (s[i] == ascii) {
      ++i;
      return true;
    }
    if (s[i] == fullwidth) {
      ++i;
      repairs |= repair::kFullWidthPunct;
      return true;
    }
    return false;
  }

  // True when a quote at position `at` is structurally a string end: the
  // next non-space char must be one that can follow the string. Keys are
  // followed by a colon; values by ASCII separators only, because
  // full-width ，/： appear inside quoted dialogue in fragments.
  bool closes_string(std::size_t at, bool for_key) const {
    std::size_t k = at + 1;
    while (k < s.size() && is_space(s[k])) ++k;
    if (k >= s.size()) return true;
    const char32_t c = s[k];
    if (for_key) return c == U':' || c == U'：';
    return c == U',' || c == U'}' || c == U']';
  }

  std::optional<std::string> parse_string(bool for_key = false) {
    skip_ws();
    if (i >= s.size() || !is_quote(s[i])) return std::nullopt;
    const char32_t opener = s[i];
    if (opener == U'\'') repairs |= repair::kSingleQuote;
    if (is_typographic_quote(opener)) repairs |= repair::kQuoteDelimiter;
    ++i;
    std::u32string out;
    while (i < s.size()) {
      const char32_t c = s[i];
      if (c == U'\\' && i + 1 < s.size()) {
        const char32_t esc = s[i + 1];
        i += 2;
        switch (esc) {
          case U'n': out.push_back(U'\n'); break;
          case U't': out.push_back(U'\t'); break;
          case U'r': out.push_back(U'\r'); break;
          case U'b': out.push_back(U'\b'); break;
          case U'f': out.push_back(U'\f'); break;
          case U'u': {
            if (i + 4 <= s.size()) {
              char32_t cp = 0;
              bool ok = true;
              for (int k = 0; k < 4; ++k) {
                const char32_t h = s[i + k];
                cp <<= 4;
                if (h >= U'0' && h <= U'9') {
                  cp |= h - U'0';
                } else if (h >= U'a' && h <= U'f') {
                  cp |= h - U'a' + 10;
                } else if (h >= U'A' && h <= U'F') {
                  cp |= h - U'A' + 10;
                } else {
                  ok = false;
                  break;
                }
              }
              if (ok) {
                i += 4;
                out.push_back(cp);
              } else {
                out.push_back(U'u');
              }
            } else {
              out.push_back(U'u');
            }
            break;
          }
          default: out.push_back(esc);
        }
        continue;
      }
      if (is_quote(c) && closes_string(i, for_key)) {
        if (is_typographic_quote(c) || c != opener) repairs |= repair::kQuoteDelimiter;
        ++i;
        return encode_utf8(out);
      }
      out.push_back(c);
      ++i;
    }
    unterminated_string = true;
    return std::nullopt;
  }

  std::optional<Value> parse_value() {
    skip_ws();
    if (i >= s.size()) return std::nullopt;
    const char32_t c = s[i];
    if (c == U'[') return parse_array();
    if (c == U'{') return parse_object();
    if (is_quote(c)) {
      auto str = parse_string();
      if (!str) return std::nullopt;
      return Value{std::move(*str)};
    }
    if (c == U'-' || c == U'+' || (c >= U'0' && c <= U'9')) return parse_number();
    return parse_bareword();
  }

  std::optional<Value> parse_number() {
    std::string num;
    while (i < s.size()) {
      const char32_t c = s[i];
      if ((c >= U'0' && c <= U'9') || c == U'-' || c == U'+' || c == U'.' || c == U'e' ||
          c == U'E') {
        num.push_back(static_cast<char>(c));
        ++i;
      } else {
        break;
      }
    }
    try {
      return Value{std::stod(num)};
    } catch (...) {
      return std::nullopt;
    }
  }

  std::optional<Value> parse_bareword() {
    std::u32string word;
    while (i < s.size() && ((s[i] >= U'a' && s[i] <= U'z') || (s[i] >= U'A' && s[i] <= U'Z'))) {
      word.push_back(s[i]);
      ++i;
    }
    const std::string w = encode_utf8(word);
    if (w == "true" || w == "True") return Value{true};
    if (w == "false" || w == "False") return Value{false};
    if (w == "null" || w == "None") return Value{nullptr};
    return std::nullopt;
  }

  std::optional<Value> parse_array() {
    if (!eat(U'[')) return std::nullopt;
    Array arr;
    skip_ws();
    if (eat(U']')) return Value{std::move(arr)};
    while (true) {
      auto v = parse_value();
      if (!v) return std::nullopt;
      arr.push_back(std::move(*v));
      if (eat_struct(U',', U'，')) {
        skip_ws();
        if (eat(U']')) {  // trailing comma
          repairs |= repair::kTrailingComma;
          return Value{std::move(arr)};
        }
        continue;
      }
      if (eat(U']')) return Value{std::move(arr)};
      return std::nullopt;
    }
  }

  std::optional<Value> parse_object() {
    if (!eat(U'{')) return std::nullopt;
    Object obj;
    skip_ws();
    if (eat(U'}')) return Value{std::move(obj)};
    while (true) {
      auto key = parse_string(/*for_key=*/true);
      if (!key) return std::nullopt;
      if (!eat_struct(U':', U'：')) return std::nullopt;
      auto v = parse_value();
      if (!v) return std::nullopt;
      obj.emplace_back(std::move(*key), std::move(*v));
      if (eat_struct(U',', U'，')) {
        skip_ws();
        if (eat(U'}')) {
          repairs |= repair::kTrailingComma;
          return Value{std::move(obj)};
        }
        continue;
      }
      if (eat(U'}')) return Value{std::move(obj)};
      return std::nullopt;
    }
  }
};

std::optional<std::string> value_to_string(const Value& v, uint32_t* repairs) {
  if (const auto* str = std::get_if<std::string>(&v.v)) return *str;
  if (const auto* num = std::get_if<double>(&v.v)) {
    *repairs |= repair::kCoercedValue;
    char buf[32];
    if (*num == static_cast<long long>(*num)) {
      std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(*num));
    } else {
      std::snprintf(buf, sizeof(buf), "%g", *num);
    }
    return std::string(buf);
  }
  if (const auto* b = std::get_if<bool>(&v.v)) {
    *repairs |= repair::kCoercedValue;
    return std::string(*b ? "true" : "false");
  }
  return std::nullopt;  // null / array / object
}

std::vector<RhetoricRecord> records_from_array(const Array& arr, uint32_t* repairs) {
  std::vector<RhetoricRecord> records;
  for (const auto& elem : arr) {
    const auto* obj = std::get_if<Object>(&elem.v);
    if (!obj) {
      *repairs |= repair::kSkippedElement;
      continue;
    }
    RhetoricRecord rec;
    for (const auto& [key, value] : *obj) {
      auto str = value_to_string(value, repairs);
      if (!str) continue;
      const std::string trimmed = trim(*str);
      if (key == kKeyFragment) {
        rec.fragment = trimmed;
      } else if (key == kKeyCoarse) {
        if (!trimmed.empty()) rec.coarse = trimmed;
      } else if (key == kKeyFormFine) {
        if (!trimmed.empty()) rec.form_fine = trimmed;
      } else if (key == kKeyContentFine) {
        if (!trimmed.empty()) rec.content_fine = trimmed;
      } else if (Taxonomy::is_component_slot(key)) {
        if (!trimmed.empty()) rec.components[key] = trimmed;
      }
      // unknown keys ignored
    }
    records.push_back(std::move(rec));
  }
  return records;
}

struct Candidate {
  std::u32string text;
  uint32_t flags = 0;
};

std::vector<Candidate> make_candidates(const std::u32string& full) {
  std::vector<Candidate> out;
  out.push_back({full, 0});

  // content of the first ``` fence pair, minus a language tag line
  const std::u32string fence = U"```";
  const auto open = full.find(fence);
  if (open != std::u32string::npos) {
    const auto close = full.find(fence, open + 3);
    if (close != std::u32string::npos) {
      std::size_t start = open + 3;
      while (start < close && full[start] != U'\n' && !is_space(full[start]) &&
             full[start] != U'[' && full[start] != U'{') {
        ++start;  // skip "json" etc.
      }
      out.push_back({full.substr(start, close - start), repair::kFenceStripped});
    }
  }

  const auto lb = full.find(U'[');
  const auto rb = full.rfind(U']');
  if (lb != std::u32string::npos && rb != std::u32string::npos && lb < rb) {
    out.push_back({full.substr(lb, rb - lb + 1), repair::kArrayExtracted});
  }
  const auto lc = full.find(U'{');
  const auto rc = full.rfind(U'}');
  if (lc != std::u32string::npos && rc != std::u32string::npos && lc < rc) {
    out.push_back(
        {full.substr(lc, rc - lc + 1), repair::kArrayExtracted | repair::kObjectWrapped});
  }
  return out;
}

}  // namespace

std::string repair_names(uint32_t flags) {
  static const std::pair<uint32_t, const char*> kNames[] = {
      {repair::kInvalidUtf8, "invalid-utf8"},
      {repair::kFenceStripped, "fence-stripped"},
      {repair::kArrayExtracted, "array-extracted"},
      {repair::kObjectWrapped, "object-wrapped"},
      {repair::kQuoteDelimiter, "quote-delimiter"},
      {repair::kSingleQuote, "single-quote"},
      {repair::kTrailingComma, "trailing-comma"},
      {repair::kSkippedElement, "skipped-element"},
      {repair::kCoercedValue, "coerced-value"},
      {repair::kFullWidthPunct, "full-width-punct"},
  };
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (flags & bit) {
      if (!out.empty()) out += ",";
      out += name;
    }
  }
  return out;
}

ParseOutcome parse_lenient(const std::string& text) {
  ParseOutcome outcome;
  bool bad_utf8 = false;
  const std::u32string full = decode_utf8_lenient(text, &bad_utf8);
  if (bad_utf8) outcome.repairs |= repair::kInvalidUtf8;

  bool saw_unterminated = false;
  for (const auto& cand : make_candidates(full)) {
    Reader reader{cand.text};
    auto value = reader.parse_value();
    saw_unterminated = saw_unterminated || reader.unterminated_string;
    if (!value) continue;
    reader.skip_ws();
    if (reader.i != cand.text.size()) continue;  // trailing garbage: not this candidate

    uint32_t flags = outcome.repairs | cand.flags | reader.repairs;
    const Array* arr = std::get_if<Array>(&value->v);
    Array wrapped;
    if (!arr) {
      const auto* obj = std::get_if<Object>(&value->v);
      if (!obj) continue;
      wrapped.push_back(std::move(*value));
      arr = &wrapped;
      flags |= repair::kObjectWrapped;
    }
    outcome.records = records_from_array(*arr, &flags);
    outcome.repairs = flags;
    return outcome;
  }

  outcome.error = saw_unterminated ? ParseErrorKind::Quote : ParseErrorKind::Collapse;
  outcome.error_detail = saw_unterminated ? "unterminated string literal"
                                          : "no JSON array recoverable from reply";
  return outcome;
}

std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
  return lcs_length(decode_utf8_lenient(a), decode_utf8_lenient(b));
}

CommonSubstring longest_common_substring(std::u32string_view a, std::u32string_view b) {
  CommonSubstring best;
  if (a.empty() || b.empty()) return best;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] != b[j - 1]) {
        cur[j] = 0;
        continue;
      }
      cur[j] = prev[j - 1] + 1;
      const std::size_t len = cur[j];
      const std::size_t pa = i - len;
      const std::size_t pb = j - len;
      if (len > best.length || (len == best.length && (pb < best.pos_b ||
                                (pb == best.pos_b && pa < best.pos_a)))) {
        best = {len, pa, pb};
      }
    }
    std::swap(prev, cur);
    std::fill(cur.begin(), cur.end(), 0);
  }
  return best;
}

std::set<int> resolve_scope(const std::string& fragment, const Paragraph& paragraph,
                            const ScopePolicy& policy) {
  std::set<int> scope;
  const std::u32string frag = decode_utf8_lenient(fragment);
  for (const auto& sentence : paragraph.sentences) {
    const std::u32string sent = decode_utf8(sentence.text);
    const double threshold =
        std::max(policy.floor, policy.ratio * static_cast<double>(sent.size()));
    if (static_cast<double>(lcs_length(frag, sent)) >= threshold) {
      scope.insert(sentence.id);
    }
  }
  return scope;
}

RhetoricRecord fill_fine_types(RhetoricRecord record, const CorpusStats& stats,
                               PostprocessCounters* counters) {
  const auto& tax = Taxonomy::instance();
  const std::string coarse = record.coarse.value_or("");
  auto fill_track = [&](std::optional<std::string>& fine, int track) {
    const auto& valid = tax.fines(coarse, track);
    if (valid.empty()) {
      // no labels on this track for the type (track-1-only rhetoric)
      if (fine) {
        if (counters) ++counters->wrong_fine_type;
        fine.reset();
      }
      return;
    }
    if (fine && std::find(valid.begin(), valid.end(), *fine) != valid.end()) return;
    if (fine && counters) ++counters->wrong_fine_type;
    const ModalFine modal = modal_fine_type(stats, coarse, track);
    if (modal.taxonomy_default && counters) ++counters->modal_defaults_used;
    fine = modal.fine;
  };
  fill_track(record.form_fine, kTrackForm);
  fill_track(record.content_fine, kTrackContent);
  return record;
}

std::optional<ComponentSpan> ground_component(const std::string& slot,
                                              const std::string& pred_text,
                                              const Paragraph& paragraph,
                                              const std::set<int>& scope) {
  if (scope.empty()) return std::nullopt;
  std::u32string scope_text;
  std::vector<int> para_pos;  // scope-text position -> paragraph code-point index
  for (const int id : scope) {
    const Sentence* s = paragraph.sentence(id);
    if (!s) continue;
    const std::u32string sent = decode_utf8(s->text);
    for (std::size_t k = 0; k < sent.size(); ++k) {
      scope_text.push_back(sent[k]);
      para_pos.push_back(s->start + static_cast<int>(k));
    }
  }
  if (scope_text.empty()) return std::nullopt;

  ComponentSpan span;
  span.slot = slot;
  for (const std::string& piece_text : split_component(pred_text)) {
    const std::u32string piece = decode_utf8_lenient(piece_text);
    const CommonSubstring cs = longest_common_substring(piece, scope_text);
    if (cs.length == 0) continue;
    // Emit maximal paragraph-contiguous runs; a match can straddle
    // omitted sentences when the scope is non-contiguous.
    std::size_t run_start = cs.pos_b;
    for (std::size_t k = cs.pos_b + 1; k <= cs.pos_b + cs.length; ++k) {
      const bool boundary = k == cs.pos_b + cs.length ||
                            para_pos[k] != para_pos[k - 1] + 1;
      if (!boundary) continue;
      Piece p;
      p.text = encode_utf8(
          std::u32string_view(scope_text).substr(run_start, k - run_start));
      p.begin = para_pos[run_start];
      p.end = para_pos[k - 1];
      span.pieces.push_back(std::move(p));
      run_start = k;
    }
  }
  if (span.pieces.empty()) return std::nullopt;
  std::sort(span.pieces.begin(), span.pieces.end(),
            [](const Piece& a, const Piece& b) { return a.begin < b.begin; });
  return span;
}

std::vector<PredItem> finalize(const std::vector<RhetoricRecord>& records,
                               const Paragraph& paragraph, const CorpusStats& stats,
                               const ScopePolicy& policy, const std::string& backend,
                               uint32_t reply_repairs, PostprocessCounters* counters) {
  const auto& tax = Taxonomy::instance();
  std::vector<PredItem> items;
  for (const auto& raw : records) {
    if (counters) ++counters->records_parsed;
    if (!raw.coarse) {
      if (counters) ++counters->discarded_missing_coarse;
      continue;
    }
    if (*raw.coarse == tax.no_rhetoric) {
      if (counters) ++counters->explicit_no_rhetoric;
      continue;
    }
    if (!tax.is_coarse(*raw.coarse)) {
      if (counters) ++counters->wrong_coarse_type;
      continue;
    }
    const std::set<int> scope = resolve_scope(raw.fragment, paragraph, policy);
    if (scope.empty()) {
      if (counters) ++counters->dropped_empty_scope;
      continue;
    }
    const RhetoricRecord filled = fill_fine_types(raw, stats, counters);

    PredItem item;
    item.sentence_ids = scope;
    item.coarse = *filled.coarse;
    item.form_fine = filled.form_fine;
    item.content_fine = filled.content_fine;
    for (const auto& slot : Taxonomy::component_slot_order()) {
      const auto it = filled.components.find(slot);
      if (it == filled.components.end()) continue;
      if (auto span = ground_component(slot, it->second, paragraph, scope)) {
        item.components.push_back(std::move(*span));
      }
    }
    item.provenance = {backend, reply_repairs};

    const bool duplicate = std::any_of(items.begin(), items.end(), [&](const PredItem& x) {
      return x.sentence_ids == item.sentence_ids && x.coarse == item.coarse &&
             x.form_fine == item.form_fine && x.content_fine == item.content_fine;
    });
    if (duplicate) {
      if (counters) ++counters->merged_duplicates;
      continue;  // first occurrence keeps its components
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace rhetoric
