#include "rhetoric/schema.hpp"

#include <algorithm>

#include "rhetoric/text.hpp"

namespace rhetoric {

namespace {

// JSON string escaping; CJK stays raw since the exchange format is UTF-8.
void append_json_string(std::string& out, const std::string& s) {
  out.push_back('"');
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
}

void append_pair(std::string& out, bool& first, const std::string& key,
                 const std::string& value) {
  if (!first) out += ", ";
  first = false;
  append_json_string(out, key);
  out += ": ";
  append_json_string(out, value);
}

}  // namespace

std::vector<RhetoricRecord> annotation_to_records(const Instance& instance) {
  std::vector<RhetoricRecord> out;
  for (const auto& item : instance.items) {
    RhetoricRecord rec;
    for (const int id : item.sentence_ids) {  // std::set iterates ascending
      const Sentence* s = instance.paragraph.sentence(id);
      if (s) rec.fragment += s->text;
    }
    rec.coarse = item.coarse;
    rec.form_fine = item.form_fine;
    rec.content_fine = item.content_fine;
    for (const auto& span : item.components) {
      std::vector<std::string> texts;
      texts.reserve(span.pieces.size());
      for (const auto& p : span.pieces) texts.push_back(p.text);
      rec.components[span.slot] = join_pieces(texts);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string serialize_records(const std::vector<RhetoricRecord>& records) {
  std::string out = "[";
  bool first_rec = true;
  for (const auto& rec : records) {
    if (!first_rec) out += ", ";
    first_rec = false;
    out += "{";
    bool first = true;
    append_pair(out, first, kKeyFragment, rec.fragment);
    if (rec.coarse) append_pair(out, first, kKeyCoarse, *rec.coarse);
    if (rec.form_fine) append_pair(out, first, kKeyFormFine, *rec.form_fine);
    if (rec.content_fine) append_pair(out, first, kKeyContentFine, *rec.content_fine);
    for (const auto& slot : Taxonomy::component_slot_order()) {
      const auto it = rec.components.find(slot);
      if (it != rec.components.end()) append_pair(out, first, slot, it->second);
    }
    out += "}";
  }
  out += "]";
  return out;
}

std::string join_pieces(const std::vector<std::string>& pieces) {
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) out += "&";
    out += pieces[i];
  }
  return out;
}

std::vector<std::string> split_component(const std::string& joined) {
  std::vector<std::string> out;
  std::string current;
  for (const char c : joined) {
    if (c == '&') {
      const std::string piece = trim(current);
      if (!piece.empty()) out.push_back(piece);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  const std::string piece = trim(current);
  if (!piece.empty()) out.push_back(piece);
  return out;
}

std::vector<RhetoricRecord> filter_records(const std::vector<RhetoricRecord>& records,
                                           const std::vector<std::string>& coarse_types) {
  std::vector<RhetoricRecord> out;
  for (const auto& rec : records) {
    if (!rec.coarse) continue;
    if (std::find(coarse_types.begin(), coarse_types.end(), *rec.coarse) !=
        coarse_types.end()) {
      out.push_back(rec);
    }
  }
  return out;
}

}  // namespace rhetoric
