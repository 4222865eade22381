#include "rhetoric/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"
#include "rhetoric/text.hpp"

namespace rhetoric {

namespace {

using nlohmann::ordered_json;

constexpr const char* kInternalFormatName = "rhetoric-internal";
constexpr int kInternalVersion = 1;

// Official-format component field names and the slots they map to.
const std::vector<std::pair<std::string, std::string>>& official_slot_fields() {
  static const std::vector<std::pair<std::string, std::string>> fields = {
      {"conjunction", "喻词"},
      {"tenor", "本体"},
      {"vehicle", "喻体"},
      {"personificationFeature", "比拟的特征"},
      {"personificationObject", "比拟的对象"},
      {"hyperboleObject", "夸张的对象"},
      {"hyperboleDescription", "夸张的描述"},
      {"parallelismMarker", "排比词"},
  };
  return fields;
}

[[noreturn]] void fail_line(const std::string& path, int line_no, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<Sentence> sentences_from_texts(const std::vector<std::string>& texts) {
  std::vector<Sentence> out;
  int offset = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Sentence s;
    s.id = static_cast<int>(i) + 1;
    s.text = texts[i];
    s.start = offset;
    offset += static_cast<int>(cp_length(s.text));
    out.push_back(std::move(s));
  }
  return out;
}

GoldItem official_item(const ordered_json& j, const std::string& doc_id) {
  GoldItem item;
  if (!j.contains("sentenceIds") || !j["sentenceIds"].is_array()) {
    throw std::runtime_error("item missing sentenceIds in " + doc_id);
  }
  for (const auto& v : j["sentenceIds"]) item.sentence_ids.insert(v.get<int>());
  item.coarse = j.value("rhetoric", std::string());
  if (j.contains("form") && !j["form"].is_null()) item.form_fine = j["form"].get<std::string>();
  if (j.contains("content") && !j["content"].is_null()) {
    item.content_fine = j["content"].get<std::string>();
  }
  for (const auto& [field, slot] : official_slot_fields()) {
    if (!j.contains(field)) continue;
    const auto& texts = j[field];
    const auto& begins = j.value(field + "BeginIdx", ordered_json::array());
    const auto& ends = j.value(field + "EndIdx", ordered_json::array());
    if (!texts.is_array() || texts.size() != begins.size() || texts.size() != ends.size()) {
      throw std::runtime_error("mismatched " + field + " arrays in " + doc_id);
    }
    if (texts.empty()) continue;
    ComponentSpan span;
    span.slot = slot;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      Piece p;
      p.text = texts[i].get<std::string>();
      p.begin = begins[i].get<int>();
      p.end = ends[i].get<int>();
      span.pieces.push_back(std::move(p));
    }
    std::sort(span.pieces.begin(), span.pieces.end(),
              [](const Piece& a, const Piece& b) { return a.begin < b.begin; });
    item.components.push_back(std::move(span));
  }
  return item;
}

// The raw annotation arrives with the three tracks' labels on separate
// items when they were annotated independently; items describing the same
// sentence set and coarse type are folded into one. Conflicting fine
// labels keep the first seen and emit a warning.
std::vector<GoldItem> merge_items(std::vector<GoldItem> items, const std::string& doc_id,
                                  std::vector<std::string>* warnings) {
  std::vector<GoldItem> merged;
  for (auto& item : items) {
    GoldItem* target = nullptr;
    for (auto& m : merged) {
      if (m.sentence_ids == item.sentence_ids && m.coarse == item.coarse) {
        target = &m;
        break;
      }
    }
    if (!target) {
      merged.push_back(std::move(item));
      continue;
    }
    auto warn = [&](const std::string& what) {
      const std::string msg = doc_id + ": duplicate annotation for " + target->coarse +
                              ", conflicting " + what + " kept first";
      if (warnings) {
        warnings->push_back(msg);
      } else {
        std::cerr << "warning: " << msg << "\n";
      }
    };
    if (item.form_fine) {
      if (!target->form_fine) {
        target->form_fine = item.form_fine;
      } else if (*target->form_fine != *item.form_fine) {
        warn("form type");
      }
    }
    if (item.content_fine) {
      if (!target->content_fine) {
        target->content_fine = item.content_fine;
      } else if (*target->content_fine != *item.content_fine) {
        warn("content type");
      }
    }
    for (auto& span : item.components) {
      const bool present = std::any_of(
          target->components.begin(), target->components.end(),
          [&](const ComponentSpan& existing) { return existing.slot == span.slot; });
      if (present) {
        warn("component " + span.slot);
      } else {
        target->components.push_back(std::move(span));
      }
    }
  }
  return merged;
}

Instance parse_official_line(const ordered_json& j, int ordinal,
                             std::vector<std::string>* warnings) {
  Instance inst;
  if (j.contains("docId")) {
    inst.paragraph.doc_id = j["docId"].get<std::string>();
  } else {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "doc-%04d", ordinal);
    inst.paragraph.doc_id = buf;
  }
  if (!j.contains("paragraph")) throw std::runtime_error("missing paragraph field");
  inst.paragraph.text = j["paragraph"].get<std::string>();
  if (j.contains("sentences")) {
    std::vector<std::string> texts;
    for (const auto& s : j["sentences"]) texts.push_back(s.get<std::string>());
    inst.paragraph.sentences = sentences_from_texts(texts);
  } else {
    inst.paragraph.sentences = segment_sentences(inst.paragraph.text);
  }
  std::vector<GoldItem> items;
  for (const auto& it : j.value("items", ordered_json::array())) {
    items.push_back(official_item(it, inst.paragraph.doc_id));
  }
  inst.items = merge_items(std::move(items), inst.paragraph.doc_id, warnings);
  return inst;
}

Instance parse_internal_line(const ordered_json& j) {
  Instance inst;
  inst.paragraph.doc_id = j.at("doc_id").get<std::string>();
  inst.paragraph.text = j.at("text").get<std::string>();
  for (const auto& s : j.at("sentences")) {
    Sentence sent;
    sent.id = s.at("id").get<int>();
    sent.start = s.at("start").get<int>();
    sent.text = s.at("text").get<std::string>();
    inst.paragraph.sentences.push_back(std::move(sent));
  }
  for (const auto& it : j.value("items", ordered_json::array())) {
    GoldItem item;
    for (const auto& v : it.at("sentence_ids")) item.sentence_ids.insert(v.get<int>());
    item.coarse = it.at("coarse").get<std::string>();
    if (it.contains("form")) item.form_fine = it["form"].get<std::string>();
    if (it.contains("content")) item.content_fine = it["content"].get<std::string>();
    for (const auto& c : it.value("components", ordered_json::array())) {
      ComponentSpan span;
      span.slot = c.at("slot").get<std::string>();
      for (const auto& p : c.at("pieces")) {
        Piece piece;
        piece.text = p.at("text").get<std::string>();
        piece.begin = p.at("begin").get<int>();
        piece.end = p.at("end").get<int>();
        span.pieces.push_back(std::move(piece));
      }
      item.components.push_back(std::move(span));
    }
    inst.items.push_back(std::move(item));
  }
  return inst;
}

}  // namespace

const Sentence* Paragraph::sentence(int id) const {
  for (const auto& s : sentences) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::vector<Sentence> segment_sentences(const std::string& text) {
  const std::u32string u = decode_utf8(text);
  auto is_terminator = [](char32_t c) {
    return c == U'。' || c == U'！' || c == U'？' || c == U'；' || c == U'…';
  };
  auto is_closing_quote = [](char32_t c) {
    return c == U'”' || c == U'』' || c == U'」' || c == U'’' || c == U'"';
  };
  std::vector<std::u32string> parts;
  std::u32string current;
  for (std::size_t i = 0; i < u.size(); ++i) {
    current.push_back(u[i]);
    if (is_terminator(u[i])) {
      // run of terminators (……!?) plus trailing closing quotes stays together
      while (i + 1 < u.size() && (is_terminator(u[i + 1]) || is_closing_quote(u[i + 1]))) {
        current.push_back(u[++i]);
      }
      parts.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) {
    const bool only_space = std::all_of(current.begin(), current.end(), is_space);
    if (only_space && !parts.empty()) {
      parts.back() += current;
    } else {
      parts.push_back(current);
    }
  }
  std::vector<std::string> texts;
  texts.reserve(parts.size());
  for (const auto& p : parts) texts.push_back(encode_utf8(p));
  return sentences_from_texts(texts);
}

void validate_instance(const Instance& inst) {
  const auto& para = inst.paragraph;
  const std::u32string full = decode_utf8(para.text);
  std::string concat;
  int expected_start = 0;
  int expected_id = 1;
  for (const auto& s : para.sentences) {
    if (s.text.empty()) {
      throw std::runtime_error(para.doc_id + ": empty sentence " + std::to_string(s.id));
    }
    if (s.id != expected_id) {
      throw std::runtime_error(para.doc_id + ": sentence ids not contiguous at " +
                               std::to_string(s.id));
    }
    if (s.start != expected_start) {
      throw std::runtime_error(para.doc_id + ": sentence " + std::to_string(s.id) +
                               " start offset " + std::to_string(s.start) + " != " +
                               std::to_string(expected_start));
    }
    concat += s.text;
    expected_start += static_cast<int>(cp_length(s.text));
    ++expected_id;
  }
  if (concat != para.text) {
    throw std::runtime_error(para.doc_id + ": sentence concatenation != paragraph text");
  }
  const auto& tax = Taxonomy::instance();
  for (const auto& item : inst.items) {
    if (item.sentence_ids.empty()) {
      throw std::runtime_error(para.doc_id + ": item with empty sentence id set");
    }
    for (const int id : item.sentence_ids) {
      if (id < 1 || id > static_cast<int>(para.sentences.size())) {
        throw std::runtime_error(para.doc_id + ": sentence id " + std::to_string(id) +
                                 " out of range");
      }
    }
    if (!tax.is_coarse(item.coarse)) {
      throw std::runtime_error(para.doc_id + ": unknown rhetoric type " + item.coarse);
    }
    if (item.form_fine && !tax.is_fine(item.coarse, kTrackForm, *item.form_fine)) {
      throw std::runtime_error(para.doc_id + ": form type " + *item.form_fine +
                               " not valid for " + item.coarse);
    }
    if (item.content_fine && !tax.is_fine(item.coarse, kTrackContent, *item.content_fine)) {
      throw std::runtime_error(para.doc_id + ": content type " + *item.content_fine +
                               " not valid for " + item.coarse);
    }
    for (const auto& span : item.components) {
      if (!Taxonomy::is_component_slot(span.slot)) {
        throw std::runtime_error(para.doc_id + ": unknown component slot " + span.slot);
      }
      for (const auto& piece : span.pieces) {
        if (piece.begin < 0 || piece.end < piece.begin ||
            piece.end >= static_cast<int>(full.size())) {
          throw std::runtime_error(para.doc_id + ": component " + span.slot +
                                   " index [" + std::to_string(piece.begin) + "," +
                                   std::to_string(piece.end) + "] out of range");
        }
        const std::string sliced = encode_utf8(
            std::u32string_view(full).substr(piece.begin, piece.end - piece.begin + 1));
        if (sliced != piece.text) {
          throw std::runtime_error(para.doc_id + ": component " + span.slot + " text \"" +
                                   piece.text + "\" does not match paragraph slice \"" +
                                   sliced + "\"");
        }
      }
    }
  }
}

std::vector<Instance> load_dataset(const std::string& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::vector<Instance> out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  int ordinal = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(trimmed);
    } catch (const std::exception& e) {
      fail_line(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (format == DatasetFormat::Internal && !header_seen) {
      header_seen = true;
      if (!j.contains("format") || j["format"] != kInternalFormatName) {
        fail_line(path, line_no, "missing internal format header");
      }
      if (j.value("version", 0) != kInternalVersion) {
        fail_line(path, line_no, "unsupported internal format version");
      }
      continue;
    }
    ++ordinal;
    try {
      Instance inst = format == DatasetFormat::Official
                          ? parse_official_line(j, ordinal, nullptr)
                          : parse_internal_line(j);
      validate_instance(inst);
      out.push_back(std::move(inst));
    } catch (const std::exception& e) {
      fail_line(path, line_no, e.what());
    }
  }
  if (format == DatasetFormat::Internal && !header_seen) {
    throw std::runtime_error(path + ": empty internal dataset (header line required)");
  }
  return out;
}

void save_dataset(const std::vector<Instance>& instances, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  ordered_json header;
  header["format"] = kInternalFormatName;
  header["version"] = kInternalVersion;
  out << header.dump() << "\n";
  for (const auto& inst : instances) {
    ordered_json j;
    j["doc_id"] = inst.paragraph.doc_id;
    j["text"] = inst.paragraph.text;
    j["sentences"] = ordered_json::array();
    for (const auto& s : inst.paragraph.sentences) {
      j["sentences"].push_back({{"id", s.id}, {"start", s.start}, {"text", s.text}});
    }
    j["items"] = ordered_json::array();
    for (const auto& item : inst.items) {
      ordered_json ji;
      ji["sentence_ids"] = std::vector<int>(item.sentence_ids.begin(), item.sentence_ids.end());
      ji["coarse"] = item.coarse;
      if (item.form_fine) ji["form"] = *item.form_fine;
      if (item.content_fine) ji["content"] = *item.content_fine;
      ji["components"] = ordered_json::array();
      for (const auto& span : item.components) {
        ordered_json jc;
        jc["slot"] = span.slot;
        jc["pieces"] = ordered_json::array();
        for (const auto& p : span.pieces) {
          jc["pieces"].push_back({{"text", p.text}, {"begin", p.begin}, {"end", p.end}});
        }
        ji["components"].push_back(std::move(jc));
      }
      j["items"].push_back(std::move(ji));
    }
    out << j.dump() << "\n";
  }
}

CorpusStats compute_stats(const std::vector<Instance>& instances) {
  if (instances.empty()) throw std::runtime_error("compute_stats: empty instance list");
  CorpusStats stats;
  stats.instances = static_cast<int>(instances.size());
  long total_chars = 0;
  long total_sentences = 0;
  for (const auto& inst : instances) {
    total_chars += static_cast<long>(cp_length(inst.paragraph.text));
    total_sentences += static_cast<long>(inst.paragraph.sentences.size());
    for (const auto& item : inst.items) {
      if (item.form_fine) {
        ++stats.form_devices;
        ++stats.form_fine_counts[*item.form_fine];
      }
      if (item.content_fine) {
        ++stats.content_devices;
        ++stats.content_fine_counts[*item.content_fine];
      }
      stats.components += static_cast<int>(item.components.size());
    }
  }
  stats.avg_chars = static_cast<double>(total_chars) / stats.instances;
  stats.avg_sentences = static_cast<double>(total_sentences) / stats.instances;
  return stats;
}

ModalFine modal_fine_type(const CorpusStats& stats, const std::string& coarse, int track) {
  const auto& tax = Taxonomy::instance();
  const auto& fines = tax.fines(coarse, track);
  if (fines.empty()) {
    throw std::runtime_error("no track-" + std::to_string(track) + " fine types for " + coarse);
  }
  const auto& counts =
      track == kTrackForm ? stats.form_fine_counts : stats.content_fine_counts;
  ModalFine best;
  int best_count = 0;
  for (const auto& fine : fines) {  // declaration order breaks ties
    const auto it = counts.find(fine);
    const int c = it == counts.end() ? 0 : it->second;
    if (c > best_count) {
      best_count = c;
      best.fine = fine;
    }
  }
  if (best_count == 0) {
    best.fine = fines.front();
    best.taxonomy_default = true;
  }
  return best;
}

std::string stats_to_json(const CorpusStats& stats) {
  ordered_json j;
  j["instances"] = stats.instances;
  j["form_devices"] = stats.form_devices;
  j["content_devices"] = stats.content_devices;
  j["components"] = stats.components;
  j["avg_chars"] = stats.avg_chars;
  j["avg_sentences"] = stats.avg_sentences;
  j["form_fine_counts"] = stats.form_fine_counts;
  j["content_fine_counts"] = stats.content_fine_counts;
  return j.dump();
}

CorpusStats stats_from_json(const std::string& json_text) {
  const auto j = ordered_json::parse(json_text);
  CorpusStats stats;
  stats.instances = j.at("instances").get<int>();
  stats.form_devices = j.at("form_devices").get<int>();
  stats.content_devices = j.at("content_devices").get<int>();
  stats.components = j.at("components").get<int>();
  stats.avg_chars = j.at("avg_chars").get<double>();
  stats.avg_sentences = j.at("avg_sentences").get<double>();
  stats.form_fine_counts = j.at("form_fine_counts").get<std::map<std::string, int>>();
  stats.content_fine_counts = j.at("content_fine_counts").get<std::map<std::string, int>>();
  return stats;
}

}  // namespace rhetoric
