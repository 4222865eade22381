#include "rhetoric/metrics.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rhetoric {

namespace {

using nlohmann::ordered_json;

// All pieces for a slot, as a comparable multiset.
std::vector<Piece> slot_pieces(const std::vector<ComponentSpan>& components,
                               const std::string& slot) {
  std::vector<Piece> out;
  for (const auto& span : components) {
    if (span.slot != slot) continue;
    out.insert(out.end(), span.pieces.begin(), span.pieces.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool pieces_equal(std::vector<Piece> lhs, std::vector<Piece> rhs, bool relaxed) {
  if (relaxed) {
    auto texts = [](const std::vector<Piece>& v) {
      std::vector<std::string> t;
      t.reserve(v.size());
      for (const auto& p : v) t.push_back(p.text);
      std::sort(t.begin(), t.end());
      return t;
    };
    return texts(lhs) == texts(rhs);
  }
  return lhs == rhs;
}

struct SlotFamily {
  const char* slot;
  F1Parts EvalReport::*field;
};

constexpr SlotFamily kSlotFamilies[] = {
    {"喻词", &EvalReport::conjunction},
    {"本体", &EvalReport::tenor},
    {"喻体", &EvalReport::vehicle},
};

}  // namespace

double sentence_iou(const std::set<int>& a, const std::set<int>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const int id : a) inter += b.count(id);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<MatchedPair> match_items(const std::vector<PredItem>& preds,
                                     const std::vector<GoldItem>& golds) {
  std::vector<MatchedPair> candidates;
  for (std::size_t g = 0; g < golds.size(); ++g) {
    for (std::size_t p = 0; p < preds.size(); ++p) {
      const double iou = sentence_iou(preds[p].sentence_ids, golds[g].sentence_ids);
      if (iou > 0.0) candidates.push_back({p, g, iou});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const MatchedPair& a, const MatchedPair& b) {
                     if (a.iou != b.iou) return a.iou > b.iou;
                     if (a.gold_index != b.gold_index) return a.gold_index < b.gold_index;
                     return a.pred_index < b.pred_index;
                   });
  std::vector<bool> pred_used(preds.size(), false);
  std::vector<bool> gold_used(golds.size(), false);
  std::vector<MatchedPair> pairs;
  for (const auto& c : candidates) {
    if (pred_used[c.pred_index] || gold_used[c.gold_index]) continue;
    pred_used[c.pred_index] = true;
    gold_used[c.gold_index] = true;
    pairs.push_back(c);
  }
  return pairs;
}

double compose_classification_score(double iou, double f1_rhetoric, double f1_fine) {
  const double f1 = 0.3 * f1_rhetoric + 0.7 * f1_fine;
  return 0.3 * iou + 0.7 * f1;
}

double compose_extraction_score(double iou, double f1_conjunction, double f1_tenor,
                                double f1_vehicle) {
  const double f1 = (f1_conjunction + f1_tenor + f1_vehicle) / 3.0;
  return 0.3 * iou + 0.7 * f1;
}

EvalReport evaluate(const std::vector<Instance>& gold,
                    const std::map<std::string, std::vector<PredItem>>& preds, int track,
                    bool relaxed_spans) {
  if (track < 1 || track > 3) throw std::invalid_argument("track must be 1, 2 or 3");
  std::set<std::string> gold_ids;
  for (const auto& inst : gold) gold_ids.insert(inst.paragraph.doc_id);
  for (const auto& [doc_id, _] : preds) {
    if (!gold_ids.count(doc_id)) {
      throw std::runtime_error("predictions contain unknown doc_id: " + doc_id);
    }
  }

  EvalReport report;
  report.track = track;
  report.paragraphs = static_cast<int>(gold.size());
  report.relaxed_spans = relaxed_spans;
  report.notes =
      "greedy IoU matching, micro F1, paragraph-mean IoU, empty-vs-empty IoU = 1";

  static const std::vector<PredItem> kNoItems;
  double iou_sum = 0.0;
  for (const auto& inst : gold) {
    const auto it = preds.find(inst.paragraph.doc_id);
    const auto& doc_preds = it == preds.end() ? kNoItems : it->second;
    const auto& doc_golds = inst.items;

    std::set<int> pred_union, gold_union;
    for (const auto& p : doc_preds) {
      pred_union.insert(p.sentence_ids.begin(), p.sentence_ids.end());
    }
    for (const auto& g : doc_golds) {
      gold_union.insert(g.sentence_ids.begin(), g.sentence_ids.end());
    }
    const double doc_iou = sentence_iou(pred_union, gold_union);
    iou_sum += doc_iou;

    const auto pairs = match_items(doc_preds, doc_golds);

    if (track == 1 || track == 2) {
      report.rhetoric.pred_total += static_cast<long>(doc_preds.size());
      report.rhetoric.gold_total += static_cast<long>(doc_golds.size());
      report.fine.pred_total += static_cast<long>(doc_preds.size());
      report.fine.gold_total += static_cast<long>(doc_golds.size());
      for (const auto& pair : pairs) {
        const auto& p = doc_preds[pair.pred_index];
        const auto& g = doc_golds[pair.gold_index];
        if (p.coarse != g.coarse) continue;
        ++report.rhetoric.tp;
        const auto& pf = track == 1 ? p.form_fine : p.content_fine;
        const auto& gf = track == 1 ? g.form_fine : g.content_fine;
        if (pf == gf) ++report.fine.tp;
      }
    } else {
      for (const auto& family : kSlotFamilies) {
        auto& parts = report.*(family.field);
        for (const auto& p : doc_preds) {
          if (!slot_pieces(p.components, family.slot).empty()) ++parts.pred_total;
        }
        for (const auto& g : doc_golds) {
          if (!slot_pieces(g.components, family.slot).empty()) ++parts.gold_total;
        }
        for (const auto& pair : pairs) {
          const auto pp = slot_pieces(doc_preds[pair.pred_index].components, family.slot);
          const auto gp = slot_pieces(doc_golds[pair.gold_index].components, family.slot);
          if (!pp.empty() && !gp.empty() && pieces_equal(pp, gp, relaxed_spans)) {
            ++parts.tp;
          }
        }
      }
    }

    EvalReport::DocDiagnostic diag;
    diag.doc_id = inst.paragraph.doc_id;
    diag.iou = doc_iou;
    diag.pred_items = static_cast<int>(doc_preds.size());
    diag.gold_items = static_cast<int>(doc_golds.size());
    diag.matched = static_cast<int>(pairs.size());
    report.per_doc.push_back(std::move(diag));
  }

  report.iou = gold.empty() ? 0.0 : iou_sum / static_cast<double>(gold.size());
  if (track == 1 || track == 2) {
    report.composite =
        compose_classification_score(report.iou, report.rhetoric.f1(), report.fine.f1());
  } else {
    report.composite = compose_extraction_score(report.iou, report.conjunction.f1(),
                                                report.tenor.f1(), report.vehicle.f1());
  }
  return report;
}

namespace {

void print_parts(std::ostringstream& out, const std::string& label, const F1Parts& parts) {
  out << "  " << label << ": P=" << parts.precision() << " R=" << parts.recall()
      << " F1=" << parts.f1() << "  (TP=" << parts.tp << " FP=" << parts.fp()
      << " FN=" << parts.fn() << ")\n";
}

ordered_json parts_json(const F1Parts& parts) {
  return {{"precision", parts.precision()},
          {"recall", parts.recall()},
          {"f1", parts.f1()},
          {"tp", parts.tp},
          {"fp", parts.fp()},
          {"fn", parts.fn()}};
}

}  // namespace

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << "track-" << report.track << " report (" << report.notes;
  if (report.track == 3 && report.relaxed_spans) out << ", relaxed span equality";
  out << ")\n";
  out << "  paragraphs: " << report.paragraphs << "\n";
  if (report.track == 1 || report.track == 2) {
    print_parts(out, "F1_rhetoric", report.rhetoric);
    print_parts(out, report.track == 1 ? "F1_form" : "F1_content", report.fine);
  } else {
    print_parts(out, "F1_conjunction", report.conjunction);
    print_parts(out, "F1_tenor", report.tenor);
    print_parts(out, "F1_vehicle", report.vehicle);
  }
  out << "  IoU: " << report.iou << "\n";
  out << "  S" << report.track << ": " << report.composite << "\n";
  return out.str();
}

std::string report_json(const EvalReport& report, bool per_doc) {
  ordered_json j;
  j["track"] = report.track;
  j["notes"] = report.notes;
  j["paragraphs"] = report.paragraphs;
  if (report.track == 1 || report.track == 2) {
    j["f1_rhetoric"] = parts_json(report.rhetoric);
    j[report.track == 1 ? "f1_form" : "f1_content"] = parts_json(report.fine);
  } else {
    j["relaxed_spans"] = report.relaxed_spans;
    j["f1_conjunction"] = parts_json(report.conjunction);
    j["f1_tenor"] = parts_json(report.tenor);
    j["f1_vehicle"] = parts_json(report.vehicle);
  }
  j["iou"] = report.iou;
  j["composite"] = report.composite;
  if (per_doc) {
    j["per_doc"] = ordered_json::array();
    for (const auto& d : report.per_doc) {
      j["per_doc"].push_back({{"doc_id", d.doc_id},
                              {"iou", d.iou},
                              {"pred_items", d.pred_items},
                              {"gold_items", d.gold_items},
                              {"matched", d.matched}});
    }
  }
  return j.dump(2);
}

}  // namespace rhetoric
