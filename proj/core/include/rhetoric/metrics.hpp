#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rhetoric/corpus.hpp"
#include "rhetoric/postprocess.hpp"

namespace rhetoric {

struct F1Parts {
  long tp = 0;
  long pred_total = 0;
  long gold_total = 0;

  double precision() const { return pred_total == 0 ? 0.0 : static_cast<double>(tp) / pred_total; }
  double recall() const { return gold_total == 0 ? 0.0 : static_cast<double>(tp) / gold_total; }
  // harmonic mean, 0 when precision and recall are both 0
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  long fp() const { return pred_total - tp; }
  long fn() const { return gold_total - tp; }
};

// IoU of two sentence-id sets; 1 when both empty, 0 when exactly one is.
double sentence_iou(const std::set<int>& a, const std::set<int>& b);

struct MatchedPair {
  std::size_t pred_index = 0;
  std::size_t gold_index = 0;
  double iou = 0.0;
};

// Greedy one-to-one matching by descending sentence-set IoU; ties by
// (gold order, pred order); zero-overlap pairs never match.
std::vector<MatchedPair> match_items(const std::vector<PredItem>& preds,
                                     const std::vector<GoldItem>& golds);

// Composite scores. Tracks 1/2: S = 0.3*IoU + 0.7*(0.3*F1_rhetoric +
// 0.7*F1_fine). Track 3: S = 0.3*IoU + 0.7 * mean of the three slot F1s.
double compose_classification_score(double iou, double f1_rhetoric, double f1_fine);
double compose_extraction_score(double iou, double f1_conjunction, double f1_tenor,
                                double f1_vehicle);

struct EvalReport {
  int track = 1;
  int paragraphs = 0;
  F1Parts rhetoric;      // tracks 1/2: coarse-type F1
  F1Parts fine;          // track 1: form, track 2: content
  F1Parts conjunction;   // track 3 slot families
  F1Parts tenor;
  F1Parts vehicle;
  double iou = 0.0;      // paragraph-mean sentence-group IoU
  double composite = 0.0;
  bool relaxed_spans = false;
  std::string notes;     // aggregation choices, printed in the header

  struct DocDiagnostic {
    std::string doc_id;
    double iou = 0.0;
    int pred_items = 0;
    int gold_items = 0;
    int matched = 0;
  };
  std::vector<DocDiagnostic> per_doc;
};

// Corpus evaluation: micro-averaged F1 over greedily matched items,
// paragraph-mean IoU, composite from the track formula. Predictions are
// keyed by doc_id; every predicted doc must exist in gold, missing docs
// count as empty predictions. relaxed_spans switches track-3 component
// equality from exact (text, begin, end) to text-only.
EvalReport evaluate(const std::vector<Instance>& gold,
                    const std::map<std::string, std::vector<PredItem>>& preds, int track,
                    bool relaxed_spans = false);

std::string report_table(const EvalReport& report);
std::string report_json(const EvalReport& report, bool per_doc = false);

}  // namespace rhetoric
