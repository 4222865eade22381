#pragma once

#include <string>
#include <vector>

#include "rhetoric/postprocess.hpp"

namespace rhetoric {

// Which fine-type field the vote key carries (track-1 votes on form
// types, track-2 on content types).
enum class FineTrack { Form = 1, Content = 2 };

struct EnsembleSpec {
  std::string name;
  std::vector<std::string> members;  // ordered: M_1 first
  std::vector<double> pos;
  std::vector<double> neg;           // defaults to pos
  double theta_e = 0.0;
};

// Linear-weighted voting over one document. Candidate keys are the union
// of members' (sentence set, coarse, fine) keys; a key survives when
// sum(pos_i * I_i - neg_i * (1 - I_i)) strictly exceeds theta_e. The
// surviving item's remaining metadata comes from the highest-weighted
// member that emitted the key.
std::vector<PredItem> weighted_vote(const std::vector<std::vector<PredItem>>& member_items,
                                    const EnsembleSpec& spec, FineTrack track);

// Raw score for one key given the member indicator vector.
double vote_score(const std::vector<bool>& indicators, const EnsembleSpec& spec);

// Per-member result of one document for the fallback chain; `valid`
// means the gateway produced text and it parsed.
struct DocOutcome {
  bool valid = false;
  std::vector<PredItem> items;
};

struct FallbackChoice {
  int member_index = -1;  // -1: every member failed, prediction is empty
  std::vector<PredItem> items;
};

// First member whose output is valid wins; only member order and the
// validity flags matter.
FallbackChoice fallback_select(const std::vector<DocOutcome>& member_outcomes);

}  // namespace rhetoric
