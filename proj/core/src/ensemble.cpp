#include "rhetoric/ensemble.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace rhetoric {

namespace {

struct VoteKey {
  std::set<int> ids;
  std::string coarse;
  std::string fine;

  bool operator==(const VoteKey&) const = default;
};

VoteKey key_of(const PredItem& item, FineTrack track) {
  VoteKey key;
  key.ids = item.sentence_ids;
  key.coarse = item.coarse;
  key.fine = (track == FineTrack::Form ? item.form_fine : item.content_fine).value_or("");
  return key;
}

}  // namespace

double vote_score(const std::vector<bool>& indicators, const EnsembleSpec& spec) {
  if (indicators.size() != spec.pos.size()) {
    throw std::invalid_argument("vote_score: indicator count != member count");
  }
  double score = 0.0;
  for (std::size_t i = 0; i < indicators.size(); ++i) {
    const double neg = i < spec.neg.size() ? spec.neg[i] : spec.pos[i];
    score += indicators[i] ? spec.pos[i] : -neg;
  }
  return score;
}

std::vector<PredItem> weighted_vote(const std::vector<std::vector<PredItem>>& member_items,
                                    const EnsembleSpec& spec, FineTrack track) {
  if (member_items.size() != spec.members.size()) {
    throw std::invalid_argument("weighted_vote: got " +
                                std::to_string(member_items.size()) + " member runs for " +
                                std::to_string(spec.members.size()) + " spec members");
  }
  if (spec.pos.size() != spec.members.size() ||
      (!spec.neg.empty() && spec.neg.size() != spec.members.size())) {
    throw std::invalid_argument("weighted_vote: weight vectors do not match member count");
  }

  // candidate keys in first-seen order, with per-member indicators
  std::vector<VoteKey> keys;
  std::vector<std::vector<bool>> indicators;
  for (std::size_t m = 0; m < member_items.size(); ++m) {
    for (const auto& item : member_items[m]) {
      const VoteKey key = key_of(item, track);
      auto it = std::find(keys.begin(), keys.end(), key);
      std::size_t idx;
      if (it == keys.end()) {
        keys.push_back(key);
        indicators.emplace_back(member_items.size(), false);
        idx = keys.size() - 1;
      } else {
        idx = static_cast<std::size_t>(it - keys.begin());
      }
      indicators[idx][m] = true;
    }
  }

  std::vector<PredItem> out;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (vote_score(indicators[k], spec) <= spec.theta_e) continue;  // strict ">"
    // metadata donor: highest pos weight among emitters, earlier member on ties
    std::size_t donor = member_items.size();
    for (std::size_t m = 0; m < member_items.size(); ++m) {
      if (!indicators[k][m]) continue;
      if (donor == member_items.size() || spec.pos[m] > spec.pos[donor]) donor = m;
    }
    for (const auto& item : member_items[donor]) {
      if (key_of(item, track) == keys[k]) {
        out.push_back(item);
        break;
      }
    }
  }
  return out;
}

FallbackChoice fallback_select(const std::vector<DocOutcome>& member_outcomes) {
  for (std::size_t m = 0; m < member_outcomes.size(); ++m) {
    if (member_outcomes[m].valid) {
      return {static_cast<int>(m), member_outcomes[m].items};
    }
  }
  return {};
}

}  // namespace rhetoric
