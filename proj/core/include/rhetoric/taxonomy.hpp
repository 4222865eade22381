#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rhetoric {

// The CCL rhetoric label sets: 8 coarse types, per-track fine types, and
// the component slots used by the extraction track. Declaration order is
// load-bearing: modal-type ties are broken by it.

inline constexpr int kTrackForm = 1;     // form-level fine types
inline constexpr int kTrackContent = 2;  // content-level fine types

struct Taxonomy {
  struct CoarseEntry {
    std::string name;
    std::vector<std::string> form_fines;      // track-1 list, declaration order
    std::vector<std::string> content_fines;   // track-2 list, empty for track-1-only types
    std::vector<std::string> component_slots; // track-3 slots applicable to the type
  };

  std::vector<CoarseEntry> coarse;   // declaration order
  std::string no_rhetoric;           // the explicit "no rhetoric" label

  static const Taxonomy& instance();

  bool is_coarse(std::string_view name) const;
  const CoarseEntry* find(std::string_view coarse) const;

  // Fine-type list for a coarse type on the given track (kTrackForm /
  // kTrackContent). Empty when the track does not cover the type.
  const std::vector<std::string>& fines(std::string_view coarse, int track) const;
  bool is_fine(std::string_view coarse, int track, std::string_view fine) const;

  std::vector<std::string> coarse_names() const;
  // The four types present in all three tracks.
  std::vector<std::string> shared_coarse() const;
  // The four types that exist only in track-1.
  std::vector<std::string> track1_only_coarse() const;

  // All component slot names, in record serialization order.
  static const std::vector<std::string>& component_slot_order();
  static bool is_component_slot(std::string_view name);
};

}  // namespace rhetoric
