#include "rhetoric/taxonomy.hpp"

#include <algorithm>
#include <stdexcept>

namespace rhetoric {

namespace {

Taxonomy build() {
  Taxonomy t;
  t.no_rhetoric = "没有修辞";
  t.coarse = {
      {"比喻",
       {"明喻", "暗喻", "借喻"},
       {"实在物", "动作", "抽象概念"},
       {"本体", "喻体", "喻词"}},
      {"比拟",
       {"名词", "动词", "形容词"},
       {"拟人", "拟物"},
       {"比拟的特征", "比拟的对象"}},
      {"夸张",
       {"直接夸张", "间接夸张"},
       {"扩大夸张", "缩小夸张", "超前夸张"},
       {"夸张的对象", "夸张的描述"}},
      {"排比",
       {"成分排比", "句子排比"},
       {"并列", "承接", "递进"},
       {"排比词"}},
      {"反复", {"间隔反复", "连续反复"}, {}, {}},
      {"设问", {"问答连属", "问答不连属"}, {}, {}},
      {"反问", {"单句反问", "复句反问"}, {}, {}},
      {"摹状", {"通感", "直感"}, {}, {}},
  };
  return t;
}

const std::vector<std::string> kEmpty;

}  // namespace

const Taxonomy& Taxonomy::instance() {
  static const Taxonomy t = build();
  return t;
}

bool Taxonomy::is_coarse(std::string_view name) const { return find(name) != nullptr; }

const Taxonomy::CoarseEntry* Taxonomy::find(std::string_view coarse) const {
  for (const auto& e : this->coarse) {
    if (e.name == coarse) return &e;
  }
  return nullptr;
}

const std::vector<std::string>& Taxonomy::fines(std::string_view coarse, int track) const {
  const CoarseEntry* e = find(coarse);
  if (!e) return kEmpty;
  if (track == kTrackForm) return e->form_fines;
  if (track == kTrackContent) return e->content_fines;
  throw std::invalid_argument("unknown track: " + std::to_string(track));
}

bool Taxonomy::is_fine(std::string_view coarse, int track, std::string_view fine) const {
  const auto& list = fines(coarse, track);
  return std::find(list.begin(), list.end(), fine) != list.end();
}

std::vector<std::string> Taxonomy::coarse_names() const {
  std::vector<std::string> out;
  out.reserve(coarse.size());
  for (const auto& e : coarse) out.push_back(e.name);
  return out;
}

std::vector<std::string> Taxonomy::shared_coarse() const {
  return {"比喻", "比拟", "夸张", "排比"};
}

std::vector<std::string> Taxonomy::track1_only_coarse() const {
  return {"反复", "设问", "反问", "摹状"};
}

const std::vector<std::string>& Taxonomy::component_slot_order() {
  static const std::vector<std::string> order = {
      "喻词", "本体", "喻体", "比拟的特征", "比拟的对象",
      "夸张的对象", "夸张的描述", "排比词"};
  return order;
}

bool Taxonomy::is_component_slot(std::string_view name) {
  const auto& order = component_slot_order();
  return std::find(order.begin(), order.end(), name) != order.end();
}

}  // namespace rhetoric
