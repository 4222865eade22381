#include "rhetoric/prompt_asset.hpp"

#include <stdexcept>

namespace rhetoric {

const std::string& asset_text(const std::string& rel_path) {
  const auto& assets = embedded_assets();
  const auto it = assets.find(rel_path);
  if (it == assets.end()) throw std::runtime_error("unknown asset: " + rel_path);
  return it->second;
}

namespace {

const std::map<std::string, std::string>& section_files() {
  static const std::map<std::string, std::string> m = {
      {"比喻", "01_metaphor.txt"},
      {"比拟", "02_personification.txt"},
      {"夸张", "03_hyperbole.txt"},
      {"排比", "04_parallelism.txt"},
      {"反复", "05_repetition.txt"},
      {"设问", "06_hypophora.txt"},
      {"反问", "07_rhetorical_question.txt"},
      {"摹状", "08_sensory.txt"},
  };
  return m;
}

}  // namespace

std::string build_system_prompt(const std::string& version,
                                const std::vector<std::string>& coarse_types) {
  const std::string base = "prompts/" + version + "/";
  std::string out = asset_text(base + "00_header.txt");
  out += "以下是" + std::to_string(coarse_types.size()) +
         "种修辞类型定义，形式上与内容上的细粒度分类，以及案例。你对此都十分熟悉，并能够灵活运用。\n\n";
  int n = 0;
  for (const auto& type : coarse_types) {
    const auto it = section_files().find(type);
    if (it == section_files().end()) {
      throw std::runtime_error("no prompt section for rhetoric type: " + type);
    }
    ++n;
    out += std::to_string(n) + ". " + asset_text(base + it->second) + "\n";
  }
  out += std::to_string(n + 1) + ". 没有修辞\n没有以上" + std::to_string(n) +
         "种类型的修辞手法。\n";
  return out;
}

}  // namespace rhetoric
