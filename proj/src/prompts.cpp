#include "collage/prompts.hpp"

#include <map>

#include "collage/errors.hpp"

namespace collage::prompts {

namespace {

const std::map<std::string_view, std::string_view>& assets() {
  static const std::map<std::string_view, std::string_view> table = {
#include "collage/prompt_assets.inc"
  };
  return table;
}

std::string_view base_name(Stage stage) {
  switch (stage) {
    case Stage::select_full: return "select_full";
    case Stage::select_keyword: return "select_keyword";
    case Stage::classify: return "classify";
    case Stage::cluster: return "cluster";
  }
  return "select_full";
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

}  // namespace

std::string_view asset(std::string_view file_name) {
  auto it = assets().find(file_name);
  if (it == assets().end()) throw Error("missing prompt asset '" + std::string(file_name) + "'");
  return it->second;
}

std::string_view template_text(Stage stage) {
  return asset(std::string(base_name(stage)) + "." + std::string(kVersion) + ".txt");
}

std::string_view schema_text(Stage stage) {
  return asset(std::string(base_name(stage)) + ".schema." + std::string(kVersion) + ".txt");
}

std::string format_label_list(const std::vector<std::string>& labels) {
  std::string out = "[";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ", ";
    out += labels[i];
  }
  return out + "]";
}

std::string system_prompt(Stage stage, const std::vector<std::string>& available_labels) {
  std::string text(template_text(stage));
  replace_all(text, "[labels_list]", format_label_list(available_labels));
  text += schema_text(stage);
  return text;
}

std::string repair_prompt(const std::string& base_prompt, const std::string& error) {
  std::string fix(asset("repair." + std::string(kVersion) + ".txt"));
  replace_all(fix, "[error]", error);
  return base_prompt + fix;
}

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::select_full:
    case Stage::select_keyword: return "selection";
    case Stage::classify: return "classification";
    case Stage::cluster: return "clustering";
  }
  return "selection";
}

}  // namespace collage::prompts
