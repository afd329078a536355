#include "collage/model.hpp"

#include <algorithm>
#include <set>

#include "collage/errors.hpp"

namespace collage {

std::vector<std::string> ElementLibrary::labels() const {
  std::vector<std::string> out;
  out.reserve(label_index.size());
  for (const auto& [label, ids] : label_index) out.push_back(label);
  return out;
}

std::vector<std::string> LabelSelection::all() const {
  std::vector<std::string> out = central;
  out.insert(out.end(), related.begin(), related.end());
  return out;
}

const std::string& CategoryVocabulary::name(CategoryRole role) const {
  switch (role) {
    case CategoryRole::characters: return characters;
    case CategoryRole::backgrounds: return backgrounds;
    case CategoryRole::accessories: return accessories;
  }
  return accessories;
}

std::optional<CategoryRole> CategoryVocabulary::role_of(const std::string& n) const {
  if (n == characters) return CategoryRole::characters;
  if (n == backgrounds) return CategoryRole::backgrounds;
  if (n == accessories) return CategoryRole::accessories;
  return std::nullopt;
}

const Cluster* AssetHierarchy::category(const std::string& n) const {
  for (const auto& c : categories)
    if (c.name == n) return &c;
  return nullptr;
}

Cluster* AssetHierarchy::category(const std::string& n) {
  for (auto& c : categories)
    if (c.name == n) return &c;
  return nullptr;
}

const Placement* SceneDocument::find(const std::string& placement_id) const {
  for (const auto& p : placements)
    if (p.placement_id == placement_id) return &p;
  return nullptr;
}

std::string to_string(LabelCategory c) {
  switch (c) {
    case LabelCategory::object: return "object";
    case LabelCategory::scene: return "scene";
    case LabelCategory::attribute: return "attribute";
    case LabelCategory::action: return "action";
  }
  return "object";
}

LabelCategory label_category_from_string(const std::string& s) {
  if (s == "object") return LabelCategory::object;
  if (s == "scene") return LabelCategory::scene;
  if (s == "attribute") return LabelCategory::attribute;
  if (s == "action") return LabelCategory::action;
  throw ParseError("category", "unknown label category '" + s + "'");
}

std::string to_string(JointRole r) {
  return r == JointRole::rotation_center ? "rotation_center" : "auxiliary";
}

std::string to_string(SelectionMode m) {
  return m == SelectionMode::full ? "full" : "keyword_only";
}

SelectionMode selection_mode_from_string(const std::string& s) {
  if (s == "full") return SelectionMode::full;
  if (s == "keyword_only" || s == "keyword-only") return SelectionMode::keyword_only;
  throw ParseError("mode", "unknown selection mode '" + s + "'");
}

std::string to_string(PresentMode m) { return m == PresentMode::sized ? "sized" : "uniform"; }

PresentMode present_mode_from_string(const std::string& s) {
  if (s == "sized") return PresentMode::sized;
  if (s == "uniform") return PresentMode::uniform;
  throw ParseError("present", "unknown presentation mode '" + s + "'");
}

}  // namespace collage
