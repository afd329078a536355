#include "collage/json_io.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "collage/errors.hpp"

namespace collage {

namespace {

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path.empty() ? "<root>" : path, "expected object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(join_path(path, key), "missing required field");
  return *it;
}

std::string get_string(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_string()) throw ParseError(join_path(path, key), "expected string");
  return v.get<std::string>();
}

double get_number(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number()) throw ParseError(join_path(path, key), "expected number");
  return v.get<double>();
}

std::int64_t get_int(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number_integer()) throw ParseError(join_path(path, key), "expected integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_uint(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ParseError(join_path(path, key), "expected non-negative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_boolean()) throw ParseError(join_path(path, key), "expected boolean");
  return v.get<bool>();
}

const Json& get_array(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_array()) throw ParseError(join_path(path, key), "expected array");
  return v;
}

const Json& get_object(const Json& j, const char* key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_object()) throw ParseError(join_path(path, key), "expected object");
  return v;
}

std::vector<std::string> get_strings(const Json& j, const char* key, const std::string& path) {
  const Json& arr = get_array(j, key, path);
  std::vector<std::string> out;
  out.reserve(arr.size());
  const std::string p = join_path(path, key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) throw ParseError(index_path(p, i), "expected string");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

template <class T>
std::vector<T> get_list(const Json& j, const char* key, const std::string& path) {
  const Json& arr = get_array(j, key, path);
  std::vector<T> out;
  out.reserve(arr.size());
  const std::string p = join_path(path, key);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(decode<T>(arr[i], index_path(p, i)));
  return out;
}

template <class T>
Json encode_list(const std::vector<T>& v) {
  Json arr = Json::array();
  for (const auto& x : v) arr.push_back(encode(x));
  return arr;
}

int checked_int(std::int64_t v, const std::string& path) {
  if (v < INT32_MIN || v > INT32_MAX) throw ParseError(path, "integer out of range");
  return static_cast<int>(v);
}

}  // namespace

std::string dump_canonical(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.filename().string(), e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  // Write-then-rename so readers never see a half-written file.
  const std::filesystem::path tmp =
      path.string() + ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError(path.string(), "write failed");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path.string(), "cannot replace file");
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, dump_canonical(j));
}

// ---- SourceImage / PhotoCollection

Json encode(const SourceImage& v) {
  return {{"image_id", v.image_id}, {"path", v.path}, {"width", v.width}, {"height", v.height}};
}

template <>
SourceImage decode<SourceImage>(const Json& j, const std::string& p) {
  SourceImage v;
  v.image_id = get_string(j, "image_id", p);
  v.path = get_string(j, "path", p);
  v.width = checked_int(get_int(j, "width", p), join_path(p, "width"));
  v.height = checked_int(get_int(j, "height", p), join_path(p, "height"));
  if (v.width < 1) throw ParseError(join_path(p, "width"), "must be >= 1");
  if (v.height < 1) throw ParseError(join_path(p, "height"), "must be >= 1");
  return v;
}

Json encode(const PhotoCollection& v) {
  return {{"collection_id", v.collection_id}, {"images", encode_list(v.images)}};
}

template <>
PhotoCollection decode<PhotoCollection>(const Json& j, const std::string& p) {
  PhotoCollection v;
  v.collection_id = get_string(j, "collection_id", p);
  v.images = get_list<SourceImage>(j, "images", p);
  return v;
}

// ---- labels and boxes

Json encode(const SemanticLabel& v) { return {{"text", v.text}, {"category", to_string(v.category)}}; }

template <>
SemanticLabel decode<SemanticLabel>(const Json& j, const std::string& p) {
  SemanticLabel v;
  v.text = get_string(j, "text", p);
  try {
    v.category = label_category_from_string(get_string(j, "category", p));
  } catch (const ParseError& e) {
    throw ParseError(join_path(p, "category"), e.what());
  }
  return v;
}

Json encode(const BoundingBox& v) { return {{"x", v.x}, {"y", v.y}, {"w", v.w}, {"h", v.h}}; }

template <>
BoundingBox decode<BoundingBox>(const Json& j, const std::string& p) {
  BoundingBox v;
  v.x = checked_int(get_int(j, "x", p), join_path(p, "x"));
  v.y = checked_int(get_int(j, "y", p), join_path(p, "y"));
  v.w = checked_int(get_int(j, "w", p), join_path(p, "w"));
  v.h = checked_int(get_int(j, "h", p), join_path(p, "h"));
  if (v.x < 0) throw ParseError(join_path(p, "x"), "must be >= 0");
  if (v.y < 0) throw ParseError(join_path(p, "y"), "must be >= 0");
  if (v.w < 1) throw ParseError(join_path(p, "w"), "must be >= 1");
  if (v.h < 1) throw ParseError(join_path(p, "h"), "must be >= 1");
  return v;
}

// ---- rigs and elements

Json encode(const CharacterRig& v) {
  Json parts = Json::array();
  for (const auto& part : v.parts) parts.push_back({{"part_name", part.name}, {"mask_path", part.mask_path}});
  Json joints = Json::array();
  for (const auto& jt : v.joints)
    joints.push_back({{"joint_name", jt.name}, {"x", jt.x}, {"y", jt.y}, {"role", to_string(jt.role)}});
  return {{"parts", parts}, {"joints", joints}};
}

template <>
CharacterRig decode<CharacterRig>(const Json& j, const std::string& p) {
  CharacterRig v;
  const Json& parts = get_array(j, "parts", p);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string ip = index_path(join_path(p, "parts"), i);
    v.parts.push_back({get_string(parts[i], "part_name", ip), get_string(parts[i], "mask_path", ip)});
  }
  const Json& joints = get_array(j, "joints", p);
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const std::string ip = index_path(join_path(p, "joints"), i);
    Joint jt;
    jt.name = get_string(joints[i], "joint_name", ip);
    jt.x = get_number(joints[i], "x", ip);
    jt.y = get_number(joints[i], "y", ip);
    const std::string role = get_string(joints[i], "role", ip);
    if (role == "rotation_center") jt.role = JointRole::rotation_center;
    else if (role == "auxiliary") jt.role = JointRole::auxiliary;
    else throw ParseError(join_path(ip, "role"), "unknown joint role '" + role + "'");
    v.joints.push_back(std::move(jt));
  }
  return v;
}

Json encode(const VisualElement& v) {
  Json j = {{"element_id", v.element_id},
            {"label", v.label},
            {"aliases", v.aliases},
            {"source_image_id", v.source_image_id},
            {"bbox", encode(v.bbox)},
            {"cutout_box", encode(v.cutout_box)},
            {"cutout_path", v.cutout_path},
            {"resolution", v.resolution},
            {"visual_embedding", v.visual_embedding}};
  if (v.keypoints) j["keypoints"] = encode(*v.keypoints);
  return j;
}

template <>
VisualElement decode<VisualElement>(const Json& j, const std::string& p) {
  VisualElement v;
  v.element_id = get_string(j, "element_id", p);
  v.label = get_string(j, "label", p);
  v.aliases = get_strings(j, "aliases", p);
  v.source_image_id = get_string(j, "source_image_id", p);
  v.bbox = decode<BoundingBox>(field(j, "bbox", p), join_path(p, "bbox"));
  v.cutout_box = decode<BoundingBox>(field(j, "cutout_box", p), join_path(p, "cutout_box"));
  v.cutout_path = get_string(j, "cutout_path", p);
  v.resolution = get_int(j, "resolution", p);
  const Json& emb = get_array(j, "visual_embedding", p);
  for (std::size_t i = 0; i < emb.size(); ++i) {
    if (!emb[i].is_number()) throw ParseError(index_path(join_path(p, "visual_embedding"), i), "expected number");
    v.visual_embedding.push_back(emb[i].get<double>());
  }
  if (j.contains("keypoints") && !j["keypoints"].is_null())
    v.keypoints = decode<CharacterRig>(j["keypoints"], join_path(p, "keypoints"));
  return v;
}

Json encode(const ElementLibrary& v) {
  Json elements = Json::array();
  for (const auto& [id, e] : v.elements) elements.push_back(encode(e));
  Json categories = Json::object();
  for (const auto& [label, c] : v.label_category) categories[label] = to_string(c);
  return {{"library_id", v.library_id},
          {"embedding_dim", v.embedding_dim},
          {"elements", elements},
          {"label_index", v.label_index},
          {"label_category", categories}};
}

template <>
ElementLibrary decode<ElementLibrary>(const Json& j, const std::string& p) {
  ElementLibrary v;
  v.library_id = get_string(j, "library_id", p);
  v.embedding_dim = checked_int(get_int(j, "embedding_dim", p), join_path(p, "embedding_dim"));
  for (auto& e : get_list<VisualElement>(j, "elements", p)) {
    const std::string id = e.element_id;
    v.elements.emplace(id, std::move(e));
  }
  const Json& index = get_object(j, "label_index", p);
  for (auto it = index.begin(); it != index.end(); ++it) {
    const std::string lp = join_path(join_path(p, "label_index"), it.key());
    if (!it.value().is_array()) throw ParseError(lp, "expected array");
    std::vector<ElementId> ids;
    for (std::size_t i = 0; i < it.value().size(); ++i) {
      if (!it.value()[i].is_string()) throw ParseError(index_path(lp, i), "expected string");
      ids.push_back(it.value()[i].get<std::string>());
    }
    v.label_index.emplace(it.key(), std::move(ids));
  }
  if (j.contains("label_category")) {
    const Json& cats = get_object(j, "label_category", p);
    for (auto it = cats.begin(); it != cats.end(); ++it) {
      const std::string cp = join_path(join_path(p, "label_category"), it.key());
      if (!it.value().is_string()) throw ParseError(cp, "expected string");
      try {
        v.label_category.emplace(it.key(), label_category_from_string(it.value().get<std::string>()));
      } catch (const ParseError& e) {
        throw ParseError(cp, e.what());
      }
    }
  }
  return v;
}

// ---- selection and hierarchy

Json encode(const LabelSelection& v) { return {{"central", v.central}, {"related", v.related}}; }

template <>
LabelSelection decode<LabelSelection>(const Json& j, const std::string& p) {
  return {get_strings(j, "central", p), get_strings(j, "related", p)};
}

Json encode(const Cluster& v) {
  return {{"name", v.name}, {"children", encode_list(v.children)}, {"leaves", v.leaves}};
}

template <>
Cluster decode<Cluster>(const Json& j, const std::string& p) {
  Cluster v;
  v.name = get_string(j, "name", p);
  if (v.name.empty()) throw ParseError(join_path(p, "name"), "cluster name must be non-empty");
  v.children = get_list<Cluster>(j, "children", p);
  v.leaves = get_strings(j, "leaves", p);
  return v;
}

Json encode(const ScoreRecord& v) {
  return {{"s_div", v.s_div}, {"s_cns", v.s_cns}, {"s_res", v.s_res}, {"s_total", v.s_total}, {"height", v.height}};
}

template <>
ScoreRecord decode<ScoreRecord>(const Json& j, const std::string& p) {
  ScoreRecord v;
  v.s_div = get_number(j, "s_div", p);
  v.s_cns = get_number(j, "s_cns", p);
  v.s_res = get_number(j, "s_res", p);
  v.s_total = get_number(j, "s_total", p);
  v.height = get_number(j, "height", p);
  return v;
}

Json encode(const ScoringConfig& v) {
  return {{"w_div", v.w_div},
          {"w_cns", v.w_cns},
          {"w_res", v.w_res},
          {"h0_character", v.h0_character},
          {"k_character", v.k_character},
          {"h0_other", v.h0_other},
          {"k_other", v.k_other},
          {"embedding_dim", v.embedding_dim}};
}

template <>
ScoringConfig decode<ScoringConfig>(const Json& j, const std::string& p) {
  ScoringConfig v;
  v.w_div = get_number(j, "w_div", p);
  v.w_cns = get_number(j, "w_cns", p);
  v.w_res = get_number(j, "w_res", p);
  v.h0_character = get_number(j, "h0_character", p);
  v.k_character = get_number(j, "k_character", p);
  v.h0_other = get_number(j, "h0_other", p);
  v.k_other = get_number(j, "k_other", p);
  v.embedding_dim = checked_int(get_int(j, "embedding_dim", p), join_path(p, "embedding_dim"));
  for (auto [name, w] : {std::pair{"w_div", v.w_div}, {"w_cns", v.w_cns}, {"w_res", v.w_res}})
    if (w < 0) throw ParseError(join_path(p, name), "weight must be >= 0");
  return v;
}

Json encode(const CategoryVocabulary& v) {
  return {{"characters", v.characters}, {"backgrounds", v.backgrounds}, {"accessories", v.accessories}};
}

template <>
CategoryVocabulary decode<CategoryVocabulary>(const Json& j, const std::string& p) {
  CategoryVocabulary v;
  v.characters = get_string(j, "characters", p);
  v.backgrounds = get_string(j, "backgrounds", p);
  v.accessories = get_string(j, "accessories", p);
  return v;
}

Json encode(const AssetHierarchy& v) {
  Json scores = Json::object();
  for (const auto& [id, s] : v.scores) scores[id] = encode(s);
  return {{"categories", encode_list(v.categories)}, {"scores", scores}, {"suppressed", v.suppressed}};
}

template <>
AssetHierarchy decode<AssetHierarchy>(const Json& j, const std::string& p) {
  AssetHierarchy v;
  v.categories = get_list<Cluster>(j, "categories", p);
  if (v.categories.size() != 3)
    throw ParseError(join_path(p, "categories"), "expected exactly three category roots");
  const Json& scores = get_object(j, "scores", p);
  for (auto it = scores.begin(); it != scores.end(); ++it)
    v.scores.emplace(it.key(), decode<ScoreRecord>(it.value(), join_path(join_path(p, "scores"), it.key())));
  v.suppressed = get_strings(j, "suppressed", p);
  return v;
}

Json encode(const CurationSession& v) {
  return {{"session_id", v.session_id},
          {"library_id", v.library_id},
          {"story", v.story},
          {"mode", to_string(v.mode)},
          {"vocabulary", encode(v.vocabulary)},
          {"scoring", encode(v.scoring)},
          {"selection", encode(v.selection)},
          {"roles", v.roles},
          {"label_tree", encode_list(v.label_tree)},
          {"hierarchy", encode(v.hierarchy)},
          {"prompt_attempts", v.prompt_attempts},
          {"llm_calls", v.llm_calls},
          {"warnings", v.warnings},
          {"insufficient_assets", v.insufficient_assets}};
}

template <>
CurationSession decode<CurationSession>(const Json& j, const std::string& p) {
  CurationSession v;
  v.session_id = get_string(j, "session_id", p);
  v.library_id = get_string(j, "library_id", p);
  v.story = get_string(j, "story", p);
  try {
    v.mode = selection_mode_from_string(get_string(j, "mode", p));
  } catch (const ParseError& e) {
    throw ParseError(join_path(p, "mode"), e.what());
  }
  v.vocabulary = decode<CategoryVocabulary>(field(j, "vocabulary", p), join_path(p, "vocabulary"));
  v.scoring = decode<ScoringConfig>(field(j, "scoring", p), join_path(p, "scoring"));
  v.selection = decode<LabelSelection>(field(j, "selection", p), join_path(p, "selection"));
  const Json& roles = get_object(j, "roles", p);
  for (auto it = roles.begin(); it != roles.end(); ++it) {
    if (!it.value().is_string()) throw ParseError(join_path(join_path(p, "roles"), it.key()), "expected string");
    v.roles.emplace(it.key(), it.value().get<std::string>());
  }
  v.label_tree = get_list<Cluster>(j, "label_tree", p);
  v.hierarchy = decode<AssetHierarchy>(field(j, "hierarchy", p), join_path(p, "hierarchy"));
  v.prompt_attempts = checked_int(get_int(j, "prompt_attempts", p), join_path(p, "prompt_attempts"));
  if (v.prompt_attempts < 1) throw ParseError(join_path(p, "prompt_attempts"), "must be >= 1");
  const Json& calls = get_object(j, "llm_calls", p);
  for (auto it = calls.begin(); it != calls.end(); ++it) {
    if (!it.value().is_number_integer())
      throw ParseError(join_path(join_path(p, "llm_calls"), it.key()), "expected integer");
    v.llm_calls.emplace(it.key(), it.value().get<int>());
  }
  v.warnings = get_strings(j, "warnings", p);
  v.insufficient_assets = get_bool(j, "insufficient_assets", p);
  return v;
}

// ---- scene

Json encode(const Placement& v) {
  return {{"placement_id", v.placement_id},
          {"element_id", v.element_id},
          {"x", v.x},
          {"y", v.y},
          {"scale", v.scale},
          {"rotation", v.rotation},
          {"flip_h", v.flip_h},
          {"visible", v.visible}};
}

template <>
Placement decode<Placement>(const Json& j, const std::string& p) {
  Placement v;
  v.placement_id = get_string(j, "placement_id", p);
  v.element_id = get_string(j, "element_id", p);
  v.x = get_number(j, "x", p);
  v.y = get_number(j, "y", p);
  v.scale = get_number(j, "scale", p);
  if (!(v.scale > 0)) throw ParseError(join_path(p, "scale"), "must be > 0");
  v.rotation = get_number(j, "rotation", p);
  v.flip_h = get_bool(j, "flip_h", p);
  v.visible = get_bool(j, "visible", p);
  return v;
}

Json encode(const SceneDocument& v) {
  return {{"scene_id", v.scene_id},
          {"canvas", {{"width", v.canvas_width}, {"height", v.canvas_height}}},
          {"placements", encode_list(v.placements)},
          {"revision", v.revision},
          {"next_placement_seq", v.next_placement_seq}};
}

template <>
SceneDocument decode<SceneDocument>(const Json& j, const std::string& p) {
  SceneDocument v;
  v.scene_id = get_string(j, "scene_id", p);
  const Json& canvas = get_object(j, "canvas", p);
  const std::string cp = join_path(p, "canvas");
  v.canvas_width = checked_int(get_int(canvas, "width", cp), join_path(cp, "width"));
  v.canvas_height = checked_int(get_int(canvas, "height", cp), join_path(cp, "height"));
  if (v.canvas_width < 1) throw ParseError(join_path(cp, "width"), "must be >= 1");
  if (v.canvas_height < 1) throw ParseError(join_path(cp, "height"), "must be >= 1");
  v.placements = get_list<Placement>(j, "placements", p);
  v.revision = j.contains("revision") ? get_uint(j, "revision", p) : 0;
  v.next_placement_seq = j.contains("next_placement_seq") ? get_uint(j, "next_placement_seq", p) : 1;
  return v;
}

// ---- presentation

Json encode(const Tile& v) {
  return {{"element_id", v.element_id}, {"x", v.x}, {"y", v.y}, {"w", v.w}, {"h", v.h}};
}

template <>
Tile decode<Tile>(const Json& j, const std::string& p) {
  Tile v;
  v.element_id = get_string(j, "element_id", p);
  v.x = get_number(j, "x", p);
  v.y = get_number(j, "y", p);
  v.w = get_number(j, "w", p);
  v.h = get_number(j, "h", p);
  return v;
}

Json encode(const PresentationLayout& v) {
  return {{"canvas_width", v.canvas_width},
          {"mode", to_string(v.mode)},
          {"tiles", encode_list(v.tiles)},
          {"cluster_order", v.cluster_order},
          {"warnings", v.warnings}};
}

template <>
PresentationLayout decode<PresentationLayout>(const Json& j, const std::string& p) {
  PresentationLayout v;
  v.canvas_width = get_number(j, "canvas_width", p);
  try {
    v.mode = present_mode_from_string(get_string(j, "mode", p));
  } catch (const ParseError& e) {
    throw ParseError(join_path(p, "mode"), e.what());
  }
  v.tiles = get_list<Tile>(j, "tiles", p);
  v.cluster_order = get_strings(j, "cluster_order", p);
  v.warnings = get_strings(j, "warnings", p);
  return v;
}

}  // namespace collage
