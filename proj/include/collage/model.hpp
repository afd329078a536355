#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace collage {

using ElementId = std::string;
using Embedding = std::vector<double>;

struct SourceImage {
  std::string image_id;
  std::string path;
  int width = 0;
  int height = 0;

  bool operator==(const SourceImage&) const = default;
};

struct PhotoCollection {
  std::string collection_id;
  std::vector<SourceImage> images;

  bool operator==(const PhotoCollection&) const = default;
};

enum class LabelCategory { object, scene, attribute, action };

struct SemanticLabel {
  std::string text;
  LabelCategory category = LabelCategory::object;

  bool operator==(const SemanticLabel&) const = default;
};

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
  bool inside(int width, int height) const {
    return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= width && y + h <= height;
  }
  bool contains(const BoundingBox& o) const {
    return o.x >= x && o.y >= y && o.x + o.w <= x + w && o.y + o.h <= y + h;
  }
  bool operator==(const BoundingBox&) const = default;
  auto operator<=>(const BoundingBox&) const = default;
};

enum class JointRole { rotation_center, auxiliary };

struct RigPart {
  std::string name;
  std::string mask_path;

  bool operator==(const RigPart&) const = default;
};

// Joint coordinates are pixels relative to the cutout's top-left corner.
struct Joint {
  std::string name;
  double x = 0;
  double y = 0;
  JointRole role = JointRole::auxiliary;

  bool operator==(const Joint&) const = default;
};

struct CharacterRig {
  std::vector<RigPart> parts;
  std::vector<Joint> joints;

  bool operator==(const CharacterRig&) const = default;
};

// One RGBA cutout. `bbox` is the detection box, `cutout_box` the tight
// rectangle around the mask (both in source-image pixels). `cutout_path`
// is relative to the library directory.
struct VisualElement {
  ElementId element_id;
  std::string label;
  std::vector<std::string> aliases;  // every label this element is indexed under, sorted
  std::string source_image_id;
  BoundingBox bbox;
  BoundingBox cutout_box;
  std::string cutout_path;
  std::int64_t resolution = 0;
  Embedding visual_embedding;
  std::optional<CharacterRig> keypoints;

  bool operator==(const VisualElement&) const = default;
};

struct ElementLibrary {
  std::string library_id;
  int embedding_dim = 0;
  std::map<std::string, std::vector<ElementId>> label_index;
  std::map<std::string, LabelCategory> label_category;
  std::map<ElementId, VisualElement> elements;

  std::vector<std::string> labels() const;
  bool operator==(const ElementLibrary&) const = default;
};

struct LabelSelection {
  std::vector<std::string> central;
  std::vector<std::string> related;

  std::vector<std::string> all() const;
  bool empty() const { return central.empty() && related.empty(); }
  bool operator==(const LabelSelection&) const = default;
};

// A node of the semantic hierarchy. In a label tree the leaves are label
// texts; in an AssetHierarchy the leaves are element ids.
struct Cluster {
  std::string name;
  std::vector<Cluster> children;
  std::vector<std::string> leaves;

  bool operator==(const Cluster&) const = default;
};

struct ScoreRecord {
  double s_div = 0;
  double s_cns = 0;
  double s_res = 0;
  double s_total = 0;
  double height = 0;

  bool operator==(const ScoreRecord&) const = default;
};

// Category roles drive height constants and the classification fallback.
enum class CategoryRole { characters, backgrounds, accessories };

struct CategoryVocabulary {
  std::string characters = "characters";
  std::string backgrounds = "backgrounds";
  std::string accessories = "accessories";

  const std::string& name(CategoryRole role) const;
  std::optional<CategoryRole> role_of(const std::string& name) const;
  std::vector<std::string> ordered() const { return {characters, backgrounds, accessories}; }
  bool operator==(const CategoryVocabulary&) const = default;
};

struct AssetHierarchy {
  std::vector<Cluster> categories;  // exactly three roots, vocabulary order
  std::map<ElementId, ScoreRecord> scores;
  std::vector<ElementId> suppressed;  // sorted

  const Cluster* category(const std::string& name) const;
  Cluster* category(const std::string& name);
  bool operator==(const AssetHierarchy&) const = default;
};

struct ScoringConfig {
  double w_div = 0.333;
  double w_cns = 0.333;
  double w_res = 0.333;
  double h0_character = 150;
  double k_character = 180;
  double h0_other = 100;
  double k_other = 120;
  int embedding_dim = 64;

  bool operator==(const ScoringConfig&) const = default;
};

enum class SelectionMode { full, keyword_only };
enum class PresentMode { sized, uniform };

struct CurationSession {
  std::string session_id;
  std::string library_id;
  std::string story;
  SelectionMode mode = SelectionMode::full;
  CategoryVocabulary vocabulary;
  ScoringConfig scoring;
  LabelSelection selection;
  std::map<std::string, std::string> roles;  // label -> category name
  std::vector<Cluster> label_tree;           // per category, leaves are labels
  AssetHierarchy hierarchy;
  int prompt_attempts = 1;
  std::map<std::string, int> llm_calls;  // stage -> calls issued
  std::vector<std::string> warnings;
  bool insufficient_assets = false;

  bool operator==(const CurationSession&) const = default;
};

struct Placement {
  std::string placement_id;
  ElementId element_id;
  double x = 0;
  double y = 0;
  double scale = 1;
  double rotation = 0;  // degrees, counterclockwise
  bool flip_h = false;
  bool visible = true;

  bool operator==(const Placement&) const = default;
};

struct SceneDocument {
  std::string scene_id;
  int canvas_width = 1280;
  int canvas_height = 720;
  std::vector<Placement> placements;  // back to front
  std::uint64_t revision = 0;
  std::uint64_t next_placement_seq = 1;

  const Placement* find(const std::string& placement_id) const;
  bool operator==(const SceneDocument&) const = default;
};

struct Tile {
  ElementId element_id;
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  bool operator==(const Tile&) const = default;
};

struct PresentationLayout {
  double canvas_width = 0;
  PresentMode mode = PresentMode::sized;
  std::vector<Tile> tiles;
  std::vector<std::string> cluster_order;  // DFS order of cluster paths
  std::vector<std::string> warnings;

  bool operator==(const PresentationLayout&) const = default;
};

std::string to_string(LabelCategory c);
LabelCategory label_category_from_string(const std::string& s);
std::string to_string(JointRole r);
std::string to_string(SelectionMode m);
SelectionMode selection_mode_from_string(const std::string& s);
std::string to_string(PresentMode m);
PresentMode present_mode_from_string(const std::string& s);

}  // namespace collage
