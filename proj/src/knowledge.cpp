#include "collage/knowledge.hpp"

#include <map>
#include <set>

namespace collage::knowledge {

namespace {

const std::set<std::string, std::less<>>& living() {
  static const std::set<std::string, std::less<>> s = {
      "boy",    "girl",   "woman",  "man",      "child",    "kid",    "baby",   "person", "people",
      "dog",    "puppy",  "cat",    "kitten",   "bird",     "horse",  "cow",    "sheep",  "pig",
      "rabbit", "fox",    "bear",   "deer",     "lion",     "tiger",  "monkey", "duck",   "chicken",
      "fish",   "whale",  "dolphin", "sea lion", "seal",    "athlete", "biker", "astronaut", "player",
      "butterfly", "bee", "elephant", "giraffe", "zebra",   "penguin", "owl",   "frog",   "turtle"};
  return s;
}

const std::set<std::string, std::less<>>& scenery() {
  static const std::set<std::string, std::less<>> s = {
      "park",  "sky",    "beach", "ocean",  "sea",    "mountain", "lake",   "river", "street", "road",
      "city",  "forest", "field", "desert", "garden", "space",    "meadow", "valley", "sidewalk", "sand",
      "night", "sunset", "snow",  "landscape", "countryside", "waterfall", "island", "jungle", "playground"};
  return s;
}

const std::map<std::string, std::vector<std::string>, std::less<>>& related_table() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> t = {
      {"park", {"sky", "sun", "cloud", "grass", "tree", "flower"}},
      {"dog", {"frisbee", "ball"}},
      {"boy", {"sunglasses"}},
      {"girl", {"hat", "skirt"}},
      {"woman", {"umbrella", "hat"}},
      {"man", {"hat"}},
      {"cat", {"ball"}},
      {"beach", {"sand", "ocean", "sun", "umbrella", "sunglasses"}},
      {"ocean", {"boat", "ship", "cloud"}},
      {"garden", {"tree", "flower", "butterfly", "sky", "grass"}},
      {"street", {"car", "bus", "building", "sidewalk", "road"}},
      {"city", {"building", "car", "bus", "street"}},
      {"mountain", {"sky", "cloud", "river", "tree"}},
      {"lake", {"boat", "tree", "mountain"}},
      {"river", {"boat", "tree", "bridge"}},
      {"space", {"moon", "stars", "spaceship", "planet"}},
      {"night", {"moon", "stars"}},
      {"airport", {"airplane", "helicopter"}},
      {"station", {"train", "bus"}},
  };
  return t;
}

const std::map<std::string, std::vector<std::string>, std::less<>>& synonym_table() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> t = {
      {"boy", {"man", "child", "kid"}},     {"girl", {"woman", "child", "kid"}},
      {"child", {"boy", "girl", "kid"}},    {"kid", {"boy", "girl", "child"}},
      {"puppy", {"dog"}},                   {"kitten", {"cat"}},
      {"sea", {"ocean"}},                   {"automobile", {"car"}},
      {"plane", {"airplane"}},              {"aeroplane", {"airplane"}},
      {"shore", {"beach"}},                 {"home", {"house"}},
  };
  return t;
}

const std::map<std::string, std::string, std::less<>>& group_table() {
  static const std::map<std::string, std::string, std::less<>> t = {
      {"frisbee", "dog toy"},          {"ball", "dog toy"},
      {"sunglasses", "human belongings"}, {"hat", "human belongings"},
      {"umbrella", "human belongings"}, {"skirt", "human belongings"},
      {"sun", "environment"},          {"cloud", "environment"},
      {"moon", "environment"},         {"stars", "environment"},
      {"grass", "plant"},              {"tree", "plant"},
      {"flower", "plant"},             {"car", "land vehicle"},
      {"bus", "land vehicle"},         {"train", "land vehicle"},
      {"boat", "water vehicle"},       {"ship", "water vehicle"},
      {"airplane", "air vehicle"},     {"helicopter", "air vehicle"},
      {"house", "structure"},          {"building", "structure"},
      {"bank", "structure"},           {"bench", "playground equipment"},
      {"swing", "playground equipment"}, {"slide", "playground equipment"},
      {"kite", "toy"},                 {"butterfly", "insect"},
      {"bee", "insect"},
  };
  return t;
}

const std::map<std::string, std::string, std::less<>>& supergroup_table() {
  static const std::map<std::string, std::string, std::less<>> t = {
      {"land vehicle", "transport"}, {"water vehicle", "transport"}, {"air vehicle", "transport"},
      {"insect", "wildlife"},        {"bird", "wildlife"},
  };
  return t;
}

const std::vector<std::string>& empty_list() {
  static const std::vector<std::string> v;
  return v;
}

}  // namespace

bool is_living_being(std::string_view label) { return living().contains(label); }
bool is_scenery(std::string_view label) { return scenery().contains(label); }

CategoryRole mock_role(std::string_view label) {
  if (is_living_being(label)) return CategoryRole::characters;
  if (is_scenery(label)) return CategoryRole::backgrounds;
  return CategoryRole::accessories;
}

const std::vector<std::string>& related_labels(std::string_view label) {
  auto it = related_table().find(label);
  return it == related_table().end() ? empty_list() : it->second;
}

const std::vector<std::string>& synonyms(std::string_view word) {
  auto it = synonym_table().find(word);
  return it == synonym_table().end() ? empty_list() : it->second;
}

std::optional<std::string> group_of(std::string_view label) {
  auto it = group_table().find(label);
  if (it == group_table().end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> supergroup_of(std::string_view group) {
  auto it = supergroup_table().find(group);
  if (it == supergroup_table().end()) return std::nullopt;
  return it->second;
}

const std::vector<SemanticLabel>& fallback_vocabulary() {
  static const std::vector<SemanticLabel> v = {
      {"person", LabelCategory::object}, {"dog", LabelCategory::object},   {"tree", LabelCategory::object},
      {"car", LabelCategory::object},    {"flower", LabelCategory::object}, {"bird", LabelCategory::object},
      {"house", LabelCategory::object},  {"ball", LabelCategory::object},   {"street", LabelCategory::scene},
      {"sky", LabelCategory::scene},     {"beach", LabelCategory::scene},   {"bright", LabelCategory::attribute},
      {"walking", LabelCategory::action}};
  return v;
}

}  // namespace collage::knowledge
