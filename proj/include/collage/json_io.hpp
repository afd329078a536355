#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "collage/model.hpp"

namespace collage {

using Json = nlohmann::json;

// Canonical on-disk form: UTF-8, keys sorted, two-space indent, trailing newline.
std::string dump_canonical(const Json& j);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

Json encode(const SourceImage& v);
Json encode(const PhotoCollection& v);
Json encode(const SemanticLabel& v);
Json encode(const BoundingBox& v);
Json encode(const CharacterRig& v);
Json encode(const VisualElement& v);
Json encode(const ElementLibrary& v);
Json encode(const LabelSelection& v);
Json encode(const Cluster& v);
Json encode(const ScoreRecord& v);
Json encode(const ScoringConfig& v);
Json encode(const CategoryVocabulary& v);
Json encode(const AssetHierarchy& v);
Json encode(const CurationSession& v);
Json encode(const Placement& v);
Json encode(const SceneDocument& v);
Json encode(const Tile& v);
Json encode(const PresentationLayout& v);

// decode<T>(j, path) throws ParseError naming the offending field, prefixed
// with `path` when given.
template <class T>
T decode(const Json& j, const std::string& path = "");

template <> SourceImage decode<SourceImage>(const Json&, const std::string&);
template <> PhotoCollection decode<PhotoCollection>(const Json&, const std::string&);
template <> SemanticLabel decode<SemanticLabel>(const Json&, const std::string&);
template <> BoundingBox decode<BoundingBox>(const Json&, const std::string&);
template <> CharacterRig decode<CharacterRig>(const Json&, const std::string&);
template <> VisualElement decode<VisualElement>(const Json&, const std::string&);
template <> ElementLibrary decode<ElementLibrary>(const Json&, const std::string&);
template <> LabelSelection decode<LabelSelection>(const Json&, const std::string&);
template <> Cluster decode<Cluster>(const Json&, const std::string&);
template <> ScoreRecord decode<ScoreRecord>(const Json&, const std::string&);
template <> ScoringConfig decode<ScoringConfig>(const Json&, const std::string&);
template <> CategoryVocabulary decode<CategoryVocabulary>(const Json&, const std::string&);
template <> AssetHierarchy decode<AssetHierarchy>(const Json&, const std::string&);
template <> CurationSession decode<CurationSession>(const Json&, const std::string&);
template <> Placement decode<Placement>(const Json&, const std::string&);
template <> SceneDocument decode<SceneDocument>(const Json&, const std::string&);
template <> Tile decode<Tile>(const Json&, const std::string&);
template <> PresentationLayout decode<PresentationLayout>(const Json&, const std::string&);

}  // namespace collage
