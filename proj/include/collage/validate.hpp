#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "collage/model.hpp"

namespace collage {

struct Violation {
  std::string kind;  // dangling_id, missing_file, no_alpha, embedding_norm, ...
  std::string subject;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(const std::string& kind) const;
  bool operator==(const ValidationReport&) const = default;
};

inline constexpr double kUnitNormTolerance = 1e-6;

// Checks every ElementLibrary invariant. Cutout paths are resolved against
// `library_dir`. Pure: the same library and directory give the same report.
ValidationReport validate_library(const ElementLibrary& lib, const std::filesystem::path& library_dir);

// Loads `library.json` from `library_dir` and validates it. Throws IoError
// naming the path when the index itself is unreadable.
ValidationReport validate_library_dir(const std::filesystem::path& library_dir);

// Structural checks on a hierarchy: sibling-unique non-empty names, exactly
// one occurrence of each leaf, category roots match the vocabulary.
ValidationReport validate_hierarchy(const AssetHierarchy& h, const CategoryVocabulary& vocab);

ValidationReport validate_scene(const SceneDocument& scene, const AssetHierarchy& h);

}  // namespace collage
