#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "collage/backend.hpp"
#include "collage/model.hpp"

namespace collage {

inline constexpr std::size_t kMaxStoryChars = 2000;

struct CurateConfig {
  int max_retries = 2;  // re-asks per LLM stage after the first call
  int max_depth = 3;    // cluster levels below a category root
  CategoryVocabulary vocabulary;
  ScoringConfig scoring;
  int prompt_attempts = 1;
  bool parse_characters = true;
  unsigned workers = 0;
};

// Bookkeeping shared by the stages of one curation run.
struct StageLog {
  std::map<std::string, int> llm_calls;
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

// Key the prompts use for a role ("Character", "Background", "Accessories").
std::string prompt_key(CategoryRole role);
// Maps an LLM category key back to a role; accepts singular/plural and any
// case, plus the vocabulary's own names.
std::optional<CategoryRole> role_from_key(const std::string& key, const CategoryVocabulary& vocab);

// Label Selection. Labels outside `available_labels` are dropped; central wins
// over related; keyword_only returns central labels only. Throws
// CurationError("selection") when no usable answer arrives within the retries.
LabelSelection select_labels(const std::string& story, const std::vector<std::string>& available_labels,
                             SelectionMode mode, Backend& backend, int max_retries, StageLog& log);

// Role Classification. Every selected label gets exactly one role: labels
// the model invents are dropped, a label listed twice keeps its first role,
// and omitted labels fall back to scene -> backgrounds, living being ->
// characters, otherwise accessories.
std::map<std::string, CategoryRole> classify_roles(const LabelSelection& selection, Backend& backend,
                                                   const std::map<std::string, LabelCategory>& label_categories,
                                                   int max_retries, StageLog& log);

// Deterministic fallback used for omitted labels.
CategoryRole fallback_role(const std::string& label, const std::map<std::string, LabelCategory>& label_categories);

// Repairs one category's model output into a label tree rooted at
// `root_name`: unknown labels dropped, duplicates kept once, omissions
// reattached under an "other" child, same-named siblings merged, empty
// clusters removed, depth capped at `max_depth`. `node` is null when the
// model returned nothing for the category (flat fallback).
Cluster repair_label_tree(const std::string& root_name, const nlohmann::ordered_json* node,
                          const std::vector<std::string>& labels, int max_depth, StageLog& log);

// Layered Clustering for one category.
Cluster cluster_labels(CategoryRole role, const std::vector<std::string>& labels, Backend& backend,
                       const CurateConfig& config, StageLog& log);

// Layered Clustering for all categories in one call, one root per vocabulary
// entry (vocabulary order). Unusable output after the retries degrades to
// flat roots.
std::vector<Cluster> cluster_all(const std::map<std::string, CategoryRole>& roles,
                                 const std::vector<std::string>& label_order, Backend& backend,
                                 const CurateConfig& config, StageLog& log);

// Replaces label leaves with per-label clusters holding element ids. An
// element indexed under several selected labels stays under the first one
// in DFS order.
AssetHierarchy expand_to_elements(const std::vector<Cluster>& label_tree, const ElementLibrary& library);

struct CharacterParseOutcome {
  std::map<ElementId, CharacterRig> rigs;  // mask paths relative to `rig_root`
  std::vector<std::string> warnings;
};

// Sends character elements to the part parser. Rig masks are written under
// `rig_root/rigs`; "no character detected" and transport failures leave the
// element rigless.
CharacterParseOutcome parse_characters(const AssetHierarchy& hierarchy, const CategoryVocabulary& vocab,
                                       const ElementLibrary& library, const std::filesystem::path& library_dir,
                                       Backend& backend, const std::filesystem::path& rig_root, unsigned workers = 0);

struct CurationResult {
  CurationSession session;
  std::map<ElementId, CharacterRig> rigs;
};

// Stage II end to end. Scores are not computed here.
CurationResult curate(const std::string& story, const ElementLibrary& library,
                      const std::filesystem::path& library_dir, SelectionMode mode, Backend& backend,
                      const CurateConfig& config, const std::filesystem::path& session_dir);

}  // namespace collage
