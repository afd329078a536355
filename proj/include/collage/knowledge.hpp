#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collage/model.hpp"

// Small bundled word tables. The engine uses the living-being lexicon for its
// deterministic role fallback; the mock LLM uses the rest to answer prompts.
namespace collage::knowledge {

bool is_living_being(std::string_view label);
bool is_scenery(std::string_view label);

// Role the mock assigns when asked to classify a label.
CategoryRole mock_role(std::string_view label);

// Labels the mock proposes as related to a central label, in preference order.
const std::vector<std::string>& related_labels(std::string_view label);

// Alternatives the mock tries when a story word is not an available label.
const std::vector<std::string>& synonyms(std::string_view word);

// First-layer cluster name for a label, when the mock knows one.
std::optional<std::string> group_of(std::string_view label);

// Second-layer name for a first-layer cluster name.
std::optional<std::string> supergroup_of(std::string_view group);

// Fallback tagging vocabulary for images without a ground-truth sidecar.
const std::vector<SemanticLabel>& fallback_vocabulary();

}  // namespace collage::knowledge
