#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace collage::prompts {

enum class Stage { select_full, select_keyword, classify, cluster };

inline constexpr std::string_view kVersion = "v1";

// The bundled template text for a stage, exactly as stored in assets/prompts.
std::string_view template_text(Stage stage);
// Output-format section appended after the template.
std::string_view schema_text(Stage stage);
std::string_view asset(std::string_view file_name);

// "[a, b, c]" with labels in the given order.
std::string format_label_list(const std::vector<std::string>& labels);

// Template with `[labels_list]` substituted, followed by the output format.
std::string system_prompt(Stage stage, const std::vector<std::string>& available_labels = {});

// Same prompt plus the correction section quoting `error`.
std::string repair_prompt(const std::string& base_prompt, const std::string& error);

std::string stage_name(Stage stage);

}  // namespace collage::prompts
