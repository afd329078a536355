#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "collage/knowledge.hpp"
#include "collage/mock_backend.hpp"
#include "collage/util.hpp"

namespace collage {

namespace {

using OJson = nlohmann::ordered_json;

bool contains(const std::string& hay, std::string_view needle) { return hay.find(needle) != std::string::npos; }

// "[a, b, c]" or "a, b, c" -> {"a", "b", "c"}
std::vector<std::string> parse_list(std::string_view text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '[') s.erase(s.begin());
  if (!s.empty() && s.back() == ']') s.pop_back();
  std::vector<std::string> out;
  for (auto& part : split(s, ',')) {
    std::string t = trim(part);
    if (!t.empty()) out.push_back(to_lower(t));
  }
  return out;
}

std::vector<std::string> available_labels(const std::string& system_prompt) {
  static constexpr std::string_view kMarker = "The visual assets available are:";
  const auto pos = system_prompt.find(kMarker);
  if (pos == std::string::npos) return {};
  const auto start = pos + kMarker.size();
  const auto end = system_prompt.find('\n', start);
  return parse_list(std::string_view(system_prompt).substr(start, end == std::string::npos ? std::string::npos : end - start));
}

std::vector<std::string> words_of(const std::string& story) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : story) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

bool word_matches(const std::string& word, const std::string& label_word) {
  return word == label_word || word == label_word + "s" || word == label_word + "es";
}

// Labels the story names directly, in story order. Multi-word labels match as phrases.
std::vector<std::string> direct_mentions(const std::string& story, const std::vector<std::string>& available,
                                         bool use_synonyms) {
  const auto words = words_of(story);
  std::vector<std::pair<std::vector<std::string>, std::string>> label_words;
  for (const auto& l : available) label_words.emplace_back(split(l, ' '), l);
  std::sort(label_words.begin(), label_words.end(),
            [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  const std::set<std::string> avail(available.begin(), available.end());

  std::vector<std::string> out;
  auto push = [&](const std::string& l) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  };
  for (std::size_t i = 0; i < words.size();) {
    bool matched = false;
    for (const auto& [lw, label] : label_words) {
      if (lw.empty() || i + lw.size() > words.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < lw.size() && ok; ++k) {
        const bool last = k + 1 == lw.size();
        ok = last ? word_matches(words[i + k], lw[k]) : words[i + k] == lw[k];
      }
      if (ok) {
        push(label);
        i += lw.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (use_synonyms) {
      std::string w = words[i];
      if (knowledge::synonyms(w).empty() && w.size() > 1 && w.back() == 's') w.pop_back();
      for (const auto& alt : knowledge::synonyms(w)) {
        if (avail.contains(alt)) {
          push(alt);
          break;
        }
      }
    }
    ++i;
  }
  return out;
}

std::string answer_selection(const std::string& system_prompt, const std::string& story) {
  const auto available = available_labels(system_prompt);
  const auto central = direct_mentions(story, available, true);
  const std::set<std::string> avail(available.begin(), available.end());

  // Scenery first: a setting implies most of the surrounding assets.
  std::vector<std::string> order;
  for (const auto& c : central)
    if (knowledge::is_scenery(c)) order.push_back(c);
  for (const auto& c : central)
    if (!knowledge::is_scenery(c)) order.push_back(c);

  std::vector<std::string> related;
  for (const auto& c : order)
    for (const auto& r : knowledge::related_labels(c))
      if (avail.contains(r) && std::find(central.begin(), central.end(), r) == central.end() &&
          std::find(related.begin(), related.end(), r) == related.end())
        related.push_back(r);

  OJson j;
  j["direct_labels"] = central;
  j["related_labels"] = related;
  return j.dump();
}

std::string answer_keywords(const std::string& system_prompt, const std::string& story) {
  OJson j;
  j["labels"] = direct_mentions(story, available_labels(system_prompt), false);
  return j.dump();
}

std::string role_key(CategoryRole r) {
  switch (r) {
    case CategoryRole::characters: return "Character";
    case CategoryRole::backgrounds: return "Background";
    case CategoryRole::accessories: return "Accessories";
  }
  return "Accessories";
}

std::string answer_classification(const std::string& payload) {
  std::vector<std::string> labels;
  for (const auto& line : split(payload, '\n')) {
    const std::string t = trim(line);
    for (std::string_view key : {"- Direct labels:", "- Related labels:", "Direct labels:", "Related labels:"}) {
      if (t.rfind(key, 0) == 0) {
        for (auto& l : parse_list(std::string_view(t).substr(key.size())))
          if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
        break;
      }
    }
  }
  OJson j;
  j["Character"] = OJson::array();
  j["Accessories"] = OJson::array();
  j["Background"] = OJson::array();
  for (const auto& l : labels) j[role_key(knowledge::mock_role(l))].push_back(l);
  return j.dump();
}

OJson cluster_one(const std::vector<std::string>& labels) {
  bool any_group = false;
  for (const auto& l : labels) any_group = any_group || knowledge::group_of(l).has_value();
  if (!any_group) return labels;

  OJson groups = OJson::object();
  for (const auto& l : labels) {
    const std::string g = knowledge::group_of(l).value_or(l);
    if (!groups.contains(g)) groups[g] = OJson::array();
    groups[g].push_back(l);
  }
  // Lift groups that share a known parent into a second layer.
  std::map<std::string, int> parent_count;
  for (const auto& [g, _] : groups.items())
    if (auto p = knowledge::supergroup_of(g)) ++parent_count[*p];
  OJson out = OJson::object();
  for (const auto& [g, members] : groups.items()) {
    auto p = knowledge::supergroup_of(g);
    if (p && parent_count[*p] >= 2) {
      if (!out.contains(*p)) out[*p] = OJson::object();
      out[*p][g] = members;
    } else {
      out[g] = members;
    }
  }
  return out;
}

std::string answer_clustering(const std::string& payload) {
  OJson j = OJson::object();
  for (const auto& line : split(payload, '\n')) {
    std::string t = trim(line);
    if (t.rfind("- ", 0) != 0) continue;
    t = t.substr(2);
    const auto colon = t.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = trim(std::string_view(t).substr(0, colon));
    const std::string rest = trim(std::string_view(t).substr(colon + 1));
    if (key == "labels_list" || rest.empty() || rest.front() != '[') continue;
    j[key] = cluster_one(parse_list(rest));
  }
  return j.dump();
}

}  // namespace

std::string mock_llm_answer(const std::string& system_prompt, const std::string& user_payload) {
  if (contains(system_prompt, "You are a selector of visual assets")) return answer_selection(system_prompt, user_payload);
  if (contains(system_prompt, "You are an assistant for visual assets preparation"))
    return answer_keywords(system_prompt, user_payload);
  if (contains(system_prompt, "You are a classifier of visual assets")) return answer_classification(user_payload);
  if (contains(system_prompt, "You are a cluster of visual assets")) return answer_clustering(user_payload);
  return "I am not sure what you are asking for.";
}

}  // namespace collage
