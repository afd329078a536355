#include "collage/curate.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include "collage/errors.hpp"
#include "collage/hierarchy.hpp"
#include "collage/knowledge.hpp"
#include "collage/prompts.hpp"
#include "collage/util.hpp"

namespace collage {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

namespace {

// A reply that parsed as JSON but does not fit the stage's output format.
struct SchemaViolation {
  std::string message;
};

struct StageReply {
  bool ok = false;
  std::string raw_text;
  std::string error;
};

// Calls the model until `accept` takes the reply or the re-ask budget runs
// out. `accept` throws SchemaViolation to trigger a repair re-ask.
template <class Accept>
StageReply run_stage(prompts::Stage stage, const std::string& base_prompt, const std::string& payload,
                     Backend& backend, int max_retries, StageLog& log, Accept&& accept) {
  const std::string name = prompts::stage_name(stage);
  std::string prompt = base_prompt;
  StageReply reply;
  for (int attempt = 0; attempt <= std::max(0, max_retries); ++attempt) {
    LlmStructuredResult res;
    try {
      res = backend.llm_complete(prompt, payload);
    } catch (const CurationError&) {
      throw;
    } catch (const std::exception& ex) {
      ++log.llm_calls[name];
      throw CurationError(name, std::string("backend: ") + ex.what());
    }
    ++log.llm_calls[name];
    reply.raw_text = res.raw_text;
    if (!res.parsed_json) {
      reply.error = "the reply is not valid JSON";
    } else {
      try {
        accept(*res.parsed_json);
        reply.ok = true;
        reply.error.clear();
        return reply;
      } catch (const SchemaViolation& v) {
        reply.error = v.message;
      }
    }
    prompt = prompts::repair_prompt(base_prompt, reply.error);
  }
  return reply;
}

std::vector<std::string> string_array(const OJson& j, const std::string& field) {
  if (!j.is_array()) throw SchemaViolation{"\"" + field + "\" must be a list of strings"};
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw SchemaViolation{"\"" + field + "\" must contain only strings"};
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string normalize_label(const std::string& s) { return to_lower(trim(s)); }

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

std::string prompt_key(CategoryRole role) {
  switch (role) {
    case CategoryRole::characters: return "Character";
    case CategoryRole::backgrounds: return "Background";
    case CategoryRole::accessories: return "Accessories";
  }
  return "Accessories";
}

std::optional<CategoryRole> role_from_key(const std::string& key, const CategoryVocabulary& vocab) {
  const std::string k = normalize_label(key);
  if (k == "character" || k == "characters") return CategoryRole::characters;
  if (k == "background" || k == "backgrounds") return CategoryRole::backgrounds;
  if (k == "accessory" || k == "accessories") return CategoryRole::accessories;
  for (CategoryRole r : {CategoryRole::characters, CategoryRole::backgrounds, CategoryRole::accessories})
    if (normalize_label(vocab.name(r)) == k) return r;
  return std::nullopt;
}

LabelSelection select_labels(const std::string& story, const std::vector<std::string>& available_labels,
                             SelectionMode mode, Backend& backend, int max_retries, StageLog& log) {
  if (available_labels.empty()) throw PreconditionError("select_labels: no labels available");
  if (trim(story).empty()) throw PreconditionError("select_labels: story is empty");
  const bool full = mode == SelectionMode::full;
  const auto stage = full ? prompts::Stage::select_full : prompts::Stage::select_keyword;
  const std::string base = prompts::system_prompt(stage, available_labels);

  std::vector<std::string> central_raw, related_raw;
  const StageReply reply = run_stage(stage, base, story, backend, max_retries, log, [&](const OJson& j) {
    if (full) {
      if (!j.is_object() || !j.contains("direct_labels") || !j.contains("related_labels"))
        throw SchemaViolation{"expected an object with \"direct_labels\" and \"related_labels\""};
      central_raw = string_array(j["direct_labels"], "direct_labels");
      related_raw = string_array(j["related_labels"], "related_labels");
    } else if (j.is_array()) {
      central_raw = string_array(j, "labels");
    } else {
      if (!j.is_object() || !j.contains("labels")) throw SchemaViolation{"expected an object with \"labels\""};
      central_raw = string_array(j["labels"], "labels");
    }
  });
  if (!reply.ok) throw CurationError("selection", reply.error, reply.raw_text);

  const std::set<std::string> avail(available_labels.begin(), available_labels.end());
  LabelSelection sel;
  std::vector<std::string> dropped;
  for (const auto& raw : central_raw) {
    const std::string l = normalize_label(raw);
    if (avail.contains(l)) push_unique(sel.central, l);
    else push_unique(dropped, l);
  }
  for (const auto& raw : related_raw) {
    const std::string l = normalize_label(raw);
    if (!avail.contains(l)) push_unique(dropped, l);
    else if (std::find(sel.central.begin(), sel.central.end(), l) == sel.central.end()) push_unique(sel.related, l);
  }
  if (!dropped.empty()) log.warn("selection: dropped labels not in the library: " + join(dropped, ", "));
  return sel;
}

CategoryRole fallback_role(const std::string& label, const std::map<std::string, LabelCategory>& label_categories) {
  auto it = label_categories.find(label);
  if (it != label_categories.end() && it->second == LabelCategory::scene) return CategoryRole::backgrounds;
  if (knowledge::is_living_being(label)) return CategoryRole::characters;
  return CategoryRole::accessories;
}

std::map<std::string, CategoryRole> classify_roles(const LabelSelection& selection, Backend& backend,
                                                   const std::map<std::string, LabelCategory>& label_categories,
                                                   int max_retries, StageLog& log) {
  std::map<std::string, CategoryRole> roles;
  if (selection.empty()) return roles;
  const CategoryVocabulary canonical;
  const std::string base = prompts::system_prompt(prompts::Stage::classify);
  const std::string payload = "labels_list: \n    - Direct labels: " + join(selection.central, ", ") +
                              "\n    - Related labels: " + join(selection.related, ", ");

  std::vector<std::pair<CategoryRole, std::vector<std::string>>> answer;
  std::vector<std::string> unknown_keys;
  const StageReply reply =
      run_stage(prompts::Stage::classify, base, payload, backend, max_retries, log, [&](const OJson& j) {
        answer.clear();
        unknown_keys.clear();
        if (!j.is_object()) throw SchemaViolation{"expected an object keyed by category"};
        for (const auto& [key, value] : j.items()) {
          auto role = role_from_key(key, canonical);
          if (!role) {
            unknown_keys.push_back(key);
            continue;
          }
          answer.emplace_back(*role, string_array(value, key));
        }
        if (answer.empty()) throw SchemaViolation{"no known category key (Character, Accessories, Background)"};
      });
  if (!reply.ok) throw CurationError("classification", reply.error, reply.raw_text);
  if (!unknown_keys.empty()) log.warn("classification: ignored unknown categories: " + join(unknown_keys, ", "));

  const auto selected = selection.all();
  const std::set<std::string> sel(selected.begin(), selected.end());
  std::vector<std::string> invented;
  for (const auto& [role, labels] : answer) {
    for (const auto& raw : labels) {
      const std::string l = normalize_label(raw);
      if (!sel.contains(l)) {
        push_unique(invented, l);
        continue;
      }
      auto [it, inserted] = roles.emplace(l, role);
      if (!inserted && it->second != role)
        log.warn("classification: '" + l + "' listed under several categories; kept " + prompt_key(it->second));
    }
  }
  if (!invented.empty()) log.warn("classification: dropped labels outside the selection: " + join(invented, ", "));
  for (const auto& l : selected) {
    if (roles.contains(l)) continue;
    roles[l] = fallback_role(l, label_categories);
    log.warn("classification: '" + l + "' omitted by the model; assigned " + prompt_key(roles[l]) + " by fallback");
  }
  return roles;
}

namespace {

void check_node(const OJson& node, const std::string& where) {
  if (node.is_array()) {
    for (const auto& item : node) {
      if (item.is_string()) continue;
      if (item.is_object()) {
        check_node(item, where);
        continue;
      }
      throw SchemaViolation{"\"" + where + "\" lists a value that is neither a label nor a subcategory"};
    }
  } else if (node.is_object()) {
    for (const auto& [key, value] : node.items()) check_node(value, where + "/" + key);
  } else {
    throw SchemaViolation{"\"" + where + "\" must be a list of labels or an object of subcategories"};
  }
}

struct TreeBuilder {
  std::set<std::string> allowed;
  std::set<std::string> seen;
  std::vector<std::string> unknown;
  std::vector<std::string> duplicates;
  int max_depth = 3;

  void add_label(Cluster& c, const std::string& raw) {
    const std::string l = normalize_label(raw);
    if (!allowed.contains(l)) {
      push_unique(unknown, l);
    } else if (!seen.insert(l).second) {
      push_unique(duplicates, l);
    } else {
      c.leaves.push_back(l);
    }
  }

  // Everything below a depth-capped cluster lands in its own leaves.
  void flatten_into(Cluster& c, const OJson& node) {
    if (node.is_string()) {
      add_label(c, node.get<std::string>());
    } else {
      for (const auto& [key, value] : node.items()) flatten_into(c, value);
    }
  }

  void fill(Cluster& c, const OJson& node, int depth) {
    if (depth >= max_depth) {
      flatten_into(c, node);
      return;
    }
    if (node.is_array()) {
      for (const auto& item : node) {
        if (item.is_string()) add_label(c, item.get<std::string>());
        else fill(c, item, depth);
      }
      return;
    }
    for (const auto& [key, value] : node.items()) {
      Cluster child;
      child.name = trim(key);
      if (child.name.empty()) child.name = "unnamed";
      fill(child, value, depth + 1);
      c.children.push_back(std::move(child));
    }
  }
};

void merge_into(Cluster& dst, Cluster&& src) {
  for (auto& l : src.leaves) dst.leaves.push_back(std::move(l));
  for (auto& ch : src.children) dst.children.push_back(std::move(ch));
}

// Merges same-named siblings, lifts clusters that only restate their single
// label, and removes empty clusters.
void tidy(Cluster& c) {
  std::vector<Cluster> merged;
  for (auto& ch : c.children) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const Cluster& m) { return m.name == ch.name; });
    if (it == merged.end()) merged.push_back(std::move(ch));
    else merge_into(*it, std::move(ch));
  }
  c.children.clear();
  for (auto& ch : merged) {
    tidy(ch);
    if (ch.leaves.empty() && ch.children.empty()) continue;
    if (ch.children.empty() && ch.leaves.size() == 1 && ch.leaves.front() == normalize_label(ch.name)) {
      c.leaves.push_back(ch.leaves.front());
      continue;
    }
    c.children.push_back(std::move(ch));
  }
}

}  // namespace

Cluster repair_label_tree(const std::string& root_name, const OJson* node, const std::vector<std::string>& labels,
                          int max_depth, StageLog& log) {
  Cluster root;
  root.name = root_name;
  if (!node) {
    root.leaves = labels;
    return root;
  }
  TreeBuilder b;
  b.allowed = {labels.begin(), labels.end()};
  b.max_depth = std::max(0, max_depth);
  b.fill(root, *node, 0);
  tidy(root);
  if (!b.unknown.empty())
    log.warn("clustering: " + root_name + ": dropped labels outside the category: " + join(b.unknown, ", "));
  if (!b.duplicates.empty())
    log.warn("clustering: " + root_name + ": labels listed more than once kept once: " + join(b.duplicates, ", "));

  std::vector<std::string> missing;
  for (const auto& l : labels)
    if (!b.seen.contains(l)) missing.push_back(l);
  if (!missing.empty()) {
    log.warn("clustering: " + root_name + ": omitted labels placed under \"other\": " + join(missing, ", "));
    auto it = std::find_if(root.children.begin(), root.children.end(), [](const Cluster& c) { return c.name == "other"; });
    if (it == root.children.end()) {
      root.children.push_back({"other", {}, {}});
      it = std::prev(root.children.end());
    }
    for (const auto& l : missing) it->leaves.push_back(l);
  }
  return root;
}

namespace {

std::string cluster_payload(const std::vector<std::pair<CategoryRole, std::vector<std::string>>>& groups) {
  std::string payload = "labels_list: ";
  for (const auto& [role, labels] : groups)
    payload += "\n    - " + prompt_key(role) + ": " + prompts::format_label_list(labels);
  return payload;
}

// One clustering call over `groups`; returns each role's node, or nothing
// when the stage failed after its retries.
std::optional<std::map<CategoryRole, OJson>> request_clusters(
    const std::vector<std::pair<CategoryRole, std::vector<std::string>>>& groups, Backend& backend,
    const CurateConfig& config, StageLog& log) {
  const CategoryVocabulary canonical;
  std::map<CategoryRole, OJson> nodes;
  std::vector<std::string> unknown_keys;
  const StageReply reply = run_stage(
      prompts::Stage::cluster, prompts::system_prompt(prompts::Stage::cluster), cluster_payload(groups), backend,
      config.max_retries, log, [&](const OJson& j) {
        nodes.clear();
        unknown_keys.clear();
        if (!j.is_object()) throw SchemaViolation{"expected an object keyed by category"};
        for (const auto& [key, value] : j.items()) {
          auto role = role_from_key(key, canonical);
          if (!role) {
            unknown_keys.push_back(key);
            continue;
          }
          check_node(value, key);
          nodes.emplace(*role, value);
        }
        if (nodes.empty()) throw SchemaViolation{"no known category key (Character, Accessories, Background)"};
      });
  if (!reply.ok) {
    log.warn("clustering: unusable reply after retries (" + reply.error + "); categories left flat");
    return std::nullopt;
  }
  if (!unknown_keys.empty()) log.warn("clustering: ignored unknown categories: " + join(unknown_keys, ", "));
  return nodes;
}

}  // namespace

Cluster cluster_labels(CategoryRole role, const std::vector<std::string>& labels, Backend& backend,
                       const CurateConfig& config, StageLog& log) {
  const std::string& root = config.vocabulary.name(role);
  if (labels.empty()) return {root, {}, {}};
  auto nodes = request_clusters({{role, labels}}, backend, config, log);
  if (!nodes) return repair_label_tree(root, nullptr, labels, config.max_depth, log);
  auto it = nodes->find(role);
  if (it == nodes->end()) {
    log.warn("clustering: " + root + " missing from the reply; left flat");
    return repair_label_tree(root, nullptr, labels, config.max_depth, log);
  }
  return repair_label_tree(root, &it->second, labels, config.max_depth, log);
}

std::vector<Cluster> cluster_all(const std::map<std::string, CategoryRole>& roles,
                                 const std::vector<std::string>& label_order, Backend& backend,
                                 const CurateConfig& config, StageLog& log) {
  // Prompt order follows the worked example: Character, Accessories, Background.
  std::vector<std::pair<CategoryRole, std::vector<std::string>>> groups;
  for (CategoryRole r : {CategoryRole::characters, CategoryRole::accessories, CategoryRole::backgrounds}) {
    std::vector<std::string> labels;
    for (const auto& l : label_order) {
      auto it = roles.find(l);
      if (it != roles.end() && it->second == r) labels.push_back(l);
    }
    if (!labels.empty()) groups.emplace_back(r, std::move(labels));
  }

  std::optional<std::map<CategoryRole, OJson>> nodes;
  if (!groups.empty()) nodes = request_clusters(groups, backend, config, log);

  std::vector<Cluster> out;
  for (CategoryRole r : {CategoryRole::characters, CategoryRole::backgrounds, CategoryRole::accessories}) {
    const std::string& root = config.vocabulary.name(r);
    auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& p) { return p.first == r; });
    if (g == groups.end()) {
      out.push_back({root, {}, {}});
      continue;
    }
    const OJson* node = nullptr;
    if (nodes) {
      auto it = nodes->find(r);
      if (it != nodes->end()) node = &it->second;
      else log.warn("clustering: " + root + " missing from the reply; left flat");
    }
    out.push_back(repair_label_tree(root, node, g->second, config.max_depth, log));
  }
  return out;
}

namespace {

Cluster expand_cluster(const Cluster& c, const ElementLibrary& library, std::set<ElementId>& used) {
  Cluster out;
  out.name = c.name;
  out.leaves = {};
  for (const auto& label : c.leaves) {
    Cluster lc;
    lc.name = label;
    auto it = library.label_index.find(label);
    if (it != library.label_index.end())
      for (const auto& id : it->second)
        if (used.insert(id).second) lc.leaves.push_back(id);
    auto same = std::find_if(out.children.begin(), out.children.end(), [&](const Cluster& x) { return x.name == label; });
    if (same == out.children.end()) out.children.push_back(std::move(lc));
    else merge_into(*same, std::move(lc));
  }
  for (const auto& ch : c.children) {
    Cluster sub = expand_cluster(ch, library, used);
    auto same = std::find_if(out.children.begin(), out.children.end(), [&](const Cluster& x) { return x.name == sub.name; });
    if (same == out.children.end()) out.children.push_back(std::move(sub));
    else merge_into(*same, std::move(sub));
  }
  return out;
}

}  // namespace

AssetHierarchy expand_to_elements(const std::vector<Cluster>& label_tree, const ElementLibrary& library) {
  AssetHierarchy h;
  std::set<ElementId> used;
  for (const auto& root : label_tree) h.categories.push_back(expand_cluster(root, library, used));
  return h;
}

CharacterParseOutcome parse_characters(const AssetHierarchy& hierarchy, const CategoryVocabulary& vocab,
                                       const ElementLibrary& library, const fs::path& library_dir, Backend& backend,
                                       const fs::path& rig_root, unsigned workers) {
  CharacterParseOutcome out;
  const Cluster* root = hierarchy.category(vocab.characters);
  if (!root) throw PreconditionError("parse_characters: hierarchy has no '" + vocab.characters + "' category");
  const std::vector<std::string> ids = leaves_in_order(*root);
  if (ids.empty()) return out;

  const fs::path rig_dir = rig_root / "rigs";
  std::error_code ec;
  fs::create_directories(rig_dir, ec);

  std::vector<std::optional<CharacterRig>> rigs(ids.size());
  std::vector<std::string> notes(ids.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < ids.size(); i = next.fetch_add(1)) {
      auto it = library.elements.find(ids[i]);
      if (it == library.elements.end()) continue;
      try {
        CharacterRig rig = backend.parse_character(library_dir / it->second.cutout_path, rig_dir).rig;
        for (auto& part : rig.parts) {
          const fs::path p(part.mask_path);
          const fs::path rel = p.lexically_relative(rig_root);
          part.mask_path = (rel.empty() || *rel.begin() == "..") ? p.string() : rel.generic_string();
        }
        rigs[i] = std::move(rig);
      } catch (const NoCharacterDetected&) {
        notes[i] = "character parsing: no character detected in " + ids[i];
      } catch (const std::exception& ex) {
        notes[i] = "character parsing: " + ids[i] + " left rigless: " + ex.what();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n = std::min<unsigned>(workers ? workers : hw, static_cast<unsigned>(ids.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (rigs[i]) out.rigs.emplace(ids[i], std::move(*rigs[i]));
    if (!notes[i].empty()) out.warnings.push_back(notes[i]);
  }
  return out;
}

CurationResult curate(const std::string& story, const ElementLibrary& library, const fs::path& library_dir,
                      SelectionMode mode, Backend& backend, const CurateConfig& config, const fs::path& session_dir) {
  if (trim(story).empty()) throw PreconditionError("curate: story is empty");
  if (story.size() > kMaxStoryChars)
    throw PreconditionError("curate: story exceeds " + std::to_string(kMaxStoryChars) + " characters");
  if (config.prompt_attempts < 1) throw PreconditionError("curate: prompt_attempts must be at least 1");

  CurationResult result;
  CurationSession& s = result.session;
  s.library_id = library.library_id;
  s.story = story;
  s.mode = mode;
  s.vocabulary = config.vocabulary;
  s.scoring = config.scoring;
  s.prompt_attempts = config.prompt_attempts;

  StageLog log;
  const auto available = library.labels();
  if (available.empty()) throw PreconditionError("curate: library has no labels");

  s.selection = select_labels(story, available, mode, backend, config.max_retries, log);
  if (s.selection.empty()) {
    s.insufficient_assets = true;
    log.warn("selection: the story matches no label in the library");
  }

  const auto roles = classify_roles(s.selection, backend, library.label_category, config.max_retries, log);
  for (const auto& [label, role] : roles) s.roles[label] = config.vocabulary.name(role);

  s.label_tree = cluster_all(roles, s.selection.all(), backend, config, log);
  s.hierarchy = expand_to_elements(s.label_tree, library);

  for (const auto& label : s.selection.central) {
    auto it = library.label_index.find(label);
    if (it == library.label_index.end() || it->second.empty())
      log.warn("selection: central label '" + label + "' has no element in the library");
  }

  if (config.parse_characters) {
    auto parsed = parse_characters(s.hierarchy, config.vocabulary, library, library_dir, backend, session_dir,
                                   config.workers);
    result.rigs = std::move(parsed.rigs);
    for (auto& w : parsed.warnings) log.warn(std::move(w));
  }

  s.llm_calls = std::move(log.llm_calls);
  s.warnings = std::move(log.warnings);
  return result;
}

}  // namespace collage
