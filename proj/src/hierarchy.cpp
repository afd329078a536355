#include "collage/hierarchy.hpp"

#include "collage/util.hpp"

namespace collage {

std::string path_string(const ClusterPath& path) { return join(path, "/"); }

namespace {

void visit(const Cluster& c, ClusterPath& path, const std::function<void(const Cluster&, const ClusterPath&)>& fn) {
  path.push_back(c.name);
  fn(c, path);
  for (const auto& child : c.children) visit(child, path, fn);
  path.pop_back();
}

}  // namespace

void visit_clusters(const std::vector<Cluster>& roots,
                    const std::function<void(const Cluster&, const ClusterPath&)>& visitor) {
  ClusterPath path;
  for (const auto& r : roots) visit(r, path, visitor);
}

std::vector<std::string> leaves_in_order(const std::vector<Cluster>& roots) {
  std::vector<std::string> out;
  visit_clusters(roots, [&](const Cluster& c, const ClusterPath&) { out.insert(out.end(), c.leaves.begin(), c.leaves.end()); });
  return out;
}

std::vector<std::string> leaves_in_order(const Cluster& root) { return leaves_in_order(std::vector<Cluster>{root}); }

std::map<std::string, ClusterPath> leaf_paths(const std::vector<Cluster>& roots) {
  std::map<std::string, ClusterPath> out;
  visit_clusters(roots, [&](const Cluster& c, const ClusterPath& p) {
    for (const auto& leaf : c.leaves) out.emplace(leaf, p);
  });
  return out;
}

std::size_t common_prefix(const ClusterPath& a, const ClusterPath& b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

}  // namespace collage
