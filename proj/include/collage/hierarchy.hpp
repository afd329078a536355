#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "collage/model.hpp"

namespace collage {

// Cluster path components from the category root down to the cluster that
// directly holds the leaf, e.g. {"accessories", "plant", "flower"}.
using ClusterPath = std::vector<std::string>;

std::string path_string(const ClusterPath& path);

// Pre-order walk. The visitor sees each cluster with its full path.
void visit_clusters(const std::vector<Cluster>& roots,
                    const std::function<void(const Cluster&, const ClusterPath&)>& visitor);

// Leaves in DFS order (a cluster's own leaves before its children's).
std::vector<std::string> leaves_in_order(const std::vector<Cluster>& roots);
std::vector<std::string> leaves_in_order(const Cluster& root);

std::map<std::string, ClusterPath> leaf_paths(const std::vector<Cluster>& roots);

// Length of the shared leading run of two paths.
std::size_t common_prefix(const ClusterPath& a, const ClusterPath& b);

}  // namespace collage
