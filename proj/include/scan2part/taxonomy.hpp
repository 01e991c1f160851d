#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scan2part/common.hpp"

namespace s2p {

using NodeId = std::int64_t;
inline constexpr NodeId kUnlabeled = 0;  // reserved: background / no label

struct PartNode {
    NodeId id = 0;
    std::string name;      // path form, e.g. "Chair/chair_base"
    NodeId parent = 0;     // 0 = root (object category)
    std::vector<NodeId> children;
    std::int64_t occurrence = 0;
};

// Rooted forest of part categories. Depth-1 nodes are object categories; there
// is no materialized virtual root. Immutable after construction: every edit
// operation returns a new taxonomy and node ids are never renumbered.
class PartTaxonomy {
public:
    PartTaxonomy() = default;

    static PartTaxonomy from_nodes(std::vector<PartNode> nodes) {
        PartTaxonomy tax;
        for (auto& n : nodes) {
            if (n.id <= 0) throw parse_error("node id must be positive, got " + std::to_string(n.id));
            if (tax.nodes_.count(n.id)) throw parse_error("duplicate node id " + std::to_string(n.id));
            n.children.clear();
            tax.nodes_.emplace(n.id, std::move(n));
        }
        for (auto& [id, n] : tax.nodes_) {
            if (n.parent == 0) continue;
            auto it = tax.nodes_.find(n.parent);
            if (it == tax.nodes_.end())
                throw parse_error("node " + std::to_string(id) + " has dangling parent " +
                                  std::to_string(n.parent));
            it->second.children.push_back(id);
        }
        for (auto& [id, n] : tax.nodes_) std::sort(n.children.begin(), n.children.end());
        tax.check_acyclic();
        tax.compute_depths();
        return tax;
    }

    bool contains(NodeId id) const { return nodes_.count(id) != 0; }
    const PartNode& node(NodeId id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) throw invalid_input("unknown node id " + std::to_string(id));
        return it->second;
    }
    const std::map<NodeId, PartNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    int depth(NodeId id) const {
        auto it = depths_.find(id);
        if (it == depths_.end()) throw invalid_input("unknown node id " + std::to_string(id));
        return it->second;
    }
    int max_depth() const {
        int d = 0;
        for (const auto& [id, dep] : depths_) d = std::max(d, dep);
        return d;
    }

    std::vector<NodeId> roots() const {
        std::vector<NodeId> r;
        for (const auto& [id, n] : nodes_)
            if (n.parent == 0) r.push_back(id);
        return r;
    }
    std::vector<NodeId> leaves() const {
        std::vector<NodeId> r;
        for (const auto& [id, n] : nodes_)
            if (n.children.empty()) r.push_back(id);
        return r;
    }

    bool is_leaf(NodeId id) const { return node(id).children.empty(); }

    // Unique ancestor of `leaf` at depth k; a node shallower than k projects to
    // itself (pruned taxonomies may have leaves above k).
    NodeId project_to_level(NodeId leaf, int k) const {
        if (k < 1) throw invalid_input("level must be >= 1");
        NodeId cur = leaf;
        int d = depth(cur);  // validates the id
        while (d > k) {
            cur = node(cur).parent;
            --d;
        }
        return cur;
    }

    // The class set B_k at level k: image of project_to_level over all leaves.
    std::set<NodeId> level_classes(int k) const {
        std::set<NodeId> out;
        for (NodeId leaf : leaves()) out.insert(project_to_level(leaf, k));
        return out;
    }

    // Removes every node whose occurrence is below the threshold, together with
    // its whole subtree.
    PartTaxonomy prune_by_occurrence(std::int64_t threshold) const {
        std::vector<PartNode> keep;
        for (const auto& [id, n] : nodes_) {
            if (n.occurrence < threshold) continue;
            bool ancestors_kept = true;
            for (NodeId p = n.parent; p != 0; p = node(p).parent) {
                if (node(p).occurrence < threshold) {
                    ancestors_kept = false;
                    break;
                }
            }
            if (ancestors_kept) keep.push_back(n);
        }
        return from_nodes(std::move(keep));
    }

    // Splices out internal (non-root, non-leaf) nodes with exactly one child,
    // keeping the leaf set intact. Idempotent.
    PartTaxonomy collapse_trivial_paths() const {
        std::set<NodeId> removed;
        for (const auto& [id, n] : nodes_)
            if (n.parent != 0 && n.children.size() == 1) removed.insert(id);
        std::vector<PartNode> keep;
        for (const auto& [id, n] : nodes_) {
            if (removed.count(id)) continue;
            PartNode copy = n;
            while (copy.parent != 0 && removed.count(copy.parent))
                copy.parent = node(copy.parent).parent;
            keep.push_back(std::move(copy));
        }
        return from_nodes(std::move(keep));
    }

    // occurrence(node) := number of voxels whose label lies in the node's
    // subtree. Labels may sit at internal nodes; they count toward that node
    // and all its ancestors.
    template <typename LabelRange>
    PartTaxonomy with_occurrences(const LabelRange& labels) const {
        PartTaxonomy out = *this;
        for (auto& [id, n] : out.nodes_) n.occurrence = 0;
        for (NodeId label : labels) {
            if (label == kUnlabeled) continue;
            if (!out.contains(label))
                throw invalid_input("scene label " + std::to_string(label) + " not in taxonomy");
            for (NodeId cur = label; cur != 0; cur = out.nodes_.at(cur).parent)
                out.nodes_.at(cur).occurrence += 1;
        }
        return out;
    }

private:
    void check_acyclic() const {
        for (const auto& [id, n] : nodes_) {
            NodeId slow = id, fast = id;
            while (true) {
                fast = nodes_.at(fast).parent;
                if (fast == 0) break;
                fast = nodes_.at(fast).parent;
                if (fast == 0) break;
                slow = nodes_.at(slow).parent;
                if (slow == fast) throw parse_error("cycle detected at node " + std::to_string(id));
            }
        }
    }

    void compute_depths() {
        depths_.clear();
        for (const auto& [id, n] : nodes_) {
            int d = 1;
            for (NodeId p = n.parent; p != 0; p = nodes_.at(p).parent) ++d;
            depths_[id] = d;
        }
    }

    std::map<NodeId, PartNode> nodes_;
    std::map<NodeId, int> depths_;
};

// Taxonomy JSON: top-level array of {"id", "name", "parent", "occurrence"?}.
inline PartTaxonomy load_taxonomy(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("taxonomy JSON: ") + e.what());
    }
    if (!j.is_array()) throw parse_error("taxonomy JSON: top level must be an array");
    std::vector<PartNode> nodes;
    for (const auto& item : j) {
        PartNode n;
        n.id = item.at("id").get<NodeId>();
        n.name = item.at("name").get<std::string>();
        if (item.contains("parent") && !item["parent"].is_null())
            n.parent = item["parent"].get<NodeId>();
        if (item.contains("occurrence")) n.occurrence = item["occurrence"].get<std::int64_t>();
        nodes.push_back(std::move(n));
    }
    std::set<std::string> names;
    for (const auto& n : nodes)
        if (!names.insert(n.name).second) throw parse_error("duplicate node name '" + n.name + "'");
    return PartTaxonomy::from_nodes(std::move(nodes));
}

inline std::string save_taxonomy(const PartTaxonomy& tax) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [id, n] : tax.nodes()) {
        nlohmann::json item;
        item["id"] = id;
        item["name"] = n.name;
        if (n.parent == 0)
            item["parent"] = nullptr;
        else
            item["parent"] = n.parent;
        item["occurrence"] = n.occurrence;
        arr.push_back(std::move(item));
    }
    return arr.dump(2) + "\n";
}

}  // namespace s2p
