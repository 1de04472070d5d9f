#include "brwlab/plane_tree.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "brwlab/errors.hpp"

namespace brwlab {

PlaneTree::PlaneTree(std::vector<VertexId> parent) : parent_(std::move(parent)) {
    const auto n = static_cast<VertexId>(parent_.size());
    if (n == 0) throw CodecError("a plane tree has at least one vertex");
    if (parent_[0] != kNoParent) throw CodecError("vertex 0 must be the root");
    children_counts_.assign(n, 0);
    depth_.assign(n, 0);
    // Depth-first numbering: the parent of v is on the current root path.
    std::vector<VertexId> path{0};
    for (VertexId v = 1; v < n; ++v) {
        const VertexId p = parent_[v];
        while (!path.empty() && path.back() != p) path.pop_back();
        if (path.empty()) throw CodecError("parent links are not in depth-first order at vertex " + std::to_string(v));
        ++children_counts_[p];
        depth_[v] = depth_[p] + 1;
        path.push_back(v);
    }
    child_offset_.assign(n + 1, 0);
    for (VertexId v = 0; v < n; ++v) child_offset_[v + 1] = child_offset_[v] + children_counts_[v];
    child_list_.assign(n > 0 ? n - 1 : 0, 0);
    std::vector<std::int32_t> fill(child_offset_.begin(), child_offset_.end() - 1);
    for (VertexId v = 1; v < n; ++v) child_list_[fill[parent_[v]]++] = v;
}

LukasiewiczPath encode(const PlaneTree& tree) {
    LukasiewiczPath path;
    path.steps.reserve(tree.size());
    for (std::int32_t c : tree.children_counts()) path.steps.push_back(c - 1);
    return path;
}

bool is_excursion(std::span<const std::int32_t> steps) noexcept {
    if (steps.empty()) return false;
    std::int64_t level = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        if (steps[k] < -1) return false;
        level += steps[k];
        if (level < 0 && k + 1 < steps.size()) return false;
    }
    return level == -1;
}

PlaneTree decode(const LukasiewiczPath& path) {
    const auto& steps = path.steps;
    if (steps.empty()) throw CodecError("empty Lukasiewicz path");
    std::vector<VertexId> parent(steps.size(), kNoParent);
    // Stack of (vertex, children still to attach).
    std::vector<std::pair<VertexId, std::int32_t>> open;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        if (steps[k] < -1) throw CodecError("step below -1 at index " + std::to_string(k));
        const auto v = static_cast<VertexId>(k);
        if (k > 0) {
            if (open.empty()) throw CodecError("premature end of excursion before index " + std::to_string(k));
            auto& top = open.back();
            parent[v] = top.first;
            if (--top.second == 0) open.pop_back();
        }
        if (steps[k] + 1 > 0) open.emplace_back(v, steps[k] + 1);
    }
    if (!open.empty()) throw CodecError("Lukasiewicz path does not close: final partial sum is not -1");
    return PlaneTree(std::move(parent));
}

std::vector<std::int32_t> height_process(std::span<const std::int32_t> steps) {
    std::vector<std::int32_t> heights(steps.size());
    // Indices i whose L_i is a running minimum of L_i..L_k; their count is H_k.
    std::vector<std::int64_t> minima;
    std::int64_t level = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        while (!minima.empty() && minima.back() > level) minima.pop_back();
        heights[k] = static_cast<std::int32_t>(minima.size());
        minima.push_back(level);
        level += steps[k];
    }
    return heights;
}

std::vector<VertexId> contour_walk(const PlaneTree& tree) {
    std::vector<VertexId> walk;
    walk.reserve(2 * tree.size() - 1);
    walk.push_back(0);
    // Iterative DFS: (vertex, next child position).
    std::vector<std::pair<VertexId, std::int32_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto& [v, next] = stack.back();
        const auto kids = tree.children(v);
        if (next < static_cast<std::int32_t>(kids.size())) {
            const VertexId c = kids[next++];
            walk.push_back(c);
            stack.emplace_back(c, 0);
        } else {
            stack.pop_back();
            if (!stack.empty()) walk.push_back(stack.back().first);
        }
    }
    return walk;
}

void write_tree(std::ostream& out, const PlaneTree& tree) {
    for (std::int32_t c : tree.children_counts()) out << c << '\n';
}

PlaneTree read_tree(std::istream& in) {
    LukasiewiczPath path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t used = 0;
        long value = 0;
        try {
            value = std::stol(line, &used);
        } catch (const std::exception&) {
            throw CodecError("tree file line " + std::to_string(lineno) + ": expected a children count");
        }
        if (used != line.size() || value < 0) {
            throw CodecError("tree file line " + std::to_string(lineno) + ": expected a non-negative integer");
        }
        path.steps.push_back(static_cast<std::int32_t>(value - 1));
    }
    return decode(path);
}

std::vector<PlaneTree> enumerate_plane_trees(std::size_t n) {
    std::vector<PlaneTree> out;
    if (n == 0) return out;
    std::vector<std::int32_t> steps(n);
    // Depth-first over step choices keeping partial sums >= 0 until the last step.
    auto rec = [&](auto&& self, std::size_t k, std::int64_t level) -> void {
        if (k == n - 1) {
            if (level == 0) {
                steps[k] = -1;
                out.push_back(decode(LukasiewiczPath{steps}));
            }
            return;
        }
        const auto remaining = static_cast<std::int64_t>(n - 1 - k);
        for (std::int64_t s = level > 0 ? -1 : 0; level + s <= remaining - 1; ++s) {
            steps[k] = static_cast<std::int32_t>(s);
            self(self, k + 1, level + s);
        }
    };
    rec(rec, 0, 0);
    return out;
}

}  // namespace brwlab
