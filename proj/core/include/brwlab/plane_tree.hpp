#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace brwlab {

using VertexId = std::int32_t;
inline constexpr VertexId kNoParent = -1;

/// Lukasiewicz path: steps[k] = (children of u_k) - 1 in depth-first order.
struct LukasiewiczPath {
    std::vector<std::int32_t> steps;

    std::size_t length() const noexcept { return steps.size(); }
    friend bool operator==(const LukasiewiczPath&, const LukasiewiczPath&) = default;
};

/// Rooted ordered tree with vertices numbered in lexicographic (depth-first) order.
///
/// Vertex 0 is the root; children of a vertex appear in increasing index
/// order, so parent[v] < v for every v > 0.
class PlaneTree {
public:
    PlaneTree() = default;

    // Builds from parent links in depth-first order; validates the ordering.
    explicit PlaneTree(std::vector<VertexId> parent);

    static PlaneTree single_vertex() { return PlaneTree(std::vector<VertexId>{kNoParent}); }

    std::size_t size() const noexcept { return parent_.size(); }
    const std::vector<VertexId>& parent() const noexcept { return parent_; }
    const std::vector<std::int32_t>& children_counts() const noexcept { return children_counts_; }
    const std::vector<std::int32_t>& depth() const noexcept { return depth_; }

    // Children of v in left-to-right order.
    std::span<const VertexId> children(VertexId v) const noexcept {
        return {child_list_.data() + child_offset_[v], static_cast<std::size_t>(children_counts_[v])};
    }

    friend bool operator==(const PlaneTree& a, const PlaneTree& b) { return a.parent_ == b.parent_; }

private:
    std::vector<VertexId> parent_;
    std::vector<std::int32_t> children_counts_;
    std::vector<std::int32_t> depth_;
    std::vector<std::int32_t> child_offset_;
    std::vector<VertexId> child_list_;
};

LukasiewiczPath encode(const PlaneTree& tree);

// Throws CodecError unless the path is a single-tree excursion.
PlaneTree decode(const LukasiewiczPath& path);

// True when the partial sums stay >= 0 before the final step reaches -1.
bool is_excursion(std::span<const std::int32_t> steps) noexcept;

/// Height process H_k = #{i < k : L_i = min_{i <= j <= k} L_j} of L_0 = 0,
/// L_{k+1} = L_k + steps[k]; one entry per step. Works on forests too.
std::vector<std::int32_t> height_process(std::span<const std::int32_t> steps);
inline std::vector<std::int32_t> height_process(const LukasiewiczPath& path) { return height_process(path.steps); }

// Depth-first boundary walk: 2(n-1)+1 vertices, starting and ending at the root.
std::vector<VertexId> contour_walk(const PlaneTree& tree);

// Newline-delimited children counts (Lukasiewicz step + 1), one vertex per line.
void write_tree(std::ostream& out, const PlaneTree& tree);
PlaneTree read_tree(std::istream& in);

// All plane trees with n vertices, in lexicographic order of their paths.
std::vector<PlaneTree> enumerate_plane_trees(std::size_t n);

}  // namespace brwlab
