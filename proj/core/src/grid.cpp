#include "twoscale/grid.hpp"

#include <array>
#include <numeric>
#include <string>

#include "twoscale/errors.hpp"

namespace twoscale {

MacroGrid::MacroGrid(int nodes, double length) : nodes_(nodes), length_(length) {
    if (nodes < 3) {
        throw ConfigError("macro grid needs n_x >= 3, got " + std::to_string(nodes));
    }
    if (!(length > 0.0)) {
        throw ConfigError("macro grid needs L_x > 0");
    }
    spacing_ = length / (nodes - 1);
    weights_.assign(nodes, spacing_);
    weights_.front() = weights_.back() = 0.5 * spacing_;
}

Edge parse_edge(std::string_view name) {
    if (name == "left") return Edge::left;
    if (name == "right") return Edge::right;
    if (name == "bottom") return Edge::bottom;
    if (name == "top") return Edge::top;
    throw ConfigError("robin_side must be one of left/right/bottom/top, got '" +
                      std::string(name) + "'");
}

std::string_view to_string(Edge edge) {
    switch (edge) {
        case Edge::left: return "left";
        case Edge::right: return "right";
        case Edge::bottom: return "bottom";
        case Edge::top: return "top";
    }
    return "left";
}

namespace {

// Node index of position s (0..n-1) along an edge, walking in increasing
// coordinate direction.
int edge_node(Edge edge, int s, int n) {
    switch (edge) {
        case Edge::left: return s * n;
        case Edge::right: return s * n + (n - 1);
        case Edge::bottom: return s;
        case Edge::top: return (n - 1) * n + s;
    }
    return 0;
}

}  // namespace

MicroGrid::MicroGrid(int points_per_side, Edge robin_edge)
    : n_(points_per_side), robin_edge_(robin_edge) {
    if (points_per_side < 3) {
        throw ConfigError("micro grid needs n_y >= 3, got " + std::to_string(points_per_side));
    }
    const int n = n_;
    spacing_ = 1.0 / (n - 1);
    const double h = spacing_;

    tags_.assign(size(), BoundaryTag::interior);
    robin_slot_.assign(size(), -1);

    for (int s = 0; s < n; ++s) {
        const int node = edge_node(robin_edge, s, n);
        tags_[node] = BoundaryTag::robin;
        robin_slot_[node] = static_cast<int>(robin_nodes_.size());
        robin_nodes_.push_back(node);
        robin_weights_.push_back((s == 0 || s == n - 1) ? 0.5 * h : h);
    }

    // Closure of the Neumann edges: a node shared by two Neumann edges is
    // listed once (first edge id wins) and collects both half weights.
    std::vector<int> neumann_pos(size(), -1);
    constexpr std::array<Edge, 4> order{Edge::left, Edge::right, Edge::bottom, Edge::top};
    for (Edge e : order) {
        if (e == robin_edge) continue;
        for (int s = 0; s < n; ++s) {
            const int node = edge_node(e, s, n);
            const double w = (s == 0 || s == n - 1) ? 0.5 * h : h;
            if (tags_[node] == BoundaryTag::interior) tags_[node] = BoundaryTag::neumann;
            if (neumann_pos[node] >= 0) {
                neumann_weights_[neumann_pos[node]] += w;
            } else {
                neumann_pos[node] = static_cast<int>(neumann_nodes_.size());
                neumann_nodes_.push_back(node);
                neumann_weights_.push_back(w);
            }
        }
    }

    cell_weights_.resize(size());
    for (int j = 0; j < n; ++j) {
        const double wj = (j == 0 || j == n - 1) ? 0.5 * h : h;
        for (int i = 0; i < n; ++i) {
            const double wi = (i == 0 || i == n - 1) ? 0.5 * h : h;
            cell_weights_[index(i, j)] = wi * wj;
        }
    }

    for (int j = 0; j < n; ++j) {
        const double row = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        for (int i = 0; i + 1 < n; ++i) links_.push_back({index(i, j), index(i + 1, j), row});
    }
    for (int i = 0; i < n; ++i) {
        const double col = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        for (int j = 0; j + 1 < n; ++j) links_.push_back({index(i, j), index(i, j + 1), col});
    }
}

std::span<const int> MicroGrid::nodes(BoundaryPart part) const noexcept {
    return part == BoundaryPart::gamma_r ? std::span<const int>(robin_nodes_)
                                         : std::span<const int>(neumann_nodes_);
}

std::span<const double> MicroGrid::weights(BoundaryPart part) const noexcept {
    return part == BoundaryPart::gamma_r ? std::span<const double>(robin_weights_)
                                         : std::span<const double>(neumann_weights_);
}

double MicroGrid::measure(BoundaryPart part) const noexcept {
    const auto w = weights(part);
    return std::accumulate(w.begin(), w.end(), 0.0);
}

MicroGrid build_micro_grid(int points_per_side, Edge robin_side) {
    return MicroGrid(points_per_side, robin_side);
}

}  // namespace twoscale
