#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace twoscale {

/// Uniform node-based grid on the macro interval (0, L).  The two end nodes
/// carry the homogeneous Dirichlet condition.
class MacroGrid {
public:
    explicit MacroGrid(int nodes = 3, double length = 1.0);

    int size() const noexcept { return nodes_; }
    double length() const noexcept { return length_; }
    double spacing() const noexcept { return spacing_; }
    double coordinate(int i) const noexcept { return i * spacing_; }
    bool is_dirichlet(int i) const noexcept { return i == 0 || i == nodes_ - 1; }

    /// Trapezoid weights, summing to the interval length.
    std::span<const double> weights() const noexcept { return weights_; }

private:
    int nodes_;
    double length_;
    double spacing_;
    std::vector<double> weights_;
};

enum class Edge { left = 0, right = 1, bottom = 2, top = 3 };

Edge parse_edge(std::string_view name);
std::string_view to_string(Edge edge);

enum class BoundaryTag { interior, robin, neumann };

/// Measurement/flux parts of the cell boundary.  GAMMA_N is the closure of
/// the three Neumann edges, so the two Robin corner nodes appear in both
/// node lists; their weights come from the adjacent edge in each list.
enum class BoundaryPart { gamma_r, gamma_n };

/// Node-based grid on the unit square Y.  Node (i, j) sits at (i*h, j*h) and
/// has flat index j*n + i.  One full edge is the Robin part, the remaining
/// three edges are homogeneous Neumann.
class MicroGrid {
public:
    MicroGrid() = default;
    MicroGrid(int points_per_side, Edge robin_edge);

    int points_per_side() const noexcept { return n_; }
    int size() const noexcept { return n_ * n_; }
    double spacing() const noexcept { return spacing_; }
    Edge robin_edge() const noexcept { return robin_edge_; }

    int index(int i, int j) const noexcept { return j * n_ + i; }
    double y1(int node) const noexcept { return (node % n_) * spacing_; }
    double y2(int node) const noexcept { return (node / n_) * spacing_; }

    BoundaryTag tag(int node) const noexcept { return tags_[node]; }

    /// Boundary nodes of a part, ordered by (edge id, position along edge).
    std::span<const int> nodes(BoundaryPart part) const noexcept;
    /// 1D trapezoid weights matching nodes(part).
    std::span<const double> weights(BoundaryPart part) const noexcept;
    double measure(BoundaryPart part) const noexcept;

    /// Position of a node inside nodes(gamma_r), or -1.
    int robin_slot(int node) const noexcept { return robin_slot_[node]; }

    /// Trapezoid area weights (lumped control-volume areas), summing to 1.
    std::span<const double> cell_weights() const noexcept { return cell_weights_; }

    /// Grid edges between neighbouring nodes with their finite-volume face
    /// factor (1 for interior edges, 1/2 along the boundary).
    struct Link {
        int a;
        int b;
        double factor;
    };
    std::span<const Link> links() const noexcept { return links_; }

private:
    int n_ = 0;
    double spacing_ = 0.0;
    Edge robin_edge_ = Edge::left;
    std::vector<BoundaryTag> tags_;
    std::vector<int> robin_nodes_;
    std::vector<double> robin_weights_;
    std::vector<int> neumann_nodes_;
    std::vector<double> neumann_weights_;
    std::vector<int> robin_slot_;
    std::vector<double> cell_weights_;
    std::vector<Link> links_;
};

MicroGrid build_micro_grid(int points_per_side, Edge robin_side);

/// Both scales together; every two-scale routine takes one of these.
struct Geometry {
    MacroGrid macro;
    MicroGrid micro;
};

}  // namespace twoscale
