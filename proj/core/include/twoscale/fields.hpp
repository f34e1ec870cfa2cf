#pragma once

#include <Eigen/Core>

#include "twoscale/grid.hpp"

namespace twoscale {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Values at macro nodes (pressure-like fields vanish at the Dirichlet ends).
using MacroField = Vector;
/// Values at all micro nodes of one cell.
using MicroField = Vector;
/// Boundary values of a two-scale field: row = macro node, column = boundary
/// node in MicroGrid::nodes(part) order.
using TraceArray = Matrix;

/// One micro field per macro node, stored column-wise.
class TwoScaleField {
public:
    TwoScaleField() = default;
    TwoScaleField(int macro_nodes, int micro_nodes, double value = 0.0)
        : data_(Matrix::Constant(micro_nodes, macro_nodes, value)) {}
    explicit TwoScaleField(Matrix data) : data_(std::move(data)) {}

    static TwoScaleField zeros(const Geometry& g) { return {g.macro.size(), g.micro.size()}; }

    int macro_size() const noexcept { return static_cast<int>(data_.cols()); }
    int micro_size() const noexcept { return static_cast<int>(data_.rows()); }

    auto micro(int x) { return data_.col(x); }
    auto micro(int x) const { return data_.col(x); }

    Matrix& matrix() noexcept { return data_; }
    const Matrix& matrix() const noexcept { return data_; }

    bool matches(const Geometry& g) const noexcept {
        return macro_size() == g.macro.size() && micro_size() == g.micro.size();
    }

    TwoScaleField& operator+=(const TwoScaleField& o) { data_ += o.data_; return *this; }
    TwoScaleField& operator-=(const TwoScaleField& o) { data_ -= o.data_; return *this; }
    TwoScaleField& operator*=(double s) { data_ *= s; return *this; }

    friend TwoScaleField operator+(TwoScaleField a, const TwoScaleField& b) { return a += b; }
    friend TwoScaleField operator-(TwoScaleField a, const TwoScaleField& b) { return a -= b; }
    friend TwoScaleField operator*(double s, TwoScaleField a) { return a *= s; }
    friend bool operator==(const TwoScaleField& a, const TwoScaleField& b) {
        return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
               a.data_ == b.data_;
    }

private:
    Matrix data_;
};

}  // namespace twoscale
