#pragma once

/// @file grid.hpp
/// Box grids, grid functions and the monotone finite-difference operator
/// u -> eps^2 u - tr(A D^2 u) with Dirichlet data on the outermost layer.

#include "homlab/common.hpp"
#include "homlab/env.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace homlab {

/// Uniform lattice center + h*k on the cube of half-width `radius`.
class Grid {
public:
    Grid() = default;
    Grid(Point center, double radius, double h);

    int dim() const { return static_cast<int>(center_.size()); }
    const Point& center() const { return center_; }
    double radius() const { return radius_; }
    double h() const { return h_; }
    /// radius / h
    std::int64_t half() const { return half_; }
    /// Points per axis, 2 * half + 1.
    std::int64_t n_axis() const { return 2 * half_ + 1; }
    std::int64_t size() const { return size_; }
    std::int64_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

    /// Integer coordinates k in [0, n_axis) of a linear index (first axis slowest).
    void coords(std::int64_t idx, std::int64_t* k) const;
    std::int64_t index(const std::int64_t* k) const;
    Point point(std::int64_t idx) const;
    bool on_boundary(std::int64_t idx) const;
    /// Index of the grid point nearest to x; throws when x lies outside the box.
    std::int64_t nearest(const Point& x) const;
    std::int64_t center_index() const;

    friend bool operator==(const Grid& a, const Grid& b);

private:
    Point center_;
    double radius_ = 0.0;
    double h_ = 1.0;
    std::int64_t half_ = 0;
    std::int64_t size_ = 0;
    std::array<std::int64_t, kMaxDim> stride_{};
};

/// Grid centered at the origin of dimension d.
Grid origin_grid(int d, double radius, double h);

struct GridFunction {
    Grid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(Grid g, double fill = 0.0);
    GridFunction(Grid g, const std::function<double(const Point&)>& f);

    double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }
    double at(const Point& x) const { return (*this)[grid.nearest(x)]; }
    double at_center() const { return (*this)[grid.center_index()]; }
    double sup_norm() const;
    double interior_sup_norm() const;
};

GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(double c, const GridFunction& a);
/// Sum over interior points of a*b (no h^d factor).
double interior_dot(const GridFunction& a, const GridFunction& b);

void write_binary(const GridFunction& u, std::ostream& os);
GridFunction read_binary(std::istream& is);
/// Plane through the grid center spanned by axes (a0, a1): columns x_a0, x_a1, value.
void write_csv_slice(const GridFunction& u, std::ostream& os, int a0 = 0, int a1 = 1);

// ---------------------------------------------------------------------------

/// Stencil offset in units of h.
struct Offset {
    std::array<std::int8_t, kMaxDim> k{};
};

/// Row-wise stencil of eps^2 u - tr(A D^2 u).  Boundary rows are identity
/// rows; `boundary` holds the Dirichlet data.
struct DiscreteOperator {
    Grid grid;
    double eps = 0.0;
    std::vector<Offset> offsets;           ///< offsets[0] is the center
    std::vector<std::int64_t> deltas;      ///< linear index shift per offset
    std::vector<double> weights;           ///< size() * offsets.size(), row-major
    std::vector<double> boundary;          ///< Dirichlet values (used on Dirichlet rows)
    /// 1 on Dirichlet (identity) rows: the box boundary layer plus any points
    /// excluded by set_dirichlet_outside.
    std::vector<std::uint8_t> dirichlet;
    bool monotone = false;

    std::size_t n_offsets() const { return offsets.size(); }
    const double* row(std::int64_t i) const {
        return weights.data() + static_cast<std::size_t>(i) * offsets.size();
    }
    bool is_dirichlet(std::int64_t i) const { return dirichlet[static_cast<std::size_t>(i)] != 0; }
    void set_boundary(const std::function<double(const Point&)>& g);
    void set_boundary(double c);
    /// Turn every row whose point fails `inside` into a Dirichlet row.
    void set_dirichlet_outside(const std::function<bool(const Point&)>& inside);
};

/// Stencil weights of one row for a constant matrix A, in the operator's
/// offset order.  `offsets` must contain the axis offsets and, unless A is
/// diagonal, both diagonal pairs for every (i, j).
void stencil_row(const SymMatrix& A, double eps, double h, const std::vector<Offset>& offsets,
                 double* w);
std::vector<Offset> stencil_offsets(int d, bool cross_terms);
/// stencil_offsets(d, true) followed by the remaining +-v of {-1,0,1}^d.
std::vector<Offset> wide_offsets(int d);
/// Row from a nonnegative decomposition A = sum_v alpha_v v v^T over the
/// directions of `offsets` (given as +-v pairs after the center).  Returns
/// false when no such decomposition exists.
bool wide_stencil_row(const SymMatrix& A, double eps, double h, const std::vector<Offset>& offsets,
                      double* w);

/// In d >= 3, rows where the cross stencil is not monotone switch to
/// wide_stencil_row (and the operator carries wide_offsets).
DiscreteOperator assemble(const MatrixField& field, double eps, const Grid& grid);
/// Same, for an explicit coefficient function.
DiscreteOperator assemble(const std::function<SymMatrix(const Point&)>& A, int d, bool cross,
                          double eps, const Grid& grid);

struct MonotoneReport {
    bool is_monotone = true;
    std::int64_t worst_row = -1;
    Point worst_point;
    /// min over interior rows of min(center weight, -off-center weights)
    double margin = 0.0;
};

MonotoneReport check_monotone(const DiscreteOperator& op);

/// Stencil rows applied to u; Dirichlet rows act as the identity.
GridFunction apply(const DiscreteOperator& op, const GridFunction& u);

struct SolveOptions {
    int max_iterations = 200;
    int pre_smooth = 2;
    int post_smooth = 2;
    /// Coarsening stops once a level has at most this many unknowns.
    std::int64_t coarse_target = 4096;
    /// Coarsest level solved directly when it has at most this many unknowns.
    std::int64_t direct_max = 20000;
};

struct SolveStats {
    int iterations = 0;
    int levels = 0;
    double residual = 0.0;
    std::vector<double> history;
};

/// Geometric multigrid (Galerkin coarse operators, red-black Gauss-Seidel,
/// full weighting) for one operator; reusable across right-hand sides.
class MultigridSolver {
public:
    MultigridSolver(const DiscreteOperator& op, bool transpose = false, SolveOptions opt = {});
    ~MultigridSolver();
    MultigridSolver(MultigridSolver&&) noexcept;
    MultigridSolver& operator=(MultigridSolver&&) noexcept;

    /// Non-Dirichlet entries of rhs are the source; Dirichlet values come from
    /// the operator (forward solve) or are zero (transpose solve).
    GridFunction solve(const GridFunction& rhs, double tol, SolveStats* stats = nullptr) const;
    int levels() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Residual contract: sup|rhs - op u| <= tol * (sup|rhs| + eps^2 sup|u|) over
/// non-Dirichlet rows.  When that scale is zero the residual is reduced by tol.
GridFunction solve(const DiscreteOperator& op, const GridFunction& rhs, double tol,
                   SolveStats* stats = nullptr);
/// Transpose system over the non-Dirichlet unknowns with zero Dirichlet data.
GridFunction adjoint_solve(const DiscreteOperator& op, const GridFunction& rhs, double tol,
                           SolveStats* stats = nullptr);

}  // namespace homlab
