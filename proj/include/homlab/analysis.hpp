#pragma once

/// @file analysis.hpp
/// Minimax polynomial fits on grid balls, coarsened Hölder seminorms, the
/// interpolation inequality, the quadratic-approximation cascade and the
/// regularity / homogenization-error experiments.

#include "homlab/env.hpp"
#include "homlab/experiment.hpp"
#include "homlab/grid.hpp"
#include "homlab/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace homlab {

enum class FitKind { affine, quadratic };
std::string to_string(FitKind k);

/// fit(x) = constant + p.(x - center) + 1/2 (x - center).Q (x - center)
struct MinimaxFit {
    FitKind kind = FitKind::affine;
    Point center;
    double constant = 0.0;
    Point p;
    SymMatrix Q;  ///< zero for affine fits
    /// osc over the ball of u - fit
    double achieved_osc = 0.0;
    /// Dual lower bound for the optimal osc; achieved_osc - dual_bound is the
    /// certified optimality gap.
    double dual_bound = 0.0;
    std::int64_t points = 0;

    double eval(const Point& x) const;
    double gap() const { return achieved_osc - dual_bound; }
};

/// Number of fit coefficients, constant included.
int fit_coefficients(FitKind kind, int d);

/// Chebyshev fit over values f at points xs (relative to `center`).
MinimaxFit minimax_fit(std::span<const Point> xs, std::span<const double> f, const Point& center,
                       FitKind kind);

/// Grid points x with |x - center| <= r.  Throws DomainError when the ball
/// leaves the grid box.
std::vector<std::int64_t> ball_points(const Grid& grid, const Point& center, double r);

/// Exact minimax fit over the grid points of B_r(center).  Fewer points than
/// coefficients throws DegenerateError.
MinimaxFit best_fit(const GridFunction& u, const Point& center, double r, FitKind kind);

/// osc of u over the grid points of B_r(center).
double ball_osc(const GridFunction& u, const Point& center, double r);

enum class SeminormOrder { zeroth, first };

struct SeminormProfile {
    double value = 0.0;
    double argmax_radius = 0.0;
    std::vector<double> radii;
    std::vector<double> terms;  ///< r^-a osc or r^-1-a affine osc per radius
};

/// Radii are the dyadic multiples grid.h 2^k with h_floor < r <= domain_radius.
/// domain_radius = 0 selects the largest ball around center inside the grid.
SeminormProfile seminorm_profile(const GridFunction& u, const Point& center, double h_floor,
                                 SeminormOrder order, double alpha = 1.0, double domain_radius = 0.0);
double coarsened_seminorm(const GridFunction& u, const Point& center, double h_floor,
                          SeminormOrder order, double alpha = 1.0, double domain_radius = 0.0);
/// Columns r, term.
void write_seminorm_csv(const SeminormProfile& prof, std::ostream& os);

struct InterpolationCheck {
    double lhs = 0.0;  ///< first-order-free C^{0,1}_h seminorm on B_R
    double rhs = 0.0;  ///< 14 sqrt(C^{1,1}_h seminorm) sqrt(osc over B_R)
    double ratio = 0.0;
    double c11 = 0.0;
    double osc = 0.0;
    /// C^{1,1}_h seminorm at most 1e-9 (osc / R^2); ratio is then NaN.
    bool degenerate = false;
};

InterpolationCheck interpolation_check(const GridFunction& u, const Point& center, double h_floor,
                                       double R);

struct CascadeStep {
    double s = 0.0;
    double G = 0.0;  ///< s^-2 inf_q sup_{B_s} |u - q|
    double H = 0.0;  ///< s^-2 inf_l sup_{B_s} |u - l|
    SymMatrix Q;     ///< Hessian of the optimal quadratic
    double q_norm = 0.0;
    double margin_gh_lower = 0.0;  ///< H - G
    double margin_gh_upper = 0.0;  ///< G + |Q|/2 - H
    double margin_q_bound = 0.0;   ///< 4 H - |Q|
    /// (2 s_j^2 / s_{j+1}^2) G_j + 2 G_{j+1} - |Q_{j+1} - Q_j|; NaN on the last step.
    double margin_q_diff = 0.0;
    /// G_{j+1} / G_j; NaN on the last step.
    double improvement = 0.0;
};

struct CascadeTrace {
    double theta = 0.0;
    double r0 = 0.0;
    double R = 0.0;
    std::vector<CascadeStep> steps;

    double min_margin() const;
};

/// Radii s_0 = R, s_j = theta^(j-1) R / 4 while s_j >= r0, centered at the
/// grid center.  r0 must be at least 4 h: on coarser balls the discrete fits
/// no longer satisfy the continuum inequalities.
CascadeTrace quadratic_cascade(const GridFunction& u, double theta, double r0, double R);
/// Columns j, s, G, H, q_norm, margins, improvement.
void write_cascade_csv(const CascadeTrace& trace, std::ostream& os);

// ---------------------------------------------------------------------------
// Experiments

/// "saddle": (x_1^2 - x_2^2) / 2; "paraboloid": |x|^2 / 2.
double boundary_polynomial(const std::string& kind, const Point& x);

/// -tr(A D^2 u) = f (constant) on B_R with polynomial boundary data; per
/// sample the ratio of [u]_{C^{1,1}_h(0, B_R/2)} to the driver
/// |f| + R^-2 inf_l sup_{B_R} |u - l|.
struct RegularityConfig {
    FieldSpec field;
    std::vector<double> radii{16.0, 32.0, 64.0};
    std::int64_t samples = 20;
    double h = 0.5;
    double h_floor = 1.0;
    std::string boundary = "saddle";
    double source = 1.0;
    double tol = 1e-9;
    std::uint64_t base_seed = 1;

    void validate() const;
};
void to_json(nlohmann::json& j, const RegularityConfig& c);
void from_json(const nlohmann::json& j, RegularityConfig& c);
ExperimentPlan make_regularity_plan(const RegularityConfig& config);
StatReport regularity_experiment(const RegularityConfig& config, int workers = 1);

/// sup |u - v| / R^2 between the heterogeneous and the constant-ahom Dirichlet
/// problems on B_R.
struct HomogenizationErrorConfig {
    FieldSpec field;
    std::vector<double> radii{8.0, 16.0, 32.0, 64.0};
    std::int64_t samples = 20;
    double h = 0.5;
    std::string boundary = "saddle";
    double source = 1.0;  ///< constant right side f
    /// Homogenized matrix; when absent it is estimated with ahom_samples
    /// corrector solves at ahom_eps.
    std::optional<SymMatrix> ahom;
    double ahom_eps = 1.0 / 16.0;
    std::int64_t ahom_samples = 0;
    double tol = 1e-10;
    std::uint64_t base_seed = 1;

    void validate() const;
};
void to_json(nlohmann::json& j, const HomogenizationErrorConfig& c);
void from_json(const nlohmann::json& j, HomogenizationErrorConfig& c);
ExperimentPlan make_homogenization_error_plan(const HomogenizationErrorConfig& config);
StatReport homogenization_error_experiment(const HomogenizationErrorConfig& config, int workers = 1);

}  // namespace homlab
