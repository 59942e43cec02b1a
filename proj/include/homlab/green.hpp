#pragma once

/// @file green.hpp
/// Modified Green's functions eps^2 G - tr(A D^2 G) = chi_{B_ell(y)}, their
/// deterministic exponential tail, decay-envelope fits, the radial barrier
/// families and the invariant measure.

#include "homlab/env.hpp"
#include "homlab/experiment.hpp"
#include "homlab/grid.hpp"
#include "homlab/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace homlab {

/// Constants of the barrier families.  beta = alpha / 2 where alpha stands in
/// for the (non-constructive) homogenization exponent.
struct BarrierParams {
    double lambda = 1.0;
    double Lambda = 1.0;
    double ell = 1.0;
    int d = 3;
    double alpha = 0.1;

    double a = 0.0;       ///< 1 / sqrt(2 Lambda)
    double beta = 0.0;    ///< alpha / 2
    double gamma = 0.0;   ///< max(1/2, 1 - lambda / (2 Lambda))
    double h_coef = 0.0;  ///< (2 / lambda) (2 ell)^(2 - gamma)

    static BarrierParams make(double lambda, double Lambda, double ell, int d, double alpha = 0.1);
    static BarrierParams from_field(const FieldSpec& spec, double alpha = 0.1);

    /// d >= 3: h (d - 2 - 2^b R^-b)^-1 R^(d-2+g) exp(2^b R^-b / b);
    /// d = 2: 2 h exp(2^b R^-b / b) R^g.
    double k_R(double R) const;
    /// d >= 3 continuity constant at |x| = R.
    double m_R(double R) const;
    /// d = 2 continuity constants at |x| = R and |x| = 1/eps.
    double m_R_eps(double R, double eps) const;
    double b_R_eps(double R, double eps) const;
};

void to_json(nlohmann::json& j, const BarrierParams& p);

/// exp(a ell) eps^-2 exp(-eps a |x - y|)
double deterministic_tail_bound(double eps, const Point& x, const Point& y, const BarrierParams& p);

/// exp(-a eps r) log(2 + 1/(eps (1 + r))) in d = 2, exp(-a eps r) (1 + r)^(2-d) in d >= 3.
double envelope_xi(double eps, double r, int d, double a);

enum class BarrierKind { phi_R, psi_R, phi_R_eps, psi_R_eps };
std::string to_string(BarrierKind k);
BarrierKind barrier_kind_from_string(const std::string& s);

/// Piecewise radial barrier at distance r from the origin.  phi_R, psi_R need
/// d >= 3; phi_R_eps, psi_R_eps need d = 2 and 4 ell <= R <= 1/eps.
double barrier_radial(BarrierKind kind, double R, double eps, double r, const BarrierParams& p);
double barrier_value(BarrierKind kind, double R, double eps, const Point& x, const BarrierParams& p);
/// Radii where the piecewise definition switches.
std::vector<double> barrier_interfaces(BarrierKind kind, double R, double eps);
/// Largest |inner - outer| over the interfaces, both pieces evaluated at the
/// interface radius.
double barrier_continuity_gap(BarrierKind kind, double R, double eps, const BarrierParams& p);

/// Radial region r_min <= |x| <= r_max; r_max = inf means the default for
/// the barrier kind.
struct RadialRegion {
    double r_min = 0.0;
    double r_max = std::numeric_limits<double>::infinity();
};

struct SupersolutionReport {
    /// phi kinds: min over the region of -tr(A D_h^2 phi) - chi_{B_ell}.
    /// psi kinds: min of -Delta_h psi / (|x|^(-2-beta) psi), the constant c.
    double min_margin = 0.0;
    Point witness;
    std::int64_t checked = 0;
};

SupersolutionReport verify_supersolution(BarrierKind kind, double R, double eps,
                                         const MatrixField& field, const RadialRegion& region,
                                         double h, const BarrierParams& p);

/// Grid of radius box_radius around y; zero Dirichlet data; source 1 on grid
/// nodes with |x - y| < ell.
GridFunction modified_green(const MatrixField& field, double eps, const Point& y, double box_radius,
                            double h, double tol, SolveStats* stats = nullptr);

/// Adjoint solve with right side eps^2 on a box centered at the origin.
GridFunction invariant_measure(const MatrixField& field, double eps, double box_radius, double h,
                               double tol, SolveStats* stats = nullptr);

struct DualityCheck {
    double measure_mass = 0.0;  ///< sum over B_ell(0) of m h^d
    double green_mass = 0.0;    ///< eps^2 sum_x G(x, 0) h^d
    double relative_gap = 0.0;
};

DualityCheck green_duality(const MatrixField& field, double eps, double box_radius, double h,
                           double tol);

/// Shell average of g around its grid center.
struct ShellStat {
    double r = 0.0;  ///< mean distance of the points in the shell
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::int64_t count = 0;
};

/// Shells of width `bin` (0 means the grid spacing), shell k holding the points
/// with round(|x - center| / bin) = k.
std::vector<ShellStat> shell_profile(const GridFunction& g, double bin = 0.0);
/// Columns r, mean, min, max, count.
void write_shell_csv(const std::vector<ShellStat>& shells, std::ostream& os);

/// osc of g over grid points in B_radius(x).
double oscillation(const GridFunction& g, const Point& x, double radius = 1.0);

enum class DecayFitMode { power, derivative, screened };
std::string to_string(DecayFitMode m);
DecayFitMode decay_fit_mode_from_string(const std::string& s);

struct DecayFit {
    /// g ~ r^-gamma_hat; slope = -gamma_hat.
    double gamma_hat = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  ///< 95% interval for gamma_hat
    double slope = 0.0;
    /// Screening rate of the screened mode (0 otherwise).
    double kappa = 0.0;
    std::int64_t shells = 0;
    bool degenerate = false;
};

/// power: log mean vs log r.  derivative: log |d mean / dr| vs log r, so that
/// K_gamma with either sign of gamma gives slope -gamma - 1.  screened: joint
/// fit log mean = c - gamma log r - kappa r.
DecayFit decay_exponent_fit(const GridFunction& g, double r_min, double r_max,
                            DecayFitMode mode = DecayFitMode::power);
DecayFit decay_exponent_fit(const std::vector<ShellStat>& shells, double r_min, double r_max,
                            DecayFitMode mode);

// ---------------------------------------------------------------------------
// Experiments

/// Deterministic tail audit: max_x G(x, 0) - bound(x) over samples and eps.
struct GreenTailConfig {
    FieldSpec field;
    std::vector<double> eps{0.25, 0.125};
    std::int64_t samples = 50;
    /// Box radius as a multiple of 1/eps.
    double box_factor = 3.0;
    double h = 0.5;
    double tol = 1e-8;
    std::uint64_t base_seed = 1;

    void validate() const;
};
void to_json(nlohmann::json& j, const GreenTailConfig& c);
void from_json(const nlohmann::json& j, GreenTailConfig& c);
ExperimentPlan make_green_tail_plan(const GreenTailConfig& config);

/// Shell-fit decay exponent of G(., 0) per sample.
struct GreenDecayConfig {
    FieldSpec field;
    double eps = 0.125;
    std::int64_t samples = 50;
    double box_radius = 48.0;
    double h = 1.0;
    double r_min = 5.0;
    double r_max = 20.0;
    DecayFitMode mode = DecayFitMode::screened;
    double tol = 1e-8;
    /// Accepted slope band around 2 - d.
    double band = 0.5;
    std::uint64_t base_seed = 1;

    void validate() const;
};
void to_json(nlohmann::json& j, const GreenDecayConfig& c);
void from_json(const nlohmann::json& j, GreenDecayConfig& c);
ExperimentPlan make_green_decay_plan(const GreenDecayConfig& config);

/// Decay exponent of the radial counterexample fields.
struct CounterexampleConfig {
    int dimension = 3;
    double Lambda = 4.0;
    RadialVariant variant = RadialVariant::A1;
    double eps = 1.0 / 64.0;
    double box_radius = 32.0;
    double h = 1.0;
    double r_min = 5.0;
    double r_max = 14.0;
    DecayFitMode mode = DecayFitMode::derivative;
    double tol = 1e-9;

    void validate() const;
    /// (d-1)/Lambda - 1 for A1, Lambda (d-1) - 1 for A2.
    double predicted_gamma() const;
};
void to_json(nlohmann::json& j, const CounterexampleConfig& c);
void from_json(const nlohmann::json& j, CounterexampleConfig& c);
ExperimentPlan make_counterexample_plan(const CounterexampleConfig& config);

/// Supersolution margins of phi_R for A = Id and random admissible fields.
struct BarrierAuditConfig {
    FieldSpec field;
    std::int64_t samples = 20;
    /// R = R_factor * ell
    double R_factor = 8.0;
    double eps = 0.0;  ///< only used by the d = 2 kinds
    double h = 0.5;
    double alpha = 0.1;
    std::uint64_t base_seed = 1;

    void validate() const;
    BarrierKind kind() const;
};
void to_json(nlohmann::json& j, const BarrierAuditConfig& c);
void from_json(const nlohmann::json& j, BarrierAuditConfig& c);
ExperimentPlan make_barrier_audit_plan(const BarrierAuditConfig& config);

/// Invariant-measure / Green duality gaps.
struct DualityConfig {
    FieldSpec field;
    std::int64_t samples = 20;
    double eps = 0.25;
    double box_radius = 16.0;
    double h = 0.5;
    double tol = 1e-10;
    std::uint64_t base_seed = 1;

    void validate() const;
};
void to_json(nlohmann::json& j, const DualityConfig& c);
void from_json(const nlohmann::json& j, DualityConfig& c);
ExperimentPlan make_duality_plan(const DualityConfig& config);

}  // namespace homlab
