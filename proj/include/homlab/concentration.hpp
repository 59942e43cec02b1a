#pragma once

/// @file concentration.hpp
/// Vertical derivatives by site resampling, Efron-Stein type validators with
/// explicit constants, kernel-sum numerics and the corrector sensitivity and
/// synthetic concentration experiments.

#include "homlab/corrector.hpp"
#include "homlab/env.hpp"
#include "homlab/experiment.hpp"
#include "homlab/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace homlab {

/// Moment constant in E|X - EX|^p <= kappa p^(p/2) E[V^(p/2)].
inline constexpr double kMomentConstant = 1.271;
/// Auxiliary exponent in the stretched-exponential bound.
inline constexpr double kStretchedAlpha = 20.0;

/// A random variable as a deterministic function of the site seeds.
using LatticeFunctional = std::function<double(const SiteSeedLattice&)>;

struct VerticalDerivative {
    Site z;
    double estimate = 0.0;  ///< X - mean_k X(omega with site z resampled)
    double stderr_ = 0.0;   ///< sd over resamples / sqrt(K); 0 for exact enumeration
    std::int64_t resamples = 0;
};

/// Estimate of X - E[X | all sites but z] from K resamples of site z with
/// fresh seeds derived from (seed, z, k).
VerticalDerivative vertical_derivative(const LatticeFunctional& X, const SiteSeedLattice& lattice,
                                       const Site& z, std::int64_t K, std::uint64_t seed);

/// For scalar_checkerboard fields: one seed per atom of the scalar law whose
/// cell value is that atom.
std::vector<std::uint64_t> atom_seeds(const FieldSpec& spec);

/// Exact X - E[X | all sites but z] for a scalar_checkerboard field by
/// enumerating the atoms of the scalar law.  `base_value` is X(lattice).
VerticalDerivative enumerated_vertical_derivative(const LatticeFunctional& X,
                                                  const SiteSeedLattice& lattice, const Site& z,
                                                  const FieldSpec& spec, double base_value);

struct VerticalDerivativeField {
    std::string description;
    std::int64_t resamples = 0;
    std::vector<VerticalDerivative> sites;
};

VerticalDerivativeField vertical_derivative_field(const LatticeFunctional& X,
                                                  const SiteSeedLattice& lattice,
                                                  const IntBox& window, std::int64_t K,
                                                  std::uint64_t seed,
                                                  const std::string& description = "");
/// Columns z_1..z_d, estimate, stderr.
void write_vertical_csv(const VerticalDerivativeField& field, std::ostream& os);

/// Radius outside of which the envelope xi_eps is below floor xi_eps(0).
struct EnvelopeWindow {
    double eps = 0.125;
    int dimension = 2;
    double a = 0.5;
    double floor = 1e-4;

    std::int64_t required_radius() const;
};

struct WindowTooSmall : DomainError {
    WindowTooSmall(const std::string& what, std::int64_t required)
        : DomainError(what), required_radius(required) {}
    std::int64_t required_radius;
};

/// Sum over the window of the bias-corrected squares estimate^2 - stderr^2.
/// With an envelope, a window not containing the cube of the required radius
/// throws WindowTooSmall.
double total_vertical_variance(const LatticeFunctional& X, const SiteSeedLattice& lattice,
                               const IntBox& window, std::int64_t K, std::uint64_t seed,
                               const std::optional<EnvelopeWindow>& envelope = std::nullopt);

/// One-sided check lhs <= rhs up to a sampling tolerance.
struct ConcentrationReport {
    std::string kind;
    double beta = 0.0;  ///< p for moment checks, beta for stretched checks
    double empirical_lhs = 0.0;
    double bound_rhs = 0.0;
    double margin = 0.0;     ///< bound_rhs - empirical_lhs
    double tolerance = 0.0;  ///< 3 combined standard errors
    std::int64_t samples = 0;
    bool overflow = false;

    bool holds() const { return !overflow && margin >= -tolerance; }
    /// |margin| within the tolerance.
    bool equality() const { return std::abs(margin) <= tolerance; }
};
void to_json(nlohmann::json& j, const ConcentrationReport& r);

/// var[X] against mean[V].
ConcentrationReport efron_stein_check(std::span<const double> X, std::span<const double> V);
/// E|X - EX|^p against 1.271 p^(p/2) E[V^(p/2)].
ConcentrationReport moment_bound_check(std::span<const double> X, std::span<const double> V,
                                       double p);

struct StretchedBound {
    double value = 0.0;
    bool overflow = false;
};

/// exp(E[V]^(beta/2)) + (alpha / (alpha - e kappa beta))^(beta/2)
///   E[exp((alpha V)^(beta/(2-beta)))]^((2-beta)/2)
/// with kappa = 1.271 and alpha = 20.
StretchedBound stretched_bound(double beta, std::span<const double> V);
/// E[exp(|X - EX|^beta)] against stretched_bound.
ConcentrationReport stretched_check(std::span<const double> X, std::span<const double> V,
                                    double beta);

/// sum over Z^d of xi_eps(|z|)^2: exact lattice counts for |z| <= exact_radius
/// and the radial integral beyond.
double kernel_square_sum(double eps, int d, double a, std::int64_t exact_radius = 64);
/// kernel_square_sum / (eps^-4 E(eps)^2).
double kernel_sum_ratio(double eps, int d, double a);

struct EstinyPoint {
    double r = 0.0;
    double sum = 0.0;   ///< sum_y xi(|y|) xi(|x - y|) over a cube, |x| = r
    double form = 0.0;  ///< exp(-a eps r) ((1 + r)^(4-d) + eps^(d-4))
    double ratio = 0.0;
};
/// Coarse direct sums over the cube of radius r/2 + margin around x/2.
std::vector<EstinyPoint> estiny_check(double eps, int d, double a, std::span<const double> rs,
                                      std::int64_t margin = 8);

// ---------------------------------------------------------------------------
// Experiments

/// eps^2 phi_eps(0) as a functional of the site seeds.
LatticeFunctional corrector_functional(const FieldSpec& spec, double eps, const SymMatrix& M,
                                       const CorrectorOptions& options);

/// Per-site |X - X'_z| of X = eps^2 phi_eps(0) at the 2d axis sites of each
/// shell radius; the shell means are fitted against the xi_eps envelope.
struct SensitivityConfig {
    FieldSpec field;
    double eps = 0.125;
    std::vector<std::int64_t> radii{1, 2, 3, 4, 6, 8, 10};
    /// "enumerate" (exact, scalar_checkerboard only) or "resample".
    std::string conditional = "enumerate";
    std::int64_t K = 32;
    std::int64_t samples = 8;
    CorrectorOptions corrector;
    double fit_r_min = 2.0;
    double fit_r_max = 10.0;
    std::vector<int> kernel_dims{2, 3, 5};
    std::vector<double> kernel_eps{0.25, 0.125, 0.0625, 0.03125};
    double estiny_eps = 0.25;
    std::vector<double> estiny_r{0.0, 2.0, 4.0, 8.0, 16.0};
    std::uint64_t base_seed = 1;

    SensitivityConfig();
    void validate() const;
};
void to_json(nlohmann::json& j, const SensitivityConfig& c);
void from_json(const nlohmann::json& j, SensitivityConfig& c);
ExperimentPlan make_sensitivity_plan(const SensitivityConfig& config);
StatReport sensitivity_experiment(const SensitivityConfig& config, int workers = 1);

/// amplitude * sum or amplitude * max of i.i.d. site values; X'_z is exact by
/// enumeration of the law.
struct SyntheticFunctional {
    std::string label;
    std::string kind = "sum";  ///< "sum" or "max"
    std::int64_t sites = 16;
    DiscreteLaw law;
    double amplitude = 0.05;
};
void to_json(nlohmann::json& j, const SyntheticFunctional& f);
void from_json(const nlohmann::json& j, SyntheticFunctional& f);

struct SyntheticSample {
    double X = 0.0;
    double V = 0.0;  ///< sum_z (X - X'_z)^2
};
SyntheticSample synthetic_sample(const SyntheticFunctional& f, std::uint64_t seed);

struct ConcentrationSuiteConfig {
    std::vector<SyntheticFunctional> functionals;
    std::int64_t samples = 10000;
    std::vector<double> p_values{2.0, 4.0, 6.0};
    std::vector<double> betas{0.5, 1.0, 1.5};
    std::uint64_t base_seed = 1;

    ConcentrationSuiteConfig();
    void validate() const;
};
void to_json(nlohmann::json& j, const ConcentrationSuiteConfig& c);
void from_json(const nlohmann::json& j, ConcentrationSuiteConfig& c);
ExperimentPlan make_concentration_suite_plan(const ConcentrationSuiteConfig& config);
StatReport concentration_suite(const ConcentrationSuiteConfig& config, int workers = 1);

}  // namespace homlab
