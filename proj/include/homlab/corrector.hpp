#pragma once

/// @file corrector.hpp
/// Approximate correctors eps^2 phi - tr(A (M + D^2 phi)) = 0 on truncated
/// boxes, the homogenized matrix estimate, corrector differences and the
/// variance-scaling experiments.

#include "homlab/env.hpp"
#include "homlab/experiment.hpp"
#include "homlab/grid.hpp"
#include "homlab/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace homlab {

/// E(eps): eps|log eps| (d=2), eps^1.5 (d=3), eps^2 |log eps|^0.5 (d=4), eps^2 (d>4).
double error_scale(double eps, int d);

/// a = 1/sqrt(2 Lambda)
double screening_rate(double Lambda);

/// ceil((2/(a eps)) log(1/(eps^2 tol))) with a = screening_rate(Lambda).
double truncation_radius(double eps, double Lambda, double trunc_tol);

/// Smallest multiple of h*2^k (k = 3, or 4 for large boxes) not below r, so
/// that the multigrid hierarchy can coarsen several times.
double solver_radius(double r, double h);

struct CorrectorOptions {
    double h = 0.5;
    double trunc_tol = 1e-6;
    /// Explicit box radius; 0 selects box_factor / eps or, if that is also
    /// 0, truncation_radius.
    double box_radius = 0.0;
    double box_factor = 0.0;
    /// Dirichlet value of eps^2 phi on the box boundary (0 is the plain
    /// truncation).
    double boundary_value = 0.0;
    double solve_tol = 1e-8;
    double memory_budget_mb = 3072.0;

    double radius_for(double eps, double Lambda) const;
};

void to_json(nlohmann::json& j, const CorrectorOptions& o);
void from_json(const nlohmann::json& j, CorrectorOptions& o);

/// Rough peak memory of one solve on `grid` with `offsets` stencil entries.
double solve_memory_mb(const Grid& grid, std::size_t offsets);

struct CorrectorProblem {
    CorrectorProblem(MatrixField f, SymMatrix m, double e, CorrectorOptions o = {})
        : field(std::move(f)), M(std::move(m)), eps(e), options(o) {}

    MatrixField field;
    SymMatrix M;
    double eps;
    CorrectorOptions options;

    void validate() const;
};

struct CorrectorSolution {
    GridFunction phi;
    /// eps^2 phi at the box center
    double center_value = 0.0;
    double box_radius = 0.0;
    SolveStats stats;
};

/// One assembled operator and multigrid hierarchy reused across matrices M.
class CorrectorSystem {
public:
    CorrectorSystem(const MatrixField& field, double eps, const CorrectorOptions& options);

    CorrectorSolution solve(const SymMatrix& M) const;
    const DiscreteOperator& op() const { return op_; }
    const Grid& grid() const { return op_.grid; }

private:
    const MatrixField* field_;
    double eps_;
    CorrectorOptions options_;
    DiscreteOperator op_;
    MultigridSolver mg_;
};

CorrectorSolution approximate_corrector(const CorrectorProblem& p);

/// tr(A(x) M) at every non-Dirichlet point of the operator's grid.
GridFunction trace_rhs(const MatrixField& field, const SymMatrix& M, const DiscreteOperator& op);

struct AhomEstimate {
    SymMatrix matrix;
    SymMatrix per_entry_stderr;
    std::int64_t samples = 0;
    double eps = 0.0;
};

AhomEstimate ahom_estimate(const FieldSpec& spec, double eps, std::int64_t n_samples,
                           std::uint64_t seed, const CorrectorOptions& options = {});

struct CorrectorDifference {
    GridFunction psi;  ///< phi_eps - phi_2eps on the eps box
    GridFunction phi_eps;
    GridFunction phi_2eps;
    /// sup over interior points of |L_eps psi - 3 eps^2 phi_2eps|
    double residual = 0.0;
    /// Radius of the 2 eps box, inside which psi is meaningful.
    double inner_radius = 0.0;
};

CorrectorDifference corrector_difference(const MatrixField& field, const SymMatrix& M, double eps,
                                         const CorrectorOptions& options = {});

// ---------------------------------------------------------------------------
// Experiments

struct ScalingConfig {
    FieldSpec field;
    std::vector<double> eps;
    std::int64_t samples = 100;
    SymMatrix M;
    CorrectorOptions corrector;
    std::uint64_t base_seed = 1;

    void validate() const;
};

void to_json(nlohmann::json& j, const ScalingConfig& c);
void from_json(const nlohmann::json& j, ScalingConfig& c);

ExperimentPlan make_scaling_plan(const ScalingConfig& config);
StatReport summarize_scaling(const ScalingConfig& config, std::span<const RawRecord> records);
StatReport scaling_experiment(const ScalingConfig& config, int workers = 1);

struct DirichletConfig {
    FieldSpec field;
    std::vector<double> eps;
    std::int64_t samples = 100;
    double h = 0.5;
    /// "gaussian": exp(-|x|^2 / (2 w^2)) cut off at |x| >= 4w; "bump":
    /// exp(1 - 1/(1 - |x|^2/w^2)) for |x| < w.
    std::string source = "gaussian";
    double source_width = 0.125;
    /// Macroscopic ball radius.
    double domain_radius = 1.0;
    double solve_tol = 1e-10;
    std::uint64_t base_seed = 1;

    void validate() const;
    double source_value(const Point& x) const;
};

void to_json(nlohmann::json& j, const DirichletConfig& c);
void from_json(const nlohmann::json& j, DirichletConfig& c);

ExperimentPlan make_dirichlet_plan(const DirichletConfig& config);
StatReport summarize_dirichlet(const DirichletConfig& config, std::span<const RawRecord> records);
StatReport checkerboard_dirichlet_experiment(const DirichletConfig& config, int workers = 1);

/// Shared by the scaling-type summaries: per-cell summaries of `quantity`
/// with params, plus the log-log fit of sd (or variance) against E(eps).
void add_scale_fit(StatReport& report, const std::vector<double>& eps, int d,
                   const std::vector<Summary>& summaries, bool use_variance,
                   const std::string& name);

}  // namespace homlab
