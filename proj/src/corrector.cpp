#include "homlab/corrector.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <limits>

namespace homlab {

double error_scale(double eps, int d) {
    if (!(eps > 0.0 && eps <= 0.5)) throw DomainError("error_scale: eps must lie in (0, 1/2]");
    if (d < 2) throw DomainError("error_scale: dimension must be at least 2");
    const double L = std::abs(std::log(eps));
    switch (d) {
        case 2: return eps * L;
        case 3: return std::pow(eps, 1.5);
        case 4: return eps * eps * std::sqrt(L);
        default: return eps * eps;
    }
}

double screening_rate(double Lambda) { return 1.0 / std::sqrt(2.0 * Lambda); }

double truncation_radius(double eps, double Lambda, double trunc_tol) {
    if (!(eps > 0.0) || !(trunc_tol > 0.0) || eps * eps * trunc_tol >= 1.0)
        throw DomainError("truncation_radius: need eps > 0 and 0 < eps^2 tol < 1");
    const double a = screening_rate(Lambda);
    return std::ceil((2.0 / (a * eps)) * std::log(1.0 / (eps * eps * trunc_tol)));
}

double solver_radius(double r, double h) {
    if (!(r > 0.0) || !(h > 0.0)) throw DomainError("solver_radius: r and h must be positive");
    const double half = std::ceil(r / h - 1e-9);
    const double m = half >= 64.0 ? 16.0 : 8.0;
    return std::ceil(half / m) * m * h;
}

double CorrectorOptions::radius_for(double eps, double Lambda) const {
    double r = box_radius;
    if (r <= 0.0) r = box_factor > 0.0 ? box_factor / eps : truncation_radius(eps, Lambda, trunc_tol);
    return solver_radius(r, h);
}

void to_json(nlohmann::json& j, const CorrectorOptions& o) {
    j = {{"h", o.h},
         {"trunc_tol", o.trunc_tol},
         {"box_radius", o.box_radius},
         {"box_factor", o.box_factor},
         {"boundary_value", o.boundary_value},
         {"solve_tol", o.solve_tol},
         {"memory_budget_mb", o.memory_budget_mb}};
}

void from_json(const nlohmann::json& j, CorrectorOptions& o) {
    require_keys(j, {"h", "trunc_tol", "box_radius", "box_factor", "boundary_value", "solve_tol",
                     "memory_budget_mb"},
                 "corrector");
    o = CorrectorOptions{};
    o.h = j.value("h", o.h);
    o.trunc_tol = j.value("trunc_tol", o.trunc_tol);
    o.box_radius = j.value("box_radius", o.box_radius);
    o.box_factor = j.value("box_factor", o.box_factor);
    o.boundary_value = j.value("boundary_value", o.boundary_value);
    o.solve_tol = j.value("solve_tol", o.solve_tol);
    o.memory_budget_mb = j.value("memory_budget_mb", o.memory_budget_mb);
    if (!(o.h > 0.0) || !(o.trunc_tol > 0.0) || !(o.solve_tol > 0.0) || o.box_radius < 0.0 ||
        o.box_factor < 0.0 || !(o.memory_budget_mb > 0.0))
        throw ConfigError("corrector: h, trunc_tol, solve_tol, memory_budget_mb must be positive");
}

double solve_memory_mb(const Grid& grid, std::size_t offsets) {
    const double n = double(grid.size());
    const int d = grid.dim();
    // operator weights + scaled copy, boundary/rhs/solution/work vectors, masks
    double bytes = n * (16.0 * double(offsets) + 8.0 * 7.0 + 2.0);
    const double coarse = std::pow(0.5, d) / (1.0 - std::pow(0.5, d));
    bytes += n * coarse * (8.0 * std::pow(3.0, d) + 24.0);
    return bytes / (1024.0 * 1024.0);
}

namespace {

void check_matrix(const SymMatrix& M, int d) {
    if (M.rows() != d || M.cols() != d) throw DomainError("corrector: M has the wrong dimension");
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 0.0) throw DomainError("corrector: M not symmetric");
    if (spectral_norm(M) > 1.0 + 1e-12) throw DomainError("corrector: |M| must not exceed 1");
}

void check_eps(double eps) {
    if (!(eps > 0.0 && eps <= 0.5)) throw DomainError("corrector: eps must lie in (0, 1/2]");
}

DiscreteOperator build_operator(const MatrixField& field, double eps, const Grid& grid,
                                double budget_mb) {
    const auto n_off = stencil_offsets(field.dim(), !field.spec().diagonal_only()).size();
    const double need = solve_memory_mb(grid, n_off);
    if (need > budget_mb) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "box of radius %g needs about %.0f MB, budget %.0f MB",
                      grid.radius(), need, budget_mb);
        throw ResourceBudgetError(buf);
    }
    DiscreteOperator op = assemble(field, eps, grid);
    const auto rep = check_monotone(op);
    if (!rep.is_monotone) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "non-monotone stencil at row %lld (margin %g)",
                      static_cast<long long>(rep.worst_row), rep.margin);
        throw NonMonotoneError(buf);
    }
    return op;
}

}  // namespace

void CorrectorProblem::validate() const {
    check_eps(eps);
    check_matrix(M, field.dim());
}

GridFunction trace_rhs(const MatrixField& field, const SymMatrix& M, const DiscreteOperator& op) {
    GridFunction f(op.grid);
    for (std::int64_t i = 0; i < op.grid.size(); ++i) {
        if (op.is_dirichlet(i)) continue;
        f[i] = field.eval(op.grid.point(i)).cwiseProduct(M).sum();
    }
    return f;
}

CorrectorSystem::CorrectorSystem(const MatrixField& field, double eps, const CorrectorOptions& options)
    : field_(&field),
      eps_(eps),
      options_(options),
      op_(build_operator(field, (check_eps(eps), eps),
                         origin_grid(field.dim(), options.radius_for(eps, field.spec().Lambda), options.h),
                         options.memory_budget_mb)),
      mg_(op_) {}

CorrectorSolution CorrectorSystem::solve(const SymMatrix& M) const {
    check_matrix(M, field_->dim());
    const double c = options_.boundary_value / (eps_ * eps_);
    // phi = c + psi with psi = 0 on the boundary; rows sum to eps^2.
    GridFunction rhs = trace_rhs(*field_, M, op_);
    if (c != 0.0)
        for (std::int64_t i = 0; i < rhs.grid.size(); ++i)
            if (!op_.is_dirichlet(i)) rhs[i] -= eps_ * eps_ * c;
    CorrectorSolution out;
    out.phi = mg_.solve(rhs, options_.solve_tol, &out.stats);
    if (c != 0.0)
        for (auto& v : out.phi.values) v += c;
    out.center_value = eps_ * eps_ * out.phi.at_center();
    out.box_radius = op_.grid.radius();
    return out;
}

CorrectorSolution approximate_corrector(const CorrectorProblem& p) {
    p.validate();
    CorrectorSystem sys(p.field, p.eps, p.options);
    return sys.solve(p.M);
}

AhomEstimate ahom_estimate(const FieldSpec& spec, double eps, std::int64_t n_samples,
                           std::uint64_t seed, const CorrectorOptions& options) {
    if (n_samples < 2) throw DomainError("ahom_estimate: need at least 2 samples");
    spec.validate();
    const int d = spec.dimension;
    std::vector<std::pair<int, int>> basis;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) basis.emplace_back(i, j);
    std::vector<std::vector<double>> vals(basis.size());
    for (std::int64_t s = 0; s < n_samples; ++s) {
        const auto lattice = sample_environment(spec, sample_seed(seed, experiment_id("ahom"), s));
        const MatrixField field(spec, lattice);
        const CorrectorSystem sys(field, eps, options);
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const auto [i, j] = basis[b];
            SymMatrix E = SymMatrix::Zero(d, d);
            E(i, j) = 1.0;
            E(j, i) = 1.0;
            // tr(A E_ij) = 2 a_ij off the diagonal
            const double w = i == j ? 1.0 : 0.5;
            vals[b].push_back(w * sys.solve(E).center_value);
        }
    }
    AhomEstimate est;
    est.matrix = SymMatrix::Zero(d, d);
    est.per_entry_stderr = SymMatrix::Zero(d, d);
    est.samples = n_samples;
    est.eps = eps;
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const auto [i, j] = basis[b];
        const auto s = summarize(vals[b]);
        est.matrix(i, j) = est.matrix(j, i) = s.mean;
        est.per_entry_stderr(i, j) = est.per_entry_stderr(j, i) = s.stderr_mean;
    }
    return est;
}

CorrectorDifference corrector_difference(const MatrixField& field, const SymMatrix& M, double eps,
                                         const CorrectorOptions& options) {
    check_eps(eps);
    if (2.0 * eps > 0.5) throw DomainError("corrector_difference: 2 eps must not exceed 1/2");
    check_matrix(M, field.dim());
    const double Lambda = field.spec().Lambda;
    CorrectorOptions o2 = options;
    const double r_eps = options.radius_for(eps, Lambda);
    o2.box_radius = r_eps;
    const CorrectorSystem sys_eps(field, eps, o2);
    const CorrectorSystem sys_2eps(field, 2.0 * eps, o2);
    CorrectorDifference out;
    out.phi_eps = sys_eps.solve(M).phi;
    out.phi_2eps = sys_2eps.solve(M).phi;
    out.psi = out.phi_eps - out.phi_2eps;
    out.inner_radius = options.radius_for(2.0 * eps, Lambda);
    const GridFunction lhs = apply(sys_eps.op(), out.psi);
    double res = 0.0;
    for (std::int64_t i = 0; i < lhs.grid.size(); ++i) {
        if (sys_eps.op().is_dirichlet(i)) continue;
        res = std::max(res, std::abs(lhs[i] - 3.0 * eps * eps * out.phi_2eps[i]));
    }
    out.residual = res;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> eps_list(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": eps must be an array");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(e.get<double>());
    return out;
}

void check_sweep(const std::vector<double>& eps, std::int64_t samples, const std::string& where) {
    if (eps.size() < 3) throw ConfigError(where + ": need at least 3 eps values");
    for (double e : eps)
        if (!(e > 0.0 && e <= 0.5)) throw ConfigError(where + ": eps must lie in (0, 1/2]");
    if (samples < 2) throw ConfigError(where + ": need at least 2 samples");
}

std::vector<ExperimentCell> eps_cells(const std::vector<double>& eps, int d) {
    std::vector<ExperimentCell> cells;
    for (double e : eps) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "eps=%g", e);
        cells.push_back({buf, {{"eps", e}, {"scale", error_scale(e, d)}}, -1});
    }
    return cells;
}

template <class Config>
StatReport base_report(const Config& config, const std::string& kind,
                       std::span<const RawRecord> records) {
    StatReport rep;
    rep.experiment = kind;
    rep.base_seed = config.base_seed;
    rep.failures = count_failures(records);
    return rep;
}

}  // namespace

void add_scale_fit(StatReport& report, const std::vector<double>& eps, int d,
                   const std::vector<Summary>& summaries, bool use_variance,
                   const std::string& name) {
    FitReport fr;
    fr.name = name;
    fr.x_label = use_variance ? "log E(eps)^2" : "log E(eps)";
    fr.y_label = use_variance ? "log var" : "log sd";
    bool zero = false;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        const double e = error_scale(eps[k], d);
        const double y = use_variance ? summaries[k].variance : summaries[k].sd();
        if (!(y > 0.0)) zero = true;
        fr.x.push_back(std::log(use_variance ? e * e : e));
        fr.y.push_back(std::log(y));
    }
    fr.fit = fit_line(fr.x, fr.y);
    if (zero) fr.fit.degenerate = true;
    report.scalars[name + ".slope"] = fr.fit.slope;
    report.scalars[name + ".ci_lo"] = fr.fit.ci_lo;
    report.scalars[name + ".ci_hi"] = fr.fit.ci_hi;
    report.scalars[name + ".degenerate"] = fr.fit.degenerate ? 1.0 : 0.0;
    report.fits.push_back(std::move(fr));
}

void ScalingConfig::validate() const {
    field.validate();
    check_sweep(eps, samples, "scaling");
    if (M.size() != 0) check_matrix(M, field.dimension);
}

void to_json(nlohmann::json& j, const ScalingConfig& c) {
    j = {{"field", c.field},
         {"eps", c.eps},
         {"samples", c.samples},
         {"M", matrix_json(c.M.size() ? c.M : SymMatrix::Identity(c.field.dimension, c.field.dimension))},
         {"corrector", c.corrector},
         {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, ScalingConfig& c) {
    require_keys(j, {"field", "eps", "samples", "M", "corrector", "base_seed"}, "scaling");
    c = ScalingConfig{};
    if (!j.contains("field")) throw ConfigError("scaling: missing field");
    c.field = j.at("field").get<FieldSpec>();
    if (!j.contains("eps")) throw ConfigError("scaling: missing eps");
    c.eps = eps_list(j.at("eps"), "scaling");
    c.samples = j.value("samples", c.samples);
    const int d = c.field.dimension;
    c.M = j.contains("M") ? matrix_from(j.at("M"), d, "scaling.M") : SymMatrix::Identity(d, d);
    if (j.contains("corrector")) c.corrector = j.at("corrector").get<CorrectorOptions>();
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_scaling_plan(const ScalingConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "scaling";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    plan.cells = eps_cells(config.eps, config.field.dimension);
    const int d = config.field.dimension;
    const SymMatrix M = config.M.size() ? config.M : SymMatrix::Identity(d, d);
    plan.run = [config, M](int cell, std::int64_t, std::uint64_t seed) {
        const auto lattice = sample_environment(config.field, seed);
        const MatrixField field(config.field, lattice);
        const double eps = config.eps[std::size_t(cell)];
        const CorrectorSystem sys(field, eps, config.corrector);
        const auto sol = sys.solve(M);
        return std::vector<RawRecord>{{0, 0, 0, "value", sol.center_value},
                                      {0, 0, 0, "iterations", double(sol.stats.iterations)}};
    };
    plan.summarize = [config](std::span<const RawRecord> recs) {
        return summarize_scaling(config, recs);
    };
    return plan;
}

StatReport summarize_scaling(const ScalingConfig& config, std::span<const RawRecord> records) {
    StatReport rep = base_report(config, "scaling", records);
    const int d = config.field.dimension;
    const auto cells = eps_cells(config.eps, d);
    std::vector<Summary> sums;
    for (int c = 0; c < int(cells.size()); ++c) {
        CellSummary cs{cells[std::size_t(c)].label, cells[std::size_t(c)].params, {}};
        const auto v = select(records, c, "value");
        sums.push_back(summarize(v));
        cs.quantities["value"] = sums.back();
        cs.quantities["iterations"] = summarize(select(records, c, "iterations"));
        rep.cells.push_back(std::move(cs));
    }
    add_scale_fit(rep, config.eps, d, sums, false, "sd_vs_scale");
    return rep;
}

StatReport scaling_experiment(const ScalingConfig& config, int workers) {
    return run_in_memory(make_scaling_plan(config), workers);
}

// ---------------------------------------------------------------------------

void DirichletConfig::validate() const {
    field.validate();
    if (field.dimension != 2 && field.dimension != 3)
        throw ConfigError("dirichlet: dimension must be 2 or 3");
    check_sweep(eps, samples, "dirichlet");
    if (source != "gaussian" && source != "bump")
        throw ConfigError("dirichlet: source must be 'gaussian' or 'bump'");
    if (!(source_width > 0.0) || !(domain_radius > 0.0) || !(h > 0.0) || !(solve_tol > 0.0))
        throw ConfigError("dirichlet: h, source_width, domain_radius, solve_tol must be positive");
    if ((source == "gaussian" ? 4.0 : 1.0) * source_width >= domain_radius)
        throw ConfigError("dirichlet: source support must lie inside the domain");
}

double DirichletConfig::source_value(const Point& x) const {
    const double r2 = x.squaredNorm();
    const double w2 = source_width * source_width;
    if (source == "gaussian") return r2 < 16.0 * w2 ? std::exp(-r2 / (2.0 * w2)) : 0.0;
    return r2 < w2 ? std::exp(1.0 - 1.0 / (1.0 - r2 / w2)) : 0.0;
}

void to_json(nlohmann::json& j, const DirichletConfig& c) {
    j = {{"field", c.field},           {"eps", c.eps},
         {"samples", c.samples},       {"h", c.h},
         {"source", c.source},         {"source_width", c.source_width},
         {"domain_radius", c.domain_radius}, {"solve_tol", c.solve_tol},
         {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, DirichletConfig& c) {
    require_keys(j, {"field", "eps", "samples", "h", "source", "source_width", "domain_radius",
                     "solve_tol", "base_seed"},
                 "dirichlet");
    c = DirichletConfig{};
    if (!j.contains("field")) throw ConfigError("dirichlet: missing field");
    c.field = j.at("field").get<FieldSpec>();
    if (!j.contains("eps")) throw ConfigError("dirichlet: missing eps");
    c.eps = eps_list(j.at("eps"), "dirichlet");
    c.samples = j.value("samples", c.samples);
    c.h = j.value("h", c.h);
    c.source = j.value("source", c.source);
    c.source_width = j.value("source_width", c.source_width);
    c.domain_radius = j.value("domain_radius", c.domain_radius);
    c.solve_tol = j.value("solve_tol", c.solve_tol);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_dirichlet_plan(const DirichletConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "dirichlet";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    plan.cells = eps_cells(config.eps, config.field.dimension);
    plan.run = [config](int cell, std::int64_t, std::uint64_t seed) {
        const double eps = config.eps[std::size_t(cell)];
        const double R = config.domain_radius / eps;
        const Grid grid = origin_grid(config.field.dimension, solver_radius(R + config.h, config.h),
                                      config.h);
        const auto lattice = sample_environment(config.field, seed);
        const MatrixField field(config.field, lattice);
        DiscreteOperator op = assemble(field, 0.0, grid);
        op.set_dirichlet_outside([R](const Point& y) { return y.norm() < R; });
        GridFunction rhs(grid);
        for (std::int64_t i = 0; i < grid.size(); ++i)
            if (!op.is_dirichlet(i)) rhs[i] = eps * eps * config.source_value(eps * grid.point(i));
        SolveStats stats;
        const auto u = solve(op, rhs, config.solve_tol, &stats);
        return std::vector<RawRecord>{{0, 0, 0, "value", u.at_center()},
                                      {0, 0, 0, "iterations", double(stats.iterations)}};
    };
    plan.summarize = [config](std::span<const RawRecord> recs) {
        return summarize_dirichlet(config, recs);
    };
    return plan;
}

StatReport summarize_dirichlet(const DirichletConfig& config, std::span<const RawRecord> records) {
    StatReport rep = base_report(config, "dirichlet", records);
    const int d = config.field.dimension;
    const auto cells = eps_cells(config.eps, d);
    std::vector<Summary> sums;
    for (int c = 0; c < int(cells.size()); ++c) {
        CellSummary cs{cells[std::size_t(c)].label, cells[std::size_t(c)].params, {}};
        sums.push_back(summarize(select(records, c, "value")));
        cs.quantities["value"] = sums.back();
        cs.quantities["iterations"] = summarize(select(records, c, "iterations"));
        rep.cells.push_back(std::move(cs));
    }
    add_scale_fit(rep, config.eps, d, sums, true, "variance_vs_scale2");
    // Cauchy differences of the means in sweep order, with their standard errors.
    for (std::size_t k = 0; k + 1 < sums.size(); ++k) {
        const std::string key = "cauchy." + std::to_string(k);
        rep.scalars[key] = std::abs(sums[k + 1].mean - sums[k].mean);
        rep.scalars[key + ".stderr"] = std::hypot(sums[k + 1].stderr_mean, sums[k].stderr_mean);
    }
    return rep;
}

StatReport checkerboard_dirichlet_experiment(const DirichletConfig& config, int workers) {
    return run_in_memory(make_dirichlet_plan(config), workers);
}

}  // namespace homlab
