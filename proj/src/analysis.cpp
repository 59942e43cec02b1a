#include "homlab/analysis.hpp"

#include "homlab/corrector.hpp"
#include "homlab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace homlab {

std::string to_string(FitKind k) { return k == FitKind::affine ? "affine" : "quadratic"; }

int fit_coefficients(FitKind kind, int d) {
    return 1 + d + (kind == FitKind::quadratic ? d * (d + 1) / 2 : 0);
}

double MinimaxFit::eval(const Point& x) const {
    const Point z = x - center;
    double v = constant + p.dot(z);
    if (kind == FitKind::quadratic) v += 0.5 * z.dot(Q * z);
    return v;
}

namespace {

void features(const Point& z, FitKind kind, double* phi) {
    const int d = int(z.size());
    int k = 0;
    phi[k++] = 1.0;
    for (int i = 0; i < d; ++i) phi[k++] = z[i];
    if (kind == FitKind::quadratic)
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) phi[k++] = i == j ? 0.5 * z[i] * z[i] : z[i] * z[j];
}

}  // namespace

MinimaxFit minimax_fit(std::span<const Point> xs, std::span<const double> f, const Point& center,
                       FitKind kind) {
    if (xs.size() != f.size()) throw DomainError("minimax_fit: size mismatch");
    const int d = int(center.size());
    const int m = fit_coefficients(kind, d);
    const auto n = std::int64_t(xs.size());
    if (n < m) throw DegenerateError("minimax_fit: fewer points than coefficients");

    double rho = 0.0, fscale = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        rho = std::max(rho, (xs[std::size_t(i)] - center).norm());
        fscale = std::max(fscale, std::abs(f[std::size_t(i)]));
    }
    if (rho == 0.0) rho = 1.0;
    if (fscale == 0.0) fscale = 1.0;

    Eigen::MatrixXd phi(m, n);
    Eigen::VectorXd g(n);
    for (std::int64_t i = 0; i < n; ++i) {
        features((xs[std::size_t(i)] - center) / rho, kind, phi.col(i).data());
        g[i] = f[std::size_t(i)] / fscale;
    }
    // Dual of min t s.t. |g_i - phi_i.c| <= t.
    Eigen::MatrixXd A(m + 1, 2 * n);
    A.topLeftCorner(m, n) = phi;
    A.topRightCorner(m, n) = -phi;
    A.row(m).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 1);
    b[m] = 1.0;
    Eigen::VectorXd c(2 * n);
    c.head(n) = -g;
    c.tail(n) = g;
    const LpResult lp = solve_standard_lp(A, b, c);
    if (lp.status != LpStatus::optimal) throw SolverError("minimax_fit: LP did not reach optimality", {});

    const Eigen::VectorXd coef = -lp.pi.head(m);
    const Eigen::VectorXd resid = g - phi.transpose() * coef;
    const double hi = resid.maxCoeff(), lo = resid.minCoeff();

    MinimaxFit out;
    out.kind = kind;
    out.center = center;
    out.points = n;
    out.achieved_osc = (hi - lo) * fscale;
    out.dual_bound = std::max(0.0, -2.0 * lp.objective * fscale);
    out.constant = (coef[0] + 0.5 * (hi + lo)) * fscale;
    out.p = coef.segment(1, d) * (fscale / rho);
    out.Q = SymMatrix::Zero(d, d);
    if (kind == FitKind::quadratic) {
        int k = 1 + d;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                const double v = coef[k++] * fscale / (rho * rho);
                out.Q(i, j) = v;
                out.Q(j, i) = v;
            }
    }
    return out;
}

std::vector<std::int64_t> ball_points(const Grid& grid, const Point& center, double r) {
    const int d = grid.dim();
    if (center.size() != d) throw DomainError("ball: point dimension mismatch");
    if (!(r >= 0.0)) throw DomainError("ball: negative radius");
    const double slack = 1e-9 * std::max(1.0, grid.radius());
    std::array<std::int64_t, kMaxDim> lo{}, hi{}, k{};
    for (int i = 0; i < d; ++i) {
        const double off = center[i] - grid.center()[i];
        if (std::abs(off) + r > grid.radius() + slack) throw DomainError("ball: B_r(center) leaves the grid");
        const double c = off / grid.h() + double(grid.half());
        lo[std::size_t(i)] = std::max<std::int64_t>(0, std::int64_t(std::floor(c - r / grid.h() - 1e-9)));
        hi[std::size_t(i)] = std::min<std::int64_t>(grid.n_axis() - 1, std::int64_t(std::ceil(c + r / grid.h() + 1e-9)));
        k[std::size_t(i)] = lo[std::size_t(i)];
    }
    const double r2 = r * r * (1.0 + 1e-12) + 1e-18;
    std::vector<std::int64_t> out;
    while (true) {
        const std::int64_t idx = grid.index(k.data());
        if ((grid.point(idx) - center).squaredNorm() <= r2) out.push_back(idx);
        int i = d - 1;
        while (i >= 0 && ++k[std::size_t(i)] > hi[std::size_t(i)]) {
            k[std::size_t(i)] = lo[std::size_t(i)];
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

MinimaxFit best_fit(const GridFunction& u, const Point& center, double r, FitKind kind) {
    const auto idx = ball_points(u.grid, center, r);
    std::vector<Point> xs;
    std::vector<double> f;
    xs.reserve(idx.size());
    f.reserve(idx.size());
    for (auto i : idx) {
        xs.push_back(u.grid.point(i));
        f.push_back(u[i]);
    }
    return minimax_fit(xs, f, center, kind);
}

double ball_osc(const GridFunction& u, const Point& center, double r) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto i : ball_points(u.grid, center, r)) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    return hi >= lo ? hi - lo : 0.0;
}

SeminormProfile seminorm_profile(const GridFunction& u, const Point& center, double h_floor,
                                 SeminormOrder order, double alpha, double domain_radius) {
    const Grid& grid = u.grid;
    if (!(h_floor >= grid.h() * (1.0 - 1e-12))) throw DomainError("seminorm: h_floor below the grid spacing");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("seminorm: alpha must lie in (0, 1]");
    double R = domain_radius;
    if (R <= 0.0) {
        R = grid.radius();
        for (int i = 0; i < grid.dim(); ++i) R = std::min(R, grid.radius() - std::abs(center[i] - grid.center()[i]));
    }
    SeminormProfile prof;
    double r = grid.h();
    while (r <= h_floor * (1.0 + 1e-12)) r *= 2.0;
    for (; r <= R * (1.0 + 1e-12); r *= 2.0) {
        double term;
        if (order == SeminormOrder::zeroth) term = std::pow(r, -alpha) * ball_osc(u, center, r);
        else term = std::pow(r, -1.0 - alpha) * best_fit(u, center, r, FitKind::affine).achieved_osc;
        prof.radii.push_back(r);
        prof.terms.push_back(term);
        if (prof.terms.size() == 1 || term > prof.value) {
            prof.value = term;
            prof.argmax_radius = r;
        }
    }
    if (prof.radii.empty()) throw DomainError("seminorm: no dyadic radius in (h_floor, R]");
    return prof;
}

double coarsened_seminorm(const GridFunction& u, const Point& center, double h_floor,
                          SeminormOrder order, double alpha, double domain_radius) {
    return seminorm_profile(u, center, h_floor, order, alpha, domain_radius).value;
}

void write_seminorm_csv(const SeminormProfile& prof, std::ostream& os) {
    os << "r,term\n";
    char buf[96];
    for (std::size_t k = 0; k < prof.radii.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", prof.radii[k], prof.terms[k]);
        os << buf;
    }
}

InterpolationCheck interpolation_check(const GridFunction& u, const Point& center, double h_floor,
                                       double R) {
    InterpolationCheck out;
    out.lhs = coarsened_seminorm(u, center, h_floor, SeminormOrder::zeroth, 1.0, R);
    out.c11 = coarsened_seminorm(u, center, h_floor, SeminormOrder::first, 1.0, R);
    out.osc = ball_osc(u, center, R);
    out.rhs = 14.0 * std::sqrt(out.c11) * std::sqrt(out.osc);
    out.degenerate = out.osc == 0.0 || out.c11 <= 1e-9 * out.osc / (R * R);
    out.ratio = out.degenerate ? std::numeric_limits<double>::quiet_NaN() : out.lhs / out.rhs;
    return out;
}

double CascadeTrace::min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : steps)
        for (double v : {s.margin_gh_lower, s.margin_gh_upper, s.margin_q_bound, s.margin_q_diff})
            if (!std::isnan(v)) m = std::min(m, v);
    return m;
}

CascadeTrace quadratic_cascade(const GridFunction& u, double theta, double r0, double R) {
    if (!(theta > 0.0 && theta < 0.5)) throw DomainError("cascade: theta must lie in (0, 1/2)");
    if (!(1.0 <= 4.0 * r0 && 4.0 * r0 <= R)) throw DomainError("cascade: need 1 <= 4 r0 <= R");
    if (r0 < 4.0 * u.grid.h()) throw DomainError("cascade: r0 must be at least 4 grid spacings");
    const Point& c = u.grid.center();
    ball_points(u.grid, c, R);

    CascadeTrace tr;
    tr.theta = theta;
    tr.r0 = r0;
    tr.R = R;
    std::vector<double> radii{R};
    for (double s = R / 4.0; s >= r0; s *= theta) radii.push_back(s);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double s : radii) {
        const auto q = best_fit(u, c, s, FitKind::quadratic);
        const auto l = best_fit(u, c, s, FitKind::affine);
        CascadeStep st;
        st.s = s;
        st.G = q.achieved_osc / (2.0 * s * s);
        st.H = l.achieved_osc / (2.0 * s * s);
        st.Q = q.Q;
        st.q_norm = spectral_norm(q.Q);
        st.margin_gh_lower = st.H - st.G;
        st.margin_gh_upper = st.G + 0.5 * st.q_norm - st.H;
        st.margin_q_bound = 4.0 * st.H - st.q_norm;
        st.margin_q_diff = nan;
        st.improvement = nan;
        tr.steps.push_back(st);
    }
    for (std::size_t j = 0; j + 1 < tr.steps.size(); ++j) {
        auto& a = tr.steps[j];
        const auto& b = tr.steps[j + 1];
        const double rho = b.s / a.s;
        a.margin_q_diff = (2.0 / (rho * rho)) * a.G + 2.0 * b.G - spectral_norm(b.Q - a.Q);
        a.improvement = a.G > 0.0 ? b.G / a.G : nan;
    }
    return tr;
}

void write_cascade_csv(const CascadeTrace& trace, std::ostream& os) {
    os << "j,s,G,H,q_norm,margin_gh_lower,margin_gh_upper,margin_q_bound,margin_q_diff,improvement\n";
    char buf[320];
    for (std::size_t j = 0; j < trace.steps.size(); ++j) {
        const auto& s = trace.steps[j];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", j,
                      s.s, s.G, s.H, s.q_norm, s.margin_gh_lower, s.margin_gh_upper, s.margin_q_bound,
                      s.margin_q_diff, s.improvement);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Experiments

double boundary_polynomial(const std::string& kind, const Point& x) {
    if (kind == "saddle") return 0.5 * (x[0] * x[0] - x[1] * x[1]);
    if (kind == "paraboloid") return 0.5 * x.squaredNorm();
    throw ConfigError("unknown boundary polynomial '" + kind + "'");
}

namespace {

void check_radii(const std::vector<double>& radii, double h, const std::string& where) {
    if (radii.empty()) throw ConfigError(where + ": radii list is empty");
    if (!(h == 1.0 || h == 0.5 || h == 0.25 || h == 0.125)) throw ConfigError(where + ": h must be 1, 1/2, 1/4 or 1/8");
    for (double R : radii) {
        const double k = R / h;
        if (!(R > 0.0) || std::abs(k - std::round(k)) > 1e-9) throw ConfigError(where + ": radii must be positive multiples of h");
    }
}

std::string radius_label(double R) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "R=%g", R);
    return buf;
}

/// Dirichlet problem -tr(A D^2 u) = f on the grid ball of radius R with
/// polynomial data outside.
GridFunction ball_dirichlet(DiscreteOperator op, const std::string& boundary, double f, double tol,
                            SolveStats* stats) {
    if (!op.monotone) throw NonMonotoneError("ball problem: stencil is not monotone");
    const double R = op.grid.radius();
    op.set_dirichlet_outside([R](const Point& x) { return x.norm() < R - 1e-9; });
    op.set_boundary([&boundary](const Point& x) { return boundary_polynomial(boundary, x); });
    GridFunction rhs(op.grid);
    for (std::int64_t i = 0; i < op.grid.size(); ++i)
        if (!op.is_dirichlet(i)) rhs[i] = f;
    return solve(op, rhs, tol, stats);
}

}  // namespace

void RegularityConfig::validate() const {
    field.validate();
    check_radii(radii, h, "regularity");
    if (samples < 1) throw ConfigError("regularity: need at least one sample");
    if (!(h_floor >= h)) throw ConfigError("regularity: h_floor must be at least h");
    for (double R : radii)
        if (R / 2.0 < 2.0 * h_floor) throw ConfigError("regularity: radii too small for h_floor");
    if (field.dimension < 2) throw ConfigError("regularity: dimension must be at least 2");
    boundary_polynomial(boundary, Point::Zero(field.dimension));
    if (!(tol > 0.0)) throw ConfigError("regularity: tol must be positive");
}

void to_json(nlohmann::json& j, const RegularityConfig& c) {
    j = {{"field", c.field},       {"radii", c.radii},       {"samples", c.samples},
         {"h", c.h},               {"h_floor", c.h_floor},   {"boundary", c.boundary},
         {"source", c.source},     {"tol", c.tol},           {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, RegularityConfig& c) {
    require_keys(j, {"field", "radii", "samples", "h", "h_floor", "boundary", "source", "tol", "base_seed"},
                 "regularity");
    c = RegularityConfig{};
    if (!j.contains("field")) throw ConfigError("regularity: missing field");
    c.field = j.at("field").get<FieldSpec>();
    if (j.contains("radii")) c.radii = j.at("radii").get<std::vector<double>>();
    c.samples = j.value("samples", c.samples);
    c.h = j.value("h", c.h);
    c.h_floor = j.value("h_floor", c.h_floor);
    c.boundary = j.value("boundary", c.boundary);
    c.source = j.value("source", c.source);
    c.tol = j.value("tol", c.tol);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_regularity_plan(const RegularityConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "regularity";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    for (double R : config.radii) plan.cells.push_back({radius_label(R), {{"R", R}}, -1});
    plan.run = [config](int cell, std::int64_t, std::uint64_t seed) {
        const double R = config.radii[std::size_t(cell)];
        const int d = config.field.dimension;
        const MatrixField field(config.field, sample_environment(config.field, seed));
        const Grid grid = origin_grid(d, R, config.h);
        SolveStats st;
        const GridFunction u = ball_dirichlet(assemble(field, 0.0, grid), config.boundary, config.source,
                                         config.tol, &st);
        const Point o = Point::Zero(d);
        const double c11 = coarsened_seminorm(u, o, config.h_floor, SeminormOrder::first, 1.0, R / 2.0);
        const double driver =
            std::abs(config.source) + best_fit(u, o, R, FitKind::affine).achieved_osc / (2.0 * R * R);
        const double c01 = coarsened_seminorm(u, o, config.h_floor, SeminormOrder::zeroth, 1.0, R / 2.0);
        const auto ic = interpolation_check(u, o, config.h_floor, R / 2.0);
        std::vector<double> lr, lo;
        for (double r = 2.0 * config.h_floor; r <= R / 2.0 * (1.0 + 1e-12); r *= 2.0) {
            const double osc = ball_osc(u, o, r);
            if (osc > 0.0) {
                lr.push_back(std::log(r));
                lo.push_back(std::log(osc));
            }
        }
        std::vector<RawRecord> recs{{0, 0, 0, "c11", c11},
                                    {0, 0, 0, "driver", driver},
                                    {0, 0, 0, "ratio", driver > 0.0 ? c11 / driver : 0.0},
                                    {0, 0, 0, "c01", c01}};
        if (!ic.degenerate) recs.push_back({0, 0, 0, "interp_ratio", ic.ratio});
        if (lr.size() >= 2) recs.push_back({0, 0, 0, "ks_exponent", fit_line(lr, lo).slope});
        recs.push_back({0, 0, 0, "iterations", double(st.iterations)});
        return recs;
    };
    plan.summarize = [config, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("regularity", config.base_seed, cells, recs);
        double first = 0.0, growth = 0.0, interp = 0.0;
        for (std::size_t k = 0; k < rep.cells.size(); ++k) {
            const double q90 = summary_field(rep.cells[k], "ratio", &Summary::q90, 0.0);
            rep.scalars["ratio_q90." + rep.cells[k].label] = q90;
            if (k == 0) first = q90;
            if (first > 0.0) growth = std::max(growth, q90 / first);
            interp = std::max(interp, summary_field(rep.cells[k], "interp_ratio", &Summary::max, 0.0));
        }
        rep.scalars["ratio_q90_growth"] = growth;
        rep.scalars["max_interp_ratio"] = interp;
        return rep;
    };
    return plan;
}

StatReport regularity_experiment(const RegularityConfig& config, int workers) {
    return run_in_memory(make_regularity_plan(config), workers);
}

void HomogenizationErrorConfig::validate() const {
    field.validate();
    check_radii(radii, h, "homogenization_error");
    if (samples < 1) throw ConfigError("homogenization_error: need at least one sample");
    boundary_polynomial(boundary, Point::Zero(field.dimension));
    if (ahom) {
        if (ahom->rows() != field.dimension || ahom->cols() != field.dimension)
            throw ConfigError("homogenization_error: ahom has the wrong dimension");
        Eigen::SelfAdjointEigenSolver<SymMatrix> es(*ahom, Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues().minCoeff() > 0.0)) throw ConfigError("homogenization_error: ahom must be positive definite");
    } else if (ahom_samples < 2) {
        throw ConfigError("homogenization_error: ahom estimate missing (give ahom or ahom_samples >= 2)");
    }
    if (!(tol > 0.0)) throw ConfigError("homogenization_error: tol must be positive");
}

void to_json(nlohmann::json& j, const HomogenizationErrorConfig& c) {
    j = {{"field", c.field},   {"radii", c.radii},         {"samples", c.samples},
         {"h", c.h},           {"boundary", c.boundary},   {"source", c.source},
         {"ahom_eps", c.ahom_eps}, {"ahom_samples", c.ahom_samples},
         {"tol", c.tol},       {"base_seed", c.base_seed}};
    if (c.ahom) j["ahom"] = matrix_json(*c.ahom);
}

void from_json(const nlohmann::json& j, HomogenizationErrorConfig& c) {
    require_keys(j, {"field", "radii", "samples", "h", "boundary", "source", "ahom", "ahom_eps",
                     "ahom_samples", "tol", "base_seed"},
                 "homogenization_error");
    c = HomogenizationErrorConfig{};
    if (!j.contains("field")) throw ConfigError("homogenization_error: missing field");
    c.field = j.at("field").get<FieldSpec>();
    if (j.contains("radii")) c.radii = j.at("radii").get<std::vector<double>>();
    c.samples = j.value("samples", c.samples);
    c.h = j.value("h", c.h);
    c.boundary = j.value("boundary", c.boundary);
    c.source = j.value("source", c.source);
    if (j.contains("ahom")) c.ahom = matrix_from(j.at("ahom"), c.field.dimension, "homogenization_error.ahom");
    c.ahom_eps = j.value("ahom_eps", c.ahom_eps);
    c.ahom_samples = j.value("ahom_samples", c.ahom_samples);
    c.tol = j.value("tol", c.tol);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_homogenization_error_plan(const HomogenizationErrorConfig& config) {
    config.validate();
    SymMatrix ahom;
    if (config.ahom) {
        ahom = *config.ahom;
    } else {
        CorrectorOptions o;
        o.h = config.h;
        o.box_factor = 4.0;
        ahom = ahom_estimate(config.field, config.ahom_eps, config.ahom_samples, config.base_seed, o).matrix;
    }
    ExperimentPlan plan;
    plan.kind = "homogenization_error";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    for (double R : config.radii) plan.cells.push_back({radius_label(R), {{"R", R}}, -1});
    plan.run = [config, ahom](int cell, std::int64_t, std::uint64_t seed) {
        const double R = config.radii[std::size_t(cell)];
        const int d = config.field.dimension;
        const MatrixField field(config.field, sample_environment(config.field, seed));
        const Grid grid = origin_grid(d, R, config.h);
        bool cross = false;
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) cross = cross || (i != k && ahom(i, k) != 0.0);
        SolveStats su, sv;
        const GridFunction u = ball_dirichlet(assemble(field, 0.0, grid), config.boundary, config.source, config.tol, &su);
        const GridFunction v = ball_dirichlet(assemble([&ahom](const Point&) { return ahom; }, d, cross, 0.0, grid),
                                              config.boundary, config.source, config.tol, &sv);
        double err = 0.0;
        for (std::int64_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(u[i] - v[i]));
        return std::vector<RawRecord>{{0, 0, 0, "error", err / (R * R)},
                                      {0, 0, 0, "iterations", double(su.iterations)}};
    };
    plan.summarize = [config, ahom, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("homogenization_error", config.base_seed, cells, recs);
        FitReport fr;
        fr.name = "error_vs_R";
        fr.x_label = "log R";
        fr.y_label = "log error";
        bool tiny = true;
        for (const auto& r : recs) {
            if (r.quantity != "error") continue;
            if (r.value > 1e-8) tiny = false;
            if (!(r.value > 0.0)) continue;
            fr.x.push_back(std::log(config.radii[std::size_t(r.cell)]));
            fr.y.push_back(std::log(r.value));
        }
        fr.fit = fit_line(fr.x, fr.y);
        if (tiny) fr.fit.degenerate = true;
        rep.scalars["alpha_hat"] = -fr.fit.slope;
        rep.scalars["alpha_ci_lo"] = -fr.fit.ci_hi;
        rep.scalars["alpha_ci_hi"] = -fr.fit.ci_lo;
        rep.scalars["rate_degenerate"] = fr.fit.degenerate ? 1.0 : 0.0;
        bool mono = true;
        for (std::size_t k = 1; k < rep.cells.size(); ++k)
            mono = mono && summary_field(rep.cells[k], "error", &Summary::mean, 0.0) <
                               summary_field(rep.cells[k - 1], "error", &Summary::mean, 0.0);
        rep.scalars["monotone_decrease"] = mono ? 1.0 : 0.0;
        for (int i = 0; i < ahom.rows(); ++i)
            for (int k = i; k < ahom.cols(); ++k)
                rep.scalars["ahom." + std::to_string(i) + std::to_string(k)] = ahom(i, k);
        rep.fits.push_back(std::move(fr));
        return rep;
    };
    return plan;
}

StatReport homogenization_error_experiment(const HomogenizationErrorConfig& config, int workers) {
    return run_in_memory(make_homogenization_error_plan(config), workers);
}

}  // namespace homlab
