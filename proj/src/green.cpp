#include "homlab/green.hpp"

#include "homlab/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace homlab {

BarrierParams BarrierParams::make(double lambda, double Lambda, double ell, int d, double alpha) {
    if (!(lambda > 0.0) || !(Lambda >= lambda)) throw DomainError("barrier: need 0 < lambda <= Lambda");
    if (!(ell > 0.0)) throw DomainError("barrier: ell must be positive");
    if (d < 2) throw DomainError("barrier: dimension must be at least 2");
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("barrier: alpha must lie in (0, 2)");
    BarrierParams p;
    p.lambda = lambda;
    p.Lambda = Lambda;
    p.ell = ell;
    p.d = d;
    p.alpha = alpha;
    p.a = 1.0 / std::sqrt(2.0 * Lambda);
    p.beta = alpha / 2.0;
    p.gamma = std::max(0.5, 1.0 - lambda / (2.0 * Lambda));
    p.h_coef = (2.0 / lambda) * std::pow(2.0 * ell, 2.0 - p.gamma);
    return p;
}

BarrierParams BarrierParams::from_field(const FieldSpec& spec, double alpha) {
    return make(spec.lambda, spec.Lambda, spec.effective_range(), spec.dimension, alpha);
}

double BarrierParams::k_R(double R) const {
    const double t = std::pow(2.0, beta) * std::pow(R, -beta);
    if (d >= 3) {
        const double den = double(d) - 2.0 - t;
        if (!(den > 0.0)) throw DomainError("barrier: R too small for k_R");
        return h_coef / den * std::pow(R, double(d) - 2.0 + gamma) * std::exp(t / beta);
    }
    return 2.0 * h_coef * std::exp(t / beta) * std::pow(R, gamma);
}

namespace {

double inner_piece(const BarrierParams& p, double r) {
    return (p.h_coef / p.gamma) * std::pow(p.ell * p.ell + r * r, p.gamma / 2.0);
}

double cutoff(const BarrierParams& p, double r) { return std::exp(-std::pow(r, -p.beta) / p.beta); }

/// k_R r^(2-d) exp(-r^-b / b), d >= 3
double outer_d3(const BarrierParams& p, double R, double r) {
    if (r <= 0.0) return 0.0;
    return p.k_R(R) * std::pow(r, 2.0 - double(p.d)) * cutoff(p, r);
}

/// k_R (e^a / a + |log eps| - log r) exp(-r^-b / b), d = 2
double middle_d2(const BarrierParams& p, double R, double eps, double r) {
    if (r <= 0.0) return 0.0;
    return p.k_R(R) * (std::exp(p.a) / p.a + std::abs(std::log(eps)) - std::log(r)) * cutoff(p, r);
}

double outer_d2(const BarrierParams& p, double R, double eps, double r) {
    return p.b_R_eps(R, eps) * std::exp(-p.a * eps * r);
}

void check_kind(BarrierKind kind, double R, double eps, const BarrierParams& p) {
    const bool two = kind == BarrierKind::phi_R_eps || kind == BarrierKind::psi_R_eps;
    if (two && p.d != 2) throw DomainError("barrier: the eps kinds are two-dimensional");
    if (!two && p.d < 3) throw DomainError("barrier: phi_R and psi_R need d >= 3");
    if (!(R >= 4.0 * p.ell)) throw DomainError("barrier: R must be at least 4 ell");
    if (two) {
        if (!(eps > 0.0 && eps <= 0.5)) throw DomainError("barrier: eps must lie in (0, 1/2]");
        if (R > 1.0 / eps) throw DomainError("barrier: R must not exceed 1/eps");
    }
}

}  // namespace

double BarrierParams::m_R(double R) const {
    return inner_piece(*this, R) + outer_d3(*this, R, R);
}

double BarrierParams::m_R_eps(double R, double eps) const {
    return inner_piece(*this, R) + middle_d2(*this, R, eps, R);
}

double BarrierParams::b_R_eps(double R, double eps) const {
    return k_R(R) / a * std::exp(2.0 * a - std::pow(eps, beta) / beta);
}

void to_json(nlohmann::json& j, const BarrierParams& p) {
    j = {{"lambda", p.lambda}, {"Lambda", p.Lambda}, {"ell", p.ell},   {"d", p.d},
         {"alpha", p.alpha},   {"a", p.a},           {"beta", p.beta}, {"gamma", p.gamma},
         {"h", p.h_coef}};
}

double deterministic_tail_bound(double eps, const Point& x, const Point& y, const BarrierParams& p) {
    if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("tail bound: eps must lie in (0, 1]");
    return std::exp(p.a * p.ell) / (eps * eps) * std::exp(-eps * p.a * (x - y).norm());
}

double envelope_xi(double eps, double r, int d, double a) {
    if (d < 2) throw DomainError("envelope_xi: dimension must be at least 2");
    if (!(r >= 0.0) || !(eps > 0.0)) throw DomainError("envelope_xi: need r >= 0, eps > 0");
    const double screen = std::exp(-a * eps * r);
    if (d == 2) return screen * std::log(2.0 + 1.0 / (eps * (1.0 + r)));
    return screen * std::pow(1.0 + r, 2.0 - double(d));
}

std::string to_string(BarrierKind k) {
    switch (k) {
        case BarrierKind::phi_R: return "phi_R";
        case BarrierKind::psi_R: return "psi_R";
        case BarrierKind::phi_R_eps: return "phi_R_eps";
        case BarrierKind::psi_R_eps: return "psi_R_eps";
    }
    return "?";
}

BarrierKind barrier_kind_from_string(const std::string& s) {
    for (auto k : {BarrierKind::phi_R, BarrierKind::psi_R, BarrierKind::phi_R_eps, BarrierKind::psi_R_eps})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown barrier kind '" + s + "'");
}

double barrier_radial(BarrierKind kind, double R, double eps, double r, const BarrierParams& p) {
    check_kind(kind, R, eps, p);
    if (r < 0.0) throw DomainError("barrier: negative radius");
    switch (kind) {
        case BarrierKind::phi_R:
            return r <= R ? p.m_R(R) - inner_piece(p, r) : outer_d3(p, R, r);
        case BarrierKind::psi_R: return outer_d3(p, R, r);
        case BarrierKind::phi_R_eps:
            if (r <= R) return p.m_R_eps(R, eps) - inner_piece(p, r);
            if (r <= 1.0 / eps) return middle_d2(p, R, eps, r);
            return outer_d2(p, R, eps, r);
        case BarrierKind::psi_R_eps: return middle_d2(p, R, eps, r);
    }
    return 0.0;
}

double barrier_value(BarrierKind kind, double R, double eps, const Point& x, const BarrierParams& p) {
    if (x.size() != p.d) throw DomainError("barrier: point dimension mismatch");
    return barrier_radial(kind, R, eps, x.norm(), p);
}

std::vector<double> barrier_interfaces(BarrierKind kind, double R, double eps) {
    switch (kind) {
        case BarrierKind::phi_R: return {R};
        case BarrierKind::phi_R_eps: return R < 1.0 / eps ? std::vector<double>{R, 1.0 / eps} : std::vector<double>{R};
        default: return {};
    }
}

double barrier_continuity_gap(BarrierKind kind, double R, double eps, const BarrierParams& p) {
    check_kind(kind, R, eps, p);
    if (kind == BarrierKind::phi_R)
        return std::abs((p.m_R(R) - inner_piece(p, R)) - outer_d3(p, R, R));
    if (kind == BarrierKind::phi_R_eps) {
        double gap = std::abs((p.m_R_eps(R, eps) - inner_piece(p, R)) - middle_d2(p, R, eps, R));
        const double re = 1.0 / eps;
        // At R = 1/eps the middle piece is empty and the inner piece meets the outer one.
        const double left = R < re ? middle_d2(p, R, eps, re) : p.m_R_eps(R, eps) - inner_piece(p, re);
        gap = std::max(gap, std::abs(left - outer_d2(p, R, eps, re)));
        return gap;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

namespace {

double grid_radius_for(double r, double h) { return std::ceil(r / h - 1e-9) * h; }

}  // namespace

SupersolutionReport verify_supersolution(BarrierKind kind, double R, double eps,
                                         const MatrixField& field, const RadialRegion& region,
                                         double h, const BarrierParams& p) {
    check_kind(kind, R, eps, p);
    if (field.dim() != p.d) throw DomainError("verify_supersolution: dimension mismatch");
    const bool psi = kind == BarrierKind::psi_R || kind == BarrierKind::psi_R_eps;
    double r_min = region.r_min, r_max = region.r_max;
    if (!std::isfinite(r_max)) {
        if (kind == BarrierKind::psi_R) r_max = 2.0 * R;
        else if (kind == BarrierKind::psi_R_eps) r_max = 2.0 / eps;
        else r_max = R;
    }
    if (psi && region.r_min == 0.0) r_min = R / 2.0;
    if (!(r_max > r_min)) throw DomainError("verify_supersolution: empty region");

    const Grid grid = origin_grid(p.d, grid_radius_for(r_max + 2.0 * h, h), h);
    GridFunction phi(grid, [&](const Point& x) { return barrier_value(kind, R, eps, x, p); });
    DiscreteOperator op =
        psi ? assemble([d = p.d](const Point&) { return SymMatrix(SymMatrix::Identity(d, d)); }, p.d,
                       false, 0.0, grid)
            : assemble(field, 0.0, grid);
    const GridFunction L = apply(op, phi);
    const auto faces = barrier_interfaces(kind, R, eps);

    SupersolutionReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        if (op.is_dirichlet(i)) continue;
        const Point x = grid.point(i);
        const double r = x.norm();
        if (r < r_min || r > r_max) continue;
        bool near = false;
        for (double f : faces) near = near || std::abs(r - f) < 2.0 * h;
        if (near) continue;
        double m;
        if (psi) {
            if (r == 0.0 || phi[i] <= 0.0) continue;
            m = L[i] / (std::pow(r, -2.0 - p.beta) * phi[i]);
        } else {
            double v = L[i];
            if (kind == BarrierKind::phi_R_eps && r > 1.0 / eps) v += eps * eps * phi[i];
            m = v - (r < p.ell ? 1.0 : 0.0);
        }
        ++rep.checked;
        if (m < rep.min_margin) {
            rep.min_margin = m;
            rep.witness = x;
        }
    }
    if (rep.checked == 0) throw DomainError("verify_supersolution: no grid points in the region");
    return rep;
}

GridFunction modified_green(const MatrixField& field, double eps, const Point& y, double box_radius,
                            double h, double tol, SolveStats* stats) {
    if (!(eps > 0.0)) throw DomainError("modified_green: eps must be positive");
    if (y.size() != field.dim()) throw DomainError("modified_green: point dimension mismatch");
    const double ell = field.effective_range();
    if (!(box_radius >= 2.0 * ell)) throw DomainError("modified_green: box radius must be at least 2 ell");
    const Grid grid(y, solver_radius(box_radius, h), h);
    const DiscreteOperator op = assemble(field, eps, grid);
    if (!op.monotone) throw NonMonotoneError("modified_green: stencil is not monotone");
    GridFunction rhs(grid);
    for (std::int64_t i = 0; i < grid.size(); ++i)
        if (!op.is_dirichlet(i) && (grid.point(i) - y).norm() < ell) rhs[i] = 1.0;
    return solve(op, rhs, tol, stats);
}

GridFunction invariant_measure(const MatrixField& field, double eps, double box_radius, double h,
                               double tol, SolveStats* stats) {
    if (!(eps > 0.0)) throw DomainError("invariant_measure: eps must be positive");
    const Grid grid = origin_grid(field.dim(), solver_radius(box_radius, h), h);
    const DiscreteOperator op = assemble(field, eps, grid);
    if (!op.monotone) throw NonMonotoneError("invariant_measure: stencil is not monotone");
    GridFunction rhs(grid);
    for (std::int64_t i = 0; i < grid.size(); ++i)
        if (!op.is_dirichlet(i)) rhs[i] = eps * eps;
    return adjoint_solve(op, rhs, tol, stats);
}

DualityCheck green_duality(const MatrixField& field, double eps, double box_radius, double h,
                           double tol) {
    const int d = field.dim();
    const GridFunction G = modified_green(field, eps, Point::Zero(d), box_radius, h, tol);
    const GridFunction m = invariant_measure(field, eps, box_radius, h, tol);
    const Grid& grid = G.grid;
    const double ell = field.effective_range();
    const double vol = std::pow(h, d);
    DualityCheck out;
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        if (grid.on_boundary(i)) continue;
        if (grid.point(i).norm() < ell) out.measure_mass += m[i] * vol;
        out.green_mass += eps * eps * G[i] * vol;
    }
    const double scale = std::max(std::abs(out.measure_mass), std::abs(out.green_mass));
    out.relative_gap = scale > 0.0 ? std::abs(out.measure_mass - out.green_mass) / scale : 0.0;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<ShellStat> shell_profile(const GridFunction& g, double bin) {
    const Grid& grid = g.grid;
    if (bin <= 0.0) bin = grid.h();
    std::map<std::int64_t, ShellStat> acc;
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        const double r = (grid.point(i) - grid.center()).norm();
        const auto k = static_cast<std::int64_t>(std::llround(r / bin));
        auto [it, fresh] = acc.try_emplace(k);
        ShellStat& s = it->second;
        if (fresh) {
            s.min = g[i];
            s.max = g[i];
        }
        s.r += r;
        s.mean += g[i];
        s.min = std::min(s.min, g[i]);
        s.max = std::max(s.max, g[i]);
        ++s.count;
    }
    std::vector<ShellStat> out;
    for (auto& [k, s] : acc) {
        s.r /= double(s.count);
        s.mean /= double(s.count);
        out.push_back(s);
    }
    return out;
}

void write_shell_csv(const std::vector<ShellStat>& shells, std::ostream& os) {
    os << "r,mean,min,max,count\n";
    char buf[160];
    for (const auto& s : shells) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%lld\n", s.r, s.mean, s.min, s.max,
                      static_cast<long long>(s.count));
        os << buf;
    }
}

double oscillation(const GridFunction& g, const Point& x, double radius) {
    const Grid& grid = g.grid;
    const int d = grid.dim();
    std::array<std::int64_t, kMaxDim> lo{}, hi{}, k{};
    for (int i = 0; i < d; ++i) {
        const double c = (x[i] - grid.center()[i]) / grid.h() + double(grid.half());
        lo[std::size_t(i)] = std::max<std::int64_t>(0, std::int64_t(std::floor(c - radius / grid.h())));
        hi[std::size_t(i)] = std::min<std::int64_t>(grid.n_axis() - 1, std::int64_t(std::ceil(c + radius / grid.h())));
        if (lo[std::size_t(i)] > hi[std::size_t(i)]) return 0.0;
        k[std::size_t(i)] = lo[std::size_t(i)];
    }
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    while (true) {
        const std::int64_t idx = grid.index(k.data());
        if ((grid.point(idx) - x).norm() <= radius) {
            mn = std::min(mn, g[idx]);
            mx = std::max(mx, g[idx]);
        }
        int i = d - 1;
        while (i >= 0 && ++k[std::size_t(i)] > hi[std::size_t(i)]) {
            k[std::size_t(i)] = lo[std::size_t(i)];
            --i;
        }
        if (i < 0) break;
    }
    return mx >= mn ? mx - mn : 0.0;
}

std::string to_string(DecayFitMode m) {
    switch (m) {
        case DecayFitMode::power: return "power";
        case DecayFitMode::derivative: return "derivative";
        case DecayFitMode::screened: return "screened";
    }
    return "?";
}

DecayFitMode decay_fit_mode_from_string(const std::string& s) {
    for (auto m : {DecayFitMode::power, DecayFitMode::derivative, DecayFitMode::screened})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown decay fit mode '" + s + "'");
}

DecayFit decay_exponent_fit(const std::vector<ShellStat>& shells, double r_min, double r_max,
                            DecayFitMode mode) {
    if (!(r_max > r_min) || r_min < 0.0) throw DomainError("decay fit: empty annulus");
    std::vector<ShellStat> in;
    for (const auto& s : shells)
        if (s.r >= r_min && s.r <= r_max) in.push_back(s);
    if (in.size() < 3) throw DomainError("decay fit: fewer than 3 shells in the annulus");
    DecayFit out;
    std::vector<double> x, y, rr;
    if (mode == DecayFitMode::derivative) {
        for (std::size_t k = 0; k + 1 < in.size(); ++k) {
            const double dr = in[k + 1].r - in[k].r;
            const double dg = (in[k + 1].mean - in[k].mean) / dr;
            if (dg == 0.0 || !std::isfinite(dg)) continue;
            x.push_back(std::log(0.5 * (in[k].r + in[k + 1].r)));
            y.push_back(std::log(std::abs(dg)));
        }
    } else {
        for (const auto& s : in) {
            if (!(s.mean > 0.0) || !(s.r > 0.0)) continue;
            x.push_back(std::log(s.r));
            y.push_back(std::log(s.mean));
            rr.push_back(s.r);
        }
    }
    out.shells = std::int64_t(in.size());
    if (mode == DecayFitMode::screened) {
        std::vector<std::vector<double>> cols{std::vector<double>(x.size(), 1.0), x, rr};
        const auto mf = fit_multi(cols, y);
        out.degenerate = mf.degenerate;
        if (!mf.degenerate) {
            out.gamma_hat = -mf.beta[1];
            out.kappa = -mf.beta[2];
            out.ci_lo = out.gamma_hat - mf.t_quantile * mf.se[1];
            out.ci_hi = out.gamma_hat + mf.t_quantile * mf.se[1];
        }
    } else {
        const auto f = fit_line(x, y);
        out.degenerate = f.degenerate;
        const double shift = mode == DecayFitMode::derivative ? 1.0 : 0.0;
        out.gamma_hat = -f.slope - shift;
        out.ci_lo = -f.ci_hi - shift;
        out.ci_hi = -f.ci_lo - shift;
    }
    out.slope = -out.gamma_hat;
    return out;
}

DecayFit decay_exponent_fit(const GridFunction& g, double r_min, double r_max, DecayFitMode mode) {
    if (!(r_max < g.grid.radius() / 2.0)) throw DomainError("decay fit: r_max must be below half the box radius");
    return decay_exponent_fit(shell_profile(g), r_min, r_max, mode);
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

void add_profile(std::vector<RawRecord>& recs, const GridFunction& G, double r_max) {
    const auto shells = shell_profile(G);
    for (std::size_t k = 0; k < shells.size(); ++k) {
        if (shells[k].r > r_max) break;
        recs.push_back({0, 0, 0, "shell_r." + std::to_string(k), shells[k].r});
        recs.push_back({0, 0, 0, "shell." + std::to_string(k), shells[k].mean});
    }
}

}  // namespace

void GreenTailConfig::validate() const {
    field.validate();
    if (eps.empty()) throw ConfigError("green_tail: eps list is empty");
    for (double e : eps)
        if (!(e > 0.0 && e <= 1.0)) throw ConfigError("green_tail: eps must lie in (0, 1]");
    if (samples < 1) throw ConfigError("green_tail: need at least one sample");
    if (!(box_factor > 0.0) || !(tol > 0.0)) throw ConfigError("green_tail: box_factor, tol must be positive");
}

void to_json(nlohmann::json& j, const GreenTailConfig& c) {
    j = {{"field", c.field}, {"eps", c.eps}, {"samples", c.samples}, {"box_factor", c.box_factor},
         {"h", c.h},         {"tol", c.tol}, {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, GreenTailConfig& c) {
    require_keys(j, {"field", "eps", "samples", "box_factor", "h", "tol", "base_seed"}, "green_tail");
    c = GreenTailConfig{};
    if (!j.contains("field")) throw ConfigError("green_tail: missing field");
    c.field = j.at("field").get<FieldSpec>();
    if (j.contains("eps")) c.eps = j.at("eps").get<std::vector<double>>();
    c.samples = j.value("samples", c.samples);
    c.box_factor = j.value("box_factor", c.box_factor);
    c.h = j.value("h", c.h);
    c.tol = j.value("tol", c.tol);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_green_tail_plan(const GreenTailConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "green_tail";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    const double ell = config.field.effective_range();
    std::vector<double> radius;
    for (double e : config.eps) {
        const double R = std::max(config.box_factor / e, 2.0 * ell);
        radius.push_back(R);
        plan.cells.push_back({"eps=" + std::to_string(e), {{"eps", e}, {"box_radius", R}}, -1});
    }
    plan.run = [config, radius](int cell, std::int64_t, std::uint64_t seed) {
        const double eps = config.eps[std::size_t(cell)];
        const MatrixField field(config.field, sample_environment(config.field, seed));
        const auto p = BarrierParams::from_field(config.field);
        const int d = config.field.dimension;
        const Point y = Point::Zero(d);
        SolveStats st;
        const auto G = modified_green(field, eps, y, radius[std::size_t(cell)], config.h, config.tol, &st);
        double ratio = 0.0, violations = 0.0, gmin = 0.0;
        for (std::int64_t i = 0; i < G.grid.size(); ++i) {
            const double b = deterministic_tail_bound(eps, G.grid.point(i), y, p);
            ratio = std::max(ratio, G[i] / b);
            if (G[i] > b + 10.0 * config.tol) violations += 1.0;
            gmin = std::min(gmin, G[i]);
        }
        return std::vector<RawRecord>{{0, 0, 0, "max_ratio", ratio},
                                      {0, 0, 0, "violations", violations},
                                      {0, 0, 0, "min_value", gmin},
                                      {0, 0, 0, "center_value", G.at_center()},
                                      {0, 0, 0, "iterations", double(st.iterations)}};
    };
    plan.summarize = [config, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("green_tail", config.base_seed, cells, recs);
        double total = 0.0, worst = 0.0;
        for (const auto& c : rep.cells) {
            const auto it = c.quantities.find("violations");
            if (it != c.quantities.end()) total += it->second.mean * double(it->second.n);
            worst = std::max(worst, summary_field(c, "max_ratio", &Summary::max, 0.0));
        }
        rep.scalars["total_violations"] = total;
        rep.scalars["max_ratio"] = worst;
        return rep;
    };
    return plan;
}

void GreenDecayConfig::validate() const {
    field.validate();
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("green_decay: eps must lie in (0, 1]");
    if (samples < 1) throw ConfigError("green_decay: need at least one sample");
    if (!(r_max > r_min) || r_min < 0.0) throw ConfigError("green_decay: empty annulus");
    if (!(r_max < box_radius / 2.0)) throw ConfigError("green_decay: r_max must be below box_radius / 2");
    if (!(tol > 0.0) || !(band > 0.0)) throw ConfigError("green_decay: tol, band must be positive");
}

void to_json(nlohmann::json& j, const GreenDecayConfig& c) {
    j = {{"field", c.field}, {"eps", c.eps},       {"samples", c.samples},
         {"box_radius", c.box_radius}, {"h", c.h}, {"r_min", c.r_min},
         {"r_max", c.r_max}, {"mode", to_string(c.mode)}, {"tol", c.tol},
         {"band", c.band},   {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, GreenDecayConfig& c) {
    require_keys(j, {"field", "eps", "samples", "box_radius", "h", "r_min", "r_max", "mode", "tol",
                     "band", "base_seed"},
                 "green_decay");
    c = GreenDecayConfig{};
    if (!j.contains("field")) throw ConfigError("green_decay: missing field");
    c.field = j.at("field").get<FieldSpec>();
    c.eps = j.value("eps", c.eps);
    c.samples = j.value("samples", c.samples);
    c.box_radius = j.value("box_radius", c.box_radius);
    c.h = j.value("h", c.h);
    c.r_min = j.value("r_min", c.r_min);
    c.r_max = j.value("r_max", c.r_max);
    if (j.contains("mode")) c.mode = decay_fit_mode_from_string(j.at("mode").get<std::string>());
    c.tol = j.value("tol", c.tol);
    c.band = j.value("band", c.band);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_green_decay_plan(const GreenDecayConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "green_decay";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    const double target = 2.0 - double(config.field.dimension);
    plan.cells.push_back({"eps=" + std::to_string(config.eps), {{"eps", config.eps}, {"target_slope", target}}, -1});
    plan.run = [config, target](int, std::int64_t, std::uint64_t seed) {
        const MatrixField field(config.field, sample_environment(config.field, seed));
        SolveStats st;
        const auto G = modified_green(field, config.eps, Point::Zero(config.field.dimension),
                                      config.box_radius, config.h, config.tol, &st);
        const auto fit = decay_exponent_fit(G, config.r_min, config.r_max, config.mode);
        std::vector<RawRecord> recs{
            {0, 0, 0, "slope", fit.slope},
            {0, 0, 0, "gamma_hat", fit.gamma_hat},
            {0, 0, 0, "ci_lo", fit.ci_lo},
            {0, 0, 0, "ci_hi", fit.ci_hi},
            {0, 0, 0, "kappa", fit.kappa},
            {0, 0, 0, "in_band", std::abs(fit.slope - target) <= config.band ? 1.0 : 0.0},
            {0, 0, 0, "iterations", double(st.iterations)}};
        add_profile(recs, G, config.r_max);
        return recs;
    };
    plan.summarize = [config, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("green_decay", config.base_seed, cells, recs);
        rep.scalars["fraction_in_band"] = summary_field(rep.cells[0], "in_band", &Summary::mean, 0.0);
        rep.scalars["median_slope"] = summary_field(rep.cells[0], "slope", &Summary::q50, 0.0);
        return rep;
    };
    return plan;
}

void CounterexampleConfig::validate() const {
    if (dimension < 2 || dimension > kMaxDim) throw ConfigError("counterexample: bad dimension");
    if (!(Lambda >= 1.0)) throw ConfigError("counterexample: Lambda must be at least 1");
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("counterexample: eps must lie in (0, 1]");
    if (!(r_max > r_min) || r_min < 0.0) throw ConfigError("counterexample: empty annulus");
    if (!(r_max < box_radius / 2.0)) throw ConfigError("counterexample: r_max must be below box_radius / 2");
}

double CounterexampleConfig::predicted_gamma() const {
    const double dm1 = double(dimension - 1);
    return variant == RadialVariant::A1 ? dm1 / Lambda - 1.0 : Lambda * dm1 - 1.0;
}

void to_json(nlohmann::json& j, const CounterexampleConfig& c) {
    j = {{"dimension", c.dimension}, {"Lambda", c.Lambda},
         {"variant", c.variant == RadialVariant::A1 ? "A1" : "A2"},
         {"eps", c.eps},             {"box_radius", c.box_radius},
         {"h", c.h},                 {"r_min", c.r_min},
         {"r_max", c.r_max},         {"mode", to_string(c.mode)},
         {"tol", c.tol}};
}

void from_json(const nlohmann::json& j, CounterexampleConfig& c) {
    require_keys(j, {"dimension", "Lambda", "variant", "eps", "box_radius", "h", "r_min", "r_max",
                     "mode", "tol"},
                 "counterexample");
    c = CounterexampleConfig{};
    c.dimension = j.value("dimension", c.dimension);
    c.Lambda = j.value("Lambda", c.Lambda);
    if (j.contains("variant")) {
        const auto v = j.at("variant").get<std::string>();
        if (v != "A1" && v != "A2") throw ConfigError("counterexample: variant must be A1 or A2");
        c.variant = v == "A1" ? RadialVariant::A1 : RadialVariant::A2;
    }
    c.eps = j.value("eps", c.eps);
    c.box_radius = j.value("box_radius", c.box_radius);
    c.h = j.value("h", c.h);
    c.r_min = j.value("r_min", c.r_min);
    c.r_max = j.value("r_max", c.r_max);
    if (j.contains("mode")) c.mode = decay_fit_mode_from_string(j.at("mode").get<std::string>());
    c.tol = j.value("tol", c.tol);
    c.validate();
}

ExperimentPlan make_counterexample_plan(const CounterexampleConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "counterexample";
    plan.samples = 1;
    plan.cells.push_back({config.variant == RadialVariant::A1 ? "A1" : "A2",
                          {{"Lambda", config.Lambda}, {"predicted_gamma", config.predicted_gamma()}},
                          -1});
    plan.run = [config](int, std::int64_t, std::uint64_t) {
        const auto spec = FieldSpec::radial(config.dimension, config.variant, config.Lambda);
        const MatrixField field(spec, sample_environment(spec, 0));
        SolveStats st;
        const auto G = modified_green(field, config.eps, Point::Zero(config.dimension),
                                      config.box_radius, config.h, config.tol, &st);
        const auto fit = decay_exponent_fit(G, config.r_min, config.r_max, config.mode);
        std::vector<RawRecord> recs{{0, 0, 0, "gamma_hat", fit.gamma_hat},
                                    {0, 0, 0, "ci_lo", fit.ci_lo},
                                    {0, 0, 0, "ci_hi", fit.ci_hi},
                                    {0, 0, 0, "iterations", double(st.iterations)}};
        add_profile(recs, G, config.r_max);
        return recs;
    };
    plan.summarize = [config, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("counterexample", 0, cells, recs);
        const double g = summary_field(rep.cells[0], "gamma_hat", &Summary::mean, 0.0);
        rep.scalars["gamma_hat"] = g;
        rep.scalars["predicted_gamma"] = config.predicted_gamma();
        rep.scalars["deviation"] = g - config.predicted_gamma();
        return rep;
    };
    return plan;
}

void BarrierAuditConfig::validate() const {
    field.validate();
    if (samples < 1) throw ConfigError("barrier_audit: need at least one sample");
    if (!(R_factor >= 4.0)) throw ConfigError("barrier_audit: R_factor must be at least 4");
    if (field.dimension == 2 && !(eps > 0.0 && eps <= 0.5))
        throw ConfigError("barrier_audit: d = 2 needs eps in (0, 1/2]");
}

BarrierKind BarrierAuditConfig::kind() const {
    return field.dimension == 2 ? BarrierKind::phi_R_eps : BarrierKind::phi_R;
}

void to_json(nlohmann::json& j, const BarrierAuditConfig& c) {
    j = {{"field", c.field}, {"samples", c.samples}, {"R_factor", c.R_factor}, {"eps", c.eps},
         {"h", c.h},         {"alpha", c.alpha},     {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, BarrierAuditConfig& c) {
    require_keys(j, {"field", "samples", "R_factor", "eps", "h", "alpha", "base_seed"}, "barrier_audit");
    c = BarrierAuditConfig{};
    if (!j.contains("field")) throw ConfigError("barrier_audit: missing field");
    c.field = j.at("field").get<FieldSpec>();
    c.samples = j.value("samples", c.samples);
    c.R_factor = j.value("R_factor", c.R_factor);
    c.eps = j.value("eps", c.eps);
    c.h = j.value("h", c.h);
    c.alpha = j.value("alpha", c.alpha);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_barrier_audit_plan(const BarrierAuditConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "barrier_audit";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    const auto p = BarrierParams::make(config.field.lambda, config.field.Lambda,
                                       config.field.effective_range(), config.field.dimension,
                                       config.alpha);
    const double R = config.R_factor * p.ell;
    plan.cells.push_back({"identity", {{"R", R}}, 1});
    plan.cells.push_back({"random", {{"R", R}}, -1});
    plan.run = [config, p, R](int cell, std::int64_t, std::uint64_t seed) {
        const int d = config.field.dimension;
        const FieldSpec spec = cell == 0 ? FieldSpec::constant(d, 1.0) : config.field;
        const MatrixField field(spec, sample_environment(spec, seed));
        const double eps = d == 2 ? config.eps : 0.0;
        const auto rep = verify_supersolution(config.kind(), R, eps, field, RadialRegion{}, config.h, p);
        return std::vector<RawRecord>{
            {0, 0, 0, "min_margin", rep.min_margin},
            {0, 0, 0, "witness_r", rep.witness.norm()},
            {0, 0, 0, "continuity_gap", barrier_continuity_gap(config.kind(), R, eps, p)}};
    };
    plan.summarize = [config, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("barrier_audit", config.base_seed, cells, recs);
        double mn = std::numeric_limits<double>::infinity(), gap = 0.0;
        for (const auto& c : rep.cells) {
            mn = std::min(mn, summary_field(c, "min_margin", &Summary::min, mn));
            gap = std::max(gap, summary_field(c, "continuity_gap", &Summary::max, 0.0));
        }
        rep.scalars["min_margin"] = mn;
        rep.scalars["margin_threshold"] = -10.0 * config.h * config.h;
        rep.scalars["max_continuity_gap"] = gap;
        return rep;
    };
    return plan;
}

void DualityConfig::validate() const {
    field.validate();
    if (samples < 1) throw ConfigError("duality: need at least one sample");
    if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("duality: eps must lie in (0, 1]");
    if (!(box_radius >= 2.0 * field.effective_range())) throw ConfigError("duality: box radius below 2 ell");
    if (!(tol > 0.0)) throw ConfigError("duality: tol must be positive");
}

void to_json(nlohmann::json& j, const DualityConfig& c) {
    j = {{"field", c.field}, {"samples", c.samples}, {"eps", c.eps}, {"box_radius", c.box_radius},
         {"h", c.h},         {"tol", c.tol},         {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, DualityConfig& c) {
    require_keys(j, {"field", "samples", "eps", "box_radius", "h", "tol", "base_seed"}, "duality");
    c = DualityConfig{};
    if (!j.contains("field")) throw ConfigError("duality: missing field");
    c.field = j.at("field").get<FieldSpec>();
    c.samples = j.value("samples", c.samples);
    c.eps = j.value("eps", c.eps);
    c.box_radius = j.value("box_radius", c.box_radius);
    c.h = j.value("h", c.h);
    c.tol = j.value("tol", c.tol);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_duality_plan(const DualityConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "duality";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    plan.cells.push_back({"eps=" + std::to_string(config.eps), {{"eps", config.eps}}, -1});
    plan.run = [config](int, std::int64_t, std::uint64_t seed) {
        const MatrixField field(config.field, sample_environment(config.field, seed));
        const auto dc = green_duality(field, config.eps, config.box_radius, config.h, config.tol);
        return std::vector<RawRecord>{{0, 0, 0, "relative_gap", dc.relative_gap},
                                      {0, 0, 0, "measure_mass", dc.measure_mass},
                                      {0, 0, 0, "green_mass", dc.green_mass}};
    };
    plan.summarize = [config, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("duality", config.base_seed, cells, recs);
        rep.scalars["max_relative_gap"] = summary_field(rep.cells[0], "relative_gap", &Summary::max, 0.0);
        return rep;
    };
    return plan;
}

}  // namespace homlab
