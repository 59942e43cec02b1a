#include "homlab/concentration.hpp"

#include "homlab/green.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace homlab {

namespace {

double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / double(xs.size());
}

void check_pairs(std::span<const double> X, std::span<const double> V, const std::string& what) {
    if (X.size() != V.size()) throw DomainError(what + ": X and V sample counts differ");
    if (X.size() < 2) throw DomainError(what + ": need at least two samples");
    for (std::size_t i = 0; i < X.size(); ++i)
        if (!std::isfinite(X[i]) || !std::isfinite(V[i]) || V[i] < 0.0)
            throw DomainError(what + ": samples must be finite with V >= 0");
}

Site axis_site(int d, int axis, std::int64_t r) {
    Site z(d);
    z[axis] = r;
    return z;
}

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Vertical derivatives

VerticalDerivative vertical_derivative(const LatticeFunctional& X, const SiteSeedLattice& lattice,
                                       const Site& z, std::int64_t K, std::uint64_t seed) {
    if (K < 2) throw DomainError("vertical_derivative: need K >= 2 resamples");
    const double x0 = X(lattice);
    const std::uint64_t stream = hash_site(seed, z);
    std::vector<double> xs(static_cast<std::size_t>(K));
    for (std::int64_t k = 0; k < K; ++k)
        xs[std::size_t(k)] = X(resample_site(lattice, z, hash_combine(stream, std::uint64_t(k))));
    const Summary s = summarize(xs);
    return {z, x0 - s.mean, s.stderr_mean, K};
}

std::vector<std::uint64_t> atom_seeds(const FieldSpec& spec) {
    if (spec.kind != FieldKind::scalar_checkerboard)
        throw DomainError("atom_seeds: exact enumeration needs a scalar_checkerboard field");
    std::vector<std::uint64_t> seeds;
    for (double v : spec.scalar_law.values) {
        std::uint64_t k = 0;
        while (cell_matrix(spec, mix64(k))(0, 0) != v) {
            if (++k > 1000000) throw DomainError("atom_seeds: atom with negligible probability");
        }
        seeds.push_back(mix64(k));
    }
    return seeds;
}

VerticalDerivative enumerated_vertical_derivative(const LatticeFunctional& X,
                                                  const SiteSeedLattice& lattice, const Site& z,
                                                  const FieldSpec& spec, double base_value) {
    const auto seeds = atom_seeds(spec);
    const double current = cell_matrix(spec, lattice.seed_at(z))(0, 0);
    double conditional = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const double p = spec.scalar_law.probabilities[i];
        if (p == 0.0) continue;
        const double v = spec.scalar_law.values[i] == current
                             ? base_value
                             : X(resample_site(lattice, z, seeds[i]));
        conditional += p * v;
    }
    return {z, base_value - conditional, 0.0, std::int64_t(seeds.size())};
}

VerticalDerivativeField vertical_derivative_field(const LatticeFunctional& X,
                                                  const SiteSeedLattice& lattice,
                                                  const IntBox& window, std::int64_t K,
                                                  std::uint64_t seed,
                                                  const std::string& description) {
    VerticalDerivativeField out{description, K, {}};
    for (const Site& z : window.sites()) out.sites.push_back(vertical_derivative(X, lattice, z, K, seed));
    return out;
}

void write_vertical_csv(const VerticalDerivativeField& field, std::ostream& os) {
    const int d = field.sites.empty() ? 0 : field.sites.front().z.dim;
    for (int i = 0; i < d; ++i) os << "z_" << i + 1 << ",";
    os << "estimate,stderr\n";
    char buf[64];
    for (const auto& s : field.sites) {
        for (int i = 0; i < d; ++i) os << s.z[i] << ",";
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", s.estimate, s.stderr_);
        os << buf << "\n";
    }
}

std::int64_t EnvelopeWindow::required_radius() const {
    if (!(eps > 0.0) || !(a > 0.0) || !(floor > 0.0 && floor < 1.0) || dimension < 2)
        throw DomainError("envelope window: need eps, a > 0, floor in (0, 1), d >= 2");
    const double target = floor * envelope_xi(eps, 0.0, dimension, a);
    std::int64_t r = 0;
    while (envelope_xi(eps, double(r), dimension, a) > target) ++r;
    return r;
}

double total_vertical_variance(const LatticeFunctional& X, const SiteSeedLattice& lattice,
                               const IntBox& window, std::int64_t K, std::uint64_t seed,
                               const std::optional<EnvelopeWindow>& envelope) {
    if (envelope) {
        const std::int64_t need = envelope->required_radius();
        const IntBox cube = IntBox::cube(window.lo.dim, need);
        for (int i = 0; i < window.lo.dim; ++i)
            if (window.lo[i] > cube.lo[i] || window.hi[i] < cube.hi[i])
                throw WindowTooSmall("total_vertical_variance: window must contain the cube of radius " +
                                         std::to_string(need),
                                     need);
    }
    double total = 0.0;
    for (const Site& z : window.sites()) {
        const auto v = vertical_derivative(X, lattice, z, K, seed);
        total += v.estimate * v.estimate - v.stderr_ * v.stderr_;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Validators

void to_json(nlohmann::json& j, const ConcentrationReport& r) {
    j = {{"kind", r.kind},           {"beta", r.beta},         {"empirical_lhs", r.empirical_lhs},
         {"bound_rhs", r.bound_rhs}, {"margin", r.margin},     {"tolerance", r.tolerance},
         {"samples", r.samples},     {"overflow", r.overflow}, {"holds", r.holds()}};
}

ConcentrationReport efron_stein_check(std::span<const double> X, std::span<const double> V) {
    check_pairs(X, V, "efron_stein_check");
    const Summary sx = summarize(X);
    const Summary sv = summarize(V);
    ConcentrationReport r;
    r.kind = "efron_stein";
    r.beta = 2.0;
    r.empirical_lhs = sx.variance;
    r.bound_rhs = sv.mean;
    r.margin = r.bound_rhs - r.empirical_lhs;
    r.tolerance = 3.0 * std::hypot(sx.stderr_variance, sv.stderr_mean);
    r.samples = std::int64_t(X.size());
    return r;
}

ConcentrationReport moment_bound_check(std::span<const double> X, std::span<const double> V,
                                       double p) {
    check_pairs(X, V, "moment_bound_check");
    if (!(p >= 2.0)) throw DomainError("moment_bound_check: need p >= 2");
    const double mx = mean_of(X);
    std::vector<double> dev(X.size()), vp(V.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        dev[i] = std::pow(std::abs(X[i] - mx), p);
        vp[i] = std::pow(V[i], p / 2.0);
    }
    const Summary sd = summarize(dev);
    const Summary sv = summarize(vp);
    const double c = kMomentConstant * std::pow(p, p / 2.0);
    ConcentrationReport r;
    r.kind = "moment";
    r.beta = p;
    r.empirical_lhs = sd.mean;
    r.bound_rhs = c * sv.mean;
    r.margin = r.bound_rhs - r.empirical_lhs;
    r.tolerance = 3.0 * std::hypot(sd.stderr_mean, c * sv.stderr_mean);
    r.samples = std::int64_t(X.size());
    return r;
}

StretchedBound stretched_bound(double beta, std::span<const double> V) {
    if (!(beta > 0.0 && beta < 2.0)) throw DomainError("stretched_bound: beta must lie in (0, 2)");
    if (V.empty()) throw DomainError("stretched_bound: no samples");
    const double alpha = kStretchedAlpha;
    const double slack = alpha - std::numbers::e * kMomentConstant * beta;
    const double q = beta / (2.0 - beta);
    double top = -std::numeric_limits<double>::infinity();
    std::vector<double> e(V.size());
    for (std::size_t i = 0; i < V.size(); ++i) {
        if (!(V[i] >= 0.0) || !std::isfinite(V[i])) throw DomainError("stretched_bound: V must be finite and >= 0");
        e[i] = std::pow(alpha * V[i], q);
        top = std::max(top, e[i]);
    }
    double acc = 0.0;
    for (double x : e) acc += std::exp(x - top);
    const double log_mean = top + std::log(acc / double(V.size()));
    const double log_second = 0.5 * beta * std::log(alpha / slack) + 0.5 * (2.0 - beta) * log_mean;
    const double first_exponent = std::pow(mean_of(V), beta / 2.0);
    constexpr double kMaxLog = 700.0;
    if (log_second > kMaxLog || first_exponent > kMaxLog)
        return {std::numeric_limits<double>::infinity(), true};
    return {std::exp(first_exponent) + std::exp(log_second), false};
}

ConcentrationReport stretched_check(std::span<const double> X, std::span<const double> V,
                                    double beta) {
    check_pairs(X, V, "stretched_check");
    const auto bound = stretched_bound(beta, V);
    const double mx = mean_of(X);
    std::vector<double> ex(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) ex[i] = std::exp(std::pow(std::abs(X[i] - mx), beta));
    const Summary s = summarize(ex);
    ConcentrationReport r;
    r.kind = "stretched";
    r.beta = beta;
    r.empirical_lhs = s.mean;
    r.bound_rhs = bound.value;
    r.overflow = bound.overflow;
    r.margin = bound.overflow ? std::numeric_limits<double>::infinity() : r.bound_rhs - r.empirical_lhs;
    r.tolerance = 3.0 * s.stderr_mean;
    r.samples = std::int64_t(X.size());
    return r;
}

// ---------------------------------------------------------------------------
// Kernel sums

double kernel_square_sum(double eps, int d, double a, std::int64_t exact_radius) {
    if (d < 2 || exact_radius < 1) throw DomainError("kernel_square_sum: need d >= 2, exact_radius >= 1");
    const std::int64_t N = exact_radius * exact_radius;
    // counts[n] = #{z in Z^k : |z|^2 = n}, built one axis at a time
    std::vector<double> counts(std::size_t(N + 1), 0.0);
    counts[0] = 1.0;
    for (int axis = 0; axis < d; ++axis) {
        std::vector<double> next(counts.size(), 0.0);
        for (std::int64_t n = 0; n <= N; ++n) {
            if (counts[std::size_t(n)] == 0.0) continue;
            for (std::int64_t k = -exact_radius; k <= exact_radius; ++k) {
                const std::int64_t m = n + k * k;
                if (m <= N) next[std::size_t(m)] += counts[std::size_t(n)];
            }
        }
        counts = std::move(next);
    }
    double total = 0.0;
    for (std::int64_t n = 0; n <= N; ++n) {
        if (counts[std::size_t(n)] == 0.0) continue;
        const double xi = envelope_xi(eps, std::sqrt(double(n)), d, a);
        total += counts[std::size_t(n)] * xi * xi;
    }
    const double sphere = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
    boost::math::quadrature::exp_sinh<double> integrator;
    const double R0 = double(exact_radius);
    const double tail = integrator.integrate([&](double t) {
        const double r = R0 + t;
        const double xi = envelope_xi(eps, r, d, a);
        if (!(xi > 0.0) || !std::isfinite(r)) return 0.0;
        return sphere * std::exp((d - 1) * std::log(r) + 2.0 * std::log(xi));
    });
    return total + tail;
}

double kernel_sum_ratio(double eps, int d, double a) {
    const double E = error_scale(eps, d);
    return kernel_square_sum(eps, d, a) / (std::pow(eps, -4.0) * E * E);
}

std::vector<EstinyPoint> estiny_check(double eps, int d, double a, std::span<const double> rs,
                                      std::int64_t margin) {
    if (d < 3 || margin < 1) throw DomainError("estiny_check: need d >= 3 and margin >= 1");
    std::vector<EstinyPoint> out;
    for (double r : rs) {
        if (!(r >= 0.0)) throw DomainError("estiny_check: negative separation");
        const auto ri = std::int64_t(std::llround(r));
        const std::int64_t half = ri / 2;
        const std::int64_t radius = (ri + 1) / 2 + margin;
        // xi by integer squared distance
        const std::int64_t max_n = std::int64_t(d) * (radius + ri) * (radius + ri) + 1;
        std::vector<double> xi(std::size_t(max_n + 1));
        for (std::int64_t n = 0; n <= max_n; ++n) xi[std::size_t(n)] = envelope_xi(eps, std::sqrt(double(n)), d, a);
        Site y(d);
        for (int i = 0; i < d; ++i) y[i] = -radius;
        y[0] += half;
        double sum = 0.0;
        while (true) {
            std::int64_t n0 = 0, n1 = 0;
            for (int i = 0; i < d; ++i) {
                n0 += y[i] * y[i];
                const std::int64_t t = i == 0 ? y[i] - ri : y[i];
                n1 += t * t;
            }
            sum += xi[std::size_t(n0)] * xi[std::size_t(n1)];
            int i = d - 1;
            while (i >= 0) {
                const std::int64_t lo = -radius + (i == 0 ? half : 0);
                if (++y[i] <= lo + 2 * radius) break;
                y[i] = lo;
                --i;
            }
            if (i < 0) break;
        }
        const double form = std::exp(-a * eps * ri) * (std::pow(1.0 + ri, 4.0 - d) + std::pow(eps, d - 4.0));
        out.push_back({double(ri), sum, form, sum / form});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sensitivity experiment

LatticeFunctional corrector_functional(const FieldSpec& spec, double eps, const SymMatrix& M,
                                       const CorrectorOptions& options) {
    return [spec, eps, M, options](const SiteSeedLattice& lattice) {
        const MatrixField field(spec, lattice);
        const CorrectorSystem sys(field, eps, options);
        return sys.solve(M).center_value;
    };
}

SensitivityConfig::SensitivityConfig() {
    field = FieldSpec::checkerboard(3, {1.0, 4.0}, {0.5, 0.5});
    corrector.h = 1.0;
    corrector.box_factor = 3.0;
    corrector.solve_tol = 1e-10;
}

void SensitivityConfig::validate() const {
    field.validate();
    if (!(eps > 0.0 && eps <= 0.5)) throw ConfigError("sensitivity: eps must lie in (0, 1/2]");
    if (radii.empty()) throw ConfigError("sensitivity: empty radii");
    for (auto r : radii)
        if (r < 1) throw ConfigError("sensitivity: radii must be positive");
    if (conditional != "enumerate" && conditional != "resample")
        throw ConfigError("sensitivity: conditional must be 'enumerate' or 'resample'");
    if (conditional == "enumerate" && field.kind != FieldKind::scalar_checkerboard)
        throw ConfigError("sensitivity: enumeration needs a scalar_checkerboard field");
    if (conditional == "resample" && K < 2) throw ConfigError("sensitivity: need K >= 2");
    if (samples < 1) throw ConfigError("sensitivity: need at least one sample");
    const double box = corrector.radius_for(eps, field.Lambda);
    const auto rmax = *std::max_element(radii.begin(), radii.end());
    if (!(double(rmax) < box / 2.0))
        throw ConfigError("sensitivity: largest radius must be below half the corrector box (" +
                          fmt(box) + ")");
    if (!(fit_r_max > fit_r_min) || fit_r_min < 1.0)
        throw ConfigError("sensitivity: need 1 <= fit_r_min < fit_r_max");
    for (int d : kernel_dims)
        if (d < 2) throw ConfigError("sensitivity: kernel dimensions must be at least 2");
    for (double e : kernel_eps)
        if (!(e > 0.0 && e <= 0.5)) throw ConfigError("sensitivity: kernel_eps must lie in (0, 1/2]");
    if (!(estiny_eps > 0.0 && estiny_eps <= 0.5)) throw ConfigError("sensitivity: estiny_eps must lie in (0, 1/2]");
    for (double r : estiny_r)
        if (!(r >= 0.0 && r <= 64.0)) throw ConfigError("sensitivity: estiny_r must lie in [0, 64]");
}

void to_json(nlohmann::json& j, const SensitivityConfig& c) {
    j = {{"field", c.field},
         {"eps", c.eps},
         {"radii", c.radii},
         {"conditional", c.conditional},
         {"K", c.K},
         {"samples", c.samples},
         {"corrector", c.corrector},
         {"fit_r_min", c.fit_r_min},
         {"fit_r_max", c.fit_r_max},
         {"kernel_dims", c.kernel_dims},
         {"kernel_eps", c.kernel_eps},
         {"estiny_eps", c.estiny_eps},
         {"estiny_r", c.estiny_r},
         {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, SensitivityConfig& c) {
    require_keys(j, {"field", "eps", "radii", "conditional", "K", "samples", "corrector", "fit_r_min",
                     "fit_r_max", "kernel_dims", "kernel_eps", "estiny_eps", "estiny_r", "base_seed"},
                 "sensitivity");
    c = SensitivityConfig{};
    if (j.contains("field")) c.field = j.at("field").get<FieldSpec>();
    c.eps = j.value("eps", c.eps);
    c.radii = j.value("radii", c.radii);
    c.conditional = j.value("conditional", c.conditional);
    c.K = j.value("K", c.K);
    c.samples = j.value("samples", c.samples);
    if (j.contains("corrector")) c.corrector = j.at("corrector").get<CorrectorOptions>();
    c.fit_r_min = j.value("fit_r_min", c.fit_r_min);
    c.fit_r_max = j.value("fit_r_max", c.fit_r_max);
    c.kernel_dims = j.value("kernel_dims", c.kernel_dims);
    c.kernel_eps = j.value("kernel_eps", c.kernel_eps);
    c.estiny_eps = j.value("estiny_eps", c.estiny_eps);
    c.estiny_r = j.value("estiny_r", c.estiny_r);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

namespace {

void add_kernel_scalars(StatReport& rep, const SensitivityConfig& c) {
    const double a = screening_rate(c.field.Lambda);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int d : c.kernel_dims)
        for (double e : c.kernel_eps) {
            const double ratio = kernel_sum_ratio(e, d, a);
            rep.scalars["kernel_ratio.d=" + std::to_string(d) + ".eps=" + fmt(e)] = ratio;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    if (!c.kernel_dims.empty() && !c.kernel_eps.empty()) {
        rep.scalars["kernel_ratio_min"] = lo;
        rep.scalars["kernel_ratio_max"] = hi;
    }
    if (c.estiny_r.empty()) return;
    const auto pts = estiny_check(c.estiny_eps, 5, a, c.estiny_r);
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    for (const auto& p : pts) {
        rep.scalars["estiny_ratio.r=" + fmt(p.r)] = p.ratio;
        lo = std::min(lo, p.ratio);
        hi = std::max(hi, p.ratio);
    }
    rep.scalars["estiny_ratio_min"] = lo;
    rep.scalars["estiny_ratio_max"] = hi;
}

}  // namespace

ExperimentPlan make_sensitivity_plan(const SensitivityConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "sensitivity";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    for (auto r : config.radii)
        plan.cells.push_back({"r=" + std::to_string(r), {{"r", double(r)}, {"eps", config.eps}}, -1});
    const int d = config.field.dimension;
    plan.run = [config, d](int cell, std::int64_t, std::uint64_t seed) {
        const auto lattice = sample_environment(config.field, seed);
        const auto X = corrector_functional(config.field, config.eps, SymMatrix::Identity(d, d),
                                            config.corrector);
        const std::int64_t r = config.radii[std::size_t(cell)];
        std::vector<RawRecord> recs;
        const double x0 = config.conditional == "enumerate" ? X(lattice) : 0.0;
        for (int axis = 0; axis < d; ++axis)
            for (int sign : {1, -1}) {
                const Site z = axis_site(d, axis, sign * r);
                const auto D = config.conditional == "enumerate"
                                   ? enumerated_vertical_derivative(X, lattice, z, config.field, x0)
                                   : vertical_derivative(X, lattice, z, config.K, seed);
                recs.push_back({0, 0, 0, "D", D.estimate});
                recs.push_back({0, 0, 0, "abs_D", std::abs(D.estimate)});
                recs.push_back({0, 0, 0, "D_stderr", D.stderr_});
            }
        return recs;
    };
    plan.summarize = [config, cells = plan.cells, d](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("sensitivity", config.base_seed, cells, recs);
        const double a = screening_rate(config.field.Lambda);
        FitReport fr;
        fr.name = "shell_decay";
        fr.x_label = "log(r)";
        fr.y_label = "log(mean |D|) + a eps r";
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double r = double(config.radii[c]);
            const double m = summary_field(rep.cells[c], "abs_D", &Summary::mean, 0.0);
            if (r < config.fit_r_min || r > config.fit_r_max || !(m > 0.0)) continue;
            fr.x.push_back(std::log(r));
            fr.y.push_back(std::log(m) + a * config.eps * r);
        }
        fr.fit = fit_line(fr.x, fr.y);
        const double target = 2.0 - double(d);
        rep.scalars["decay_exponent"] = fr.fit.slope;
        rep.scalars["decay_ci_lo"] = fr.fit.ci_lo;
        rep.scalars["decay_ci_hi"] = fr.fit.ci_hi;
        rep.scalars["target_exponent"] = target;
        rep.scalars["decay_degenerate"] = fr.fit.degenerate ? 1.0 : 0.0;
        double max_abs = 0.0;
        for (const auto& cs : rep.cells) max_abs = std::max(max_abs, summary_field(cs, "abs_D", &Summary::max, 0.0));
        rep.scalars["max_abs_D"] = max_abs;
        rep.fits.push_back(std::move(fr));
        add_kernel_scalars(rep, config);
        return rep;
    };
    return plan;
}

StatReport sensitivity_experiment(const SensitivityConfig& config, int workers) {
    return run_in_memory(make_sensitivity_plan(config), workers);
}

// ---------------------------------------------------------------------------
// Synthetic concentration suite

void to_json(nlohmann::json& j, const SyntheticFunctional& f) {
    j = {{"label", f.label}, {"kind", f.kind}, {"sites", f.sites}, {"law", f.law}, {"amplitude", f.amplitude}};
}

void from_json(const nlohmann::json& j, SyntheticFunctional& f) {
    require_keys(j, {"label", "kind", "sites", "law", "amplitude"}, "functional");
    f = SyntheticFunctional{};
    if (!j.contains("label") || !j.contains("law")) throw ConfigError("functional: need label and law");
    f.label = j.at("label").get<std::string>();
    f.kind = j.value("kind", f.kind);
    f.sites = j.value("sites", f.sites);
    f.law = j.at("law").get<DiscreteLaw>();
    f.amplitude = j.value("amplitude", f.amplitude);
}

SyntheticSample synthetic_sample(const SyntheticFunctional& f, std::uint64_t seed) {
    std::vector<double> w(std::size_t(f.sites));
    SplitMix rng(seed);
    for (auto& v : w) v = f.law.draw(rng.uniform());
    const bool is_max = f.kind == "max";
    auto eval = [&](const std::vector<double>& xs) {
        double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
        for (double v : xs) acc = is_max ? std::max(acc, v) : acc + v;
        return f.amplitude * acc;
    };
    SyntheticSample s;
    s.X = eval(w);
    for (std::size_t z = 0; z < w.size(); ++z) {
        const double keep = w[z];
        double conditional = 0.0;
        for (std::size_t k = 0; k < f.law.values.size(); ++k) {
            w[z] = f.law.values[k];
            conditional += f.law.probabilities[k] * eval(w);
        }
        w[z] = keep;
        s.V += (s.X - conditional) * (s.X - conditional);
    }
    return s;
}

ConcentrationSuiteConfig::ConcentrationSuiteConfig() {
    functionals = {
        {"sum", "sum", 16, {{-1.0, 1.0}, {0.5, 0.5}}, 0.05},
        {"max", "max", 4, {{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0}, std::vector<double>(8, 0.125)}, 0.1},
        {"heavy_sum", "sum", 16, {{0.0, 1.0, 8.0}, {0.7, 0.25, 0.05}}, 0.02},
    };
}

void ConcentrationSuiteConfig::validate() const {
    if (functionals.empty()) throw ConfigError("concentration_suite: no functionals");
    for (const auto& f : functionals) {
        if (f.label.empty()) throw ConfigError("concentration_suite: empty functional label");
        if (f.kind != "sum" && f.kind != "max")
            throw ConfigError("concentration_suite: functional kind must be 'sum' or 'max'");
        if (f.sites < 1) throw ConfigError("concentration_suite: need at least one site");
        if (!(f.amplitude > 0.0) || !std::isfinite(f.amplitude))
            throw ConfigError("concentration_suite: amplitude must be positive");
        f.law.validate("concentration_suite law");
    }
    if (samples < 2) throw ConfigError("concentration_suite: need at least two samples");
    for (double p : p_values)
        if (!(p >= 2.0)) throw ConfigError("concentration_suite: p must be at least 2");
    for (double b : betas)
        if (!(b > 0.0 && b < 2.0)) throw ConfigError("concentration_suite: beta must lie in (0, 2)");
}

void to_json(nlohmann::json& j, const ConcentrationSuiteConfig& c) {
    j = {{"functionals", c.functionals}, {"samples", c.samples}, {"p_values", c.p_values},
         {"betas", c.betas},             {"base_seed", c.base_seed}};
}

void from_json(const nlohmann::json& j, ConcentrationSuiteConfig& c) {
    require_keys(j, {"functionals", "samples", "p_values", "betas", "base_seed"}, "concentration_suite");
    c = ConcentrationSuiteConfig{};
    if (j.contains("functionals")) c.functionals = j.at("functionals").get<std::vector<SyntheticFunctional>>();
    c.samples = j.value("samples", c.samples);
    c.p_values = j.value("p_values", c.p_values);
    c.betas = j.value("betas", c.betas);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.validate();
}

ExperimentPlan make_concentration_suite_plan(const ConcentrationSuiteConfig& config) {
    config.validate();
    ExperimentPlan plan;
    plan.kind = "concentration_suite";
    plan.base_seed = config.base_seed;
    plan.samples = config.samples;
    for (const auto& f : config.functionals)
        plan.cells.push_back({f.label, {{"sites", double(f.sites)}, {"amplitude", f.amplitude}}, -1});
    plan.run = [config](int cell, std::int64_t, std::uint64_t seed) {
        const auto s = synthetic_sample(config.functionals[std::size_t(cell)], seed);
        return std::vector<RawRecord>{{0, 0, 0, "X", s.X}, {0, 0, 0, "V", s.V}};
    };
    plan.summarize = [config, cells = plan.cells](std::span<const RawRecord> recs) {
        auto rep = summarize_by_cell("concentration_suite", config.base_seed, cells, recs);
        bool all = true;
        auto put = [&](const std::string& key, const ConcentrationReport& r) {
            rep.scalars[key + ".lhs"] = r.empirical_lhs;
            rep.scalars[key + ".rhs"] = r.bound_rhs;
            rep.scalars[key + ".margin"] = r.margin;
            rep.scalars[key + ".tolerance"] = r.tolerance;
            rep.scalars[key + ".holds"] = r.holds() ? 1.0 : 0.0;
            all = all && r.holds();
        };
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto X = select(recs, int(c), "X");
            const auto V = select(recs, int(c), "V");
            if (X.size() < 2) {
                all = false;
                continue;
            }
            const std::string& label = cells[c].label;
            const auto es = efron_stein_check(X, V);
            put(label + ".es", es);
            rep.scalars[label + ".es.equality"] = es.equality() ? 1.0 : 0.0;
            for (double p : config.p_values) put(label + ".moment.p=" + fmt(p), moment_bound_check(X, V, p));
            for (double b : config.betas) {
                const auto r = stretched_check(X, V, b);
                put(label + ".stretched.beta=" + fmt(b), r);
                rep.scalars[label + ".stretched.beta=" + fmt(b) + ".overflow"] = r.overflow ? 1.0 : 0.0;
            }
        }
        rep.scalars["all_hold"] = all ? 1.0 : 0.0;
        return rep;
    };
    return plan;
}

StatReport concentration_suite(const ConcentrationSuiteConfig& config, int workers) {
    return run_in_memory(make_concentration_suite_plan(config), workers);
}

}  // namespace homlab
