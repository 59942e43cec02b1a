/// Acceptance criteria: one PASS/FAIL line per criterion.
/// Usage: acceptance [--criterion N] [--workers W]

#include "homlab/analysis.hpp"
#include "homlab/corrector.hpp"
#include "homlab/grid.hpp"
#include "homlab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace homlab;
namespace fs = std::filesystem;

namespace {

int g_workers = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path config_path(const std::string& name) {
    return fs::path(HOMLAB_SOURCE_DIR) / "configs" / "acceptance" / name;
}

StatReport run_config(const std::string& name) {
    return run_in_memory(load_experiment_file(config_path(name)).plan, g_workers);
}

Outcome c1_constant_field() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto spec = FieldSpec::constant(2, 1.0);
    const MatrixField f(spec, sample_environment(spec, 1));
    CorrectorOptions o;
    o.h = 1.0;
    double worst = 0.0;
    for (double eps : {0.25, 0.0625}) {
        const auto sol = approximate_corrector(CorrectorProblem(f, SymMatrix::Identity(2, 2), eps, o));
        worst = std::max(worst, std::abs(sol.center_value - 2.0));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-6 && secs < 5.0, fmt("max |eps^2 phi(0) - 2| = %.2e, %.2f s", worst, secs)};
}

Outcome c2_homogenized() {
    const auto rep = run_config("c02_homogenized.json");
    const auto& s = rep.cells.back().quantities.at("value");
    const double ratio = s.mean / 2.0;
    return {std::abs(ratio - 1.6) <= 0.16 && rep.failures == 0,
            fmt("%s: mean/tr(M) = %.4f +- %.4f (n = %lld), target 1.6 +- 10%%",
                rep.cells.back().label.c_str(), ratio, s.stderr_mean / 2.0, (long long)s.n)};
}

Outcome scaling_slope(const std::string& file, double lo, double hi) {
    const auto rep = run_config(file);
    const auto* fit = rep.find_fit("sd_vs_scale");
    const double slope = fit ? fit->fit.slope : NAN;
    std::string sds;
    for (const auto& c : rep.cells)
        sds += fmt(" %s:%.3e", c.label.c_str(), c.quantities.at("value").sd());
    return {fit && !fit->fit.degenerate && slope >= lo && slope <= hi && rep.failures == 0,
            fmt("slope %.3f [%.3f, %.3f], band [%.2f, %.2f];", slope, fit ? fit->fit.ci_lo : NAN,
                fit ? fit->fit.ci_hi : NAN, lo, hi) +
                sds};
}

Outcome c3_scaling_2d() { return scaling_slope("c03_scaling_2d.json", 0.8, 1.2); }
Outcome c4_scaling_3d() { return scaling_slope("c04_scaling_3d.json", 0.75, 1.25); }

Outcome c5_green_tail() {
    const auto rep = run_config("c05_green_tail.json");
    const double v = rep.scalar("total_violations");
    return {v == 0.0 && rep.failures == 0,
            fmt("violations %.0f, max G/bound %.4f", v, rep.scalar("max_ratio"))};
}

Outcome c6_green_decay() {
    const auto rep = run_config("c06_green_decay.json");
    const double f = rep.scalar("fraction_in_band");
    return {f >= 0.8 && rep.failures == 0,
            fmt("fraction in [-1.5, -0.5]: %.2f, median slope %.3f", f, rep.scalar("median_slope"))};
}

Outcome c7_counterexample() {
    const auto rep = run_config("c07_counterexample.json");
    const double g = rep.scalar("gamma_hat");
    return {std::abs(g + 0.5) <= 0.3, fmt("gamma_hat %.3f vs predicted %.3f", g, rep.scalar("predicted_gamma"))};
}

Outcome c8_barrier_audit() {
    const auto rep = run_config("c08_barrier_audit.json");
    const double m = rep.scalar("min_margin"), th = rep.scalar("margin_threshold");
    const double gap = rep.scalar("max_continuity_gap");
    return {m >= th && gap <= 1e-10 && rep.failures == 0,
            fmt("min margin %.4f (threshold %.3f), continuity gap %.2e", m, th, gap)};
}

/// Random monotone instances with ordered sources and boundary data.
Outcome c9_comparison() {
    SplitMix rng(909);
    const double tol = 1e-10;
    std::int64_t violations = 0;
    double worst = -1e300;
    for (int t = 0; t < 50; ++t) {
        FieldSpec spec;
        const int kind = t % 3;
        if (kind == 0) {
            spec = FieldSpec::checkerboard(2, {1.0, 4.0}, {0.5, 0.5});
        } else {
            spec.kind = FieldKind::full_symmetric;
            spec.dimension = kind == 1 ? 2 : 3;
            spec.lambda = 1.0;
            spec.Lambda = 4.0;
        }
        const MatrixField f(spec, sample_environment(spec, 1000 + std::uint64_t(t)));
        const int d = spec.dimension;
        const double eps = 0.05 + 0.45 * rng.uniform();
        auto op1 = assemble(f, eps, origin_grid(d, d == 2 ? 12.0 : 4.0, 0.5));
        auto op2 = op1;
        const double shift = rng.uniform();
        op1.set_boundary([](const Point& x) { return std::sin(x[0]); });
        op2.set_boundary([&](const Point& x) { return std::sin(x[0]) + shift; });
        GridFunction r1(op1.grid), r2(op1.grid);
        for (std::int64_t i = 0; i < r1.grid.size(); ++i) {
            r1[i] = 2.0 * rng.uniform() - 1.0;
            r2[i] = r1[i] + (rng.uniform() < 0.5 ? 0.0 : rng.uniform());
        }
        const auto u1 = solve(op1, r1, tol);
        const auto u2 = solve(op2, r2, tol);
        const double slack = 2.0 * tol * std::max({1.0, u1.sup_norm(), u2.sup_norm()});
        for (std::int64_t i = 0; i < u1.grid.size(); ++i) {
            worst = std::max(worst, u1[i] - u2[i]);
            if (u1[i] > u2[i] + slack) ++violations;
        }
    }
    return {violations == 0, fmt("violations %lld, max(u1 - u2) = %.3e", (long long)violations, worst)};
}

GridFunction random_test_function(const Grid& g, SplitMix& rng, int variant) {
    GridFunction u(g);
    const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    for (std::int64_t i = 0; i < g.size(); ++i) {
        const Point x = g.point(i);
        const double noise = 2.0 * rng.uniform() - 1.0;
        switch (variant) {
            case 0: u[i] = noise; break;
            case 1: u[i] = a * x[0] * x[0] - b * x[0] * x[1] + c * x[1] + 0.01 * noise; break;
            case 2: u[i] = std::sin(a * x[0] + b * x[1]) * std::cos(c * x[1]); break;
            default: u[i] = std::abs(x[0] - a) + noise * c; break;
        }
    }
    return u;
}

Outcome c10_cascade() {
    SplitMix rng(1010);
    const Grid g = origin_grid(2, 16.0, 0.25);
    double worst = 1e300;
    for (int t = 0; t < 100; ++t)
        worst = std::min(worst, quadratic_cascade(random_test_function(g, rng, t % 4), 0.25, 1.0, 16.0).min_margin());
    return {worst >= -1e-8, fmt("min margin over 100 functions %.3e", worst)};
}

Outcome c11_interpolation() {
    const Grid g = origin_grid(2, 8.0, 0.5);
    const Point center = Point::Zero(2);
    double worst = 0.0;
    int degenerate = 0;
    for (int t = 0; t < 20; ++t) {
        const double w = 4.0 + t, cx = 0.1 * (t % 5);
        const GridFunction b(g, [&](const Point& x) {
            return std::exp(-((x[0] - 1.0 - cx) * (x[0] - 1.0 - cx) + x[1] * x[1]) / w);
        });
        const auto ic = interpolation_check(b, center, 0.5, 8.0);
        if (ic.degenerate) ++degenerate;
        else worst = std::max(worst, ic.ratio);
    }
    const GridFunction affine(g, [](const Point& x) { return 1.0 + 2.0 * x[0] - x[1]; });
    const bool rejected = interpolation_check(affine, center, 0.5, 8.0).degenerate;
    return {worst <= 1.0 && degenerate == 0 && rejected,
            fmt("max ratio %.4f, degenerate bumps %d, affine rejected %s", worst, degenerate,
                rejected ? "yes" : "no")};
}

Outcome c12_concentration() {
    const auto rep = run_config("c12_concentration.json");
    const bool all = rep.scalar("all_hold") == 1.0;
    const bool eq = rep.scalar("sum.es.equality") == 1.0 && rep.scalar("heavy_sum.es.equality") == 1.0;
    const double mm = rep.scalar("max.es.margin"), mt = rep.scalar("max.es.tolerance");
    return {all && eq && mm > mt,
            fmt("all bounds hold %s, additive equality %s, max margin %.4f > tol %.4f", all ? "yes" : "no",
                eq ? "yes" : "no", mm, mt)};
}

Outcome c13_duality() {
    const auto rep = run_config("c13_duality.json");
    const double g = rep.scalar("max_relative_gap");
    return {g <= 1e-5 && rep.failures == 0, fmt("max relative gap %.3e", g)};
}

Outcome c14_sensitivity() {
    const auto rep = run_config("c14_sensitivity.json");
    const double e = rep.scalar("decay_exponent"), target = rep.scalar("target_exponent");
    const double lo = rep.scalar("kernel_ratio_min"), hi = rep.scalar("kernel_ratio_max");
    const bool ok = std::abs(e - target) <= 0.7 && rep.scalar("decay_degenerate") == 0.0 &&
                    lo >= 1e-3 && hi <= 1e3 && rep.failures == 0;
    return {ok, fmt("decay exponent %.3f [%.3f, %.3f] vs %.0f; kernel ratios in [%.3g, %.3g]", e,
                    rep.scalar("decay_ci_lo"), rep.scalar("decay_ci_hi"), target, lo, hi)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c15_reproducibility() {
    const auto e = load_experiment_file(config_path("c15_reproducibility.json"));
    const fs::path root = fs::temp_directory_path() / "homlab_acceptance_c15";
    fs::remove_all(root);
    run_experiment(e, root / "a", 1);
    run_experiment(e, root / "b", 3);
    run_experiment(e, root / "c", 1);
    const auto a = slurp(root / "a" / "raw.csv");
    const bool same = !a.empty() && a == slurp(root / "b" / "raw.csv") && a == slurp(root / "c" / "raw.csv");
    const bool summary = slurp(root / "a" / "summary.json") == slurp(root / "b" / "summary.json");
    fs::remove_all(root);
    return {same && summary, fmt("raw.csv identical across reruns and 1 vs 3 workers: %s (%zu bytes)",
                                 same ? "yes" : "no", a.size())};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list{
        {"constant-coefficient exactness", c1_constant_field},
        {"homogenized coefficient, 2d checkerboard", c2_homogenized},
        {"variance scaling slope, d=2", c3_scaling_2d},
        {"variance scaling slope, d=3", c4_scaling_3d},
        {"deterministic Green tail", c5_green_tail},
        {"random Green decay", c6_green_decay},
        {"counterexample exponent", c7_counterexample},
        {"barrier supersolution audit", c8_barrier_audit},
        {"comparison principle", c9_comparison},
        {"cascade identities", c10_cascade},
        {"interpolation inequality", c11_interpolation},
        {"concentration suite", c12_concentration},
        {"invariant measure duality", c13_duality},
        {"sensitivity envelope and kernel sums", c14_sensitivity},
        {"byte-identical raw output", c15_reproducibility},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    g_workers = std::max(1u, std::thread::hardware_concurrency());
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
        else if (a == "--workers" && i + 1 < argc) g_workers = std::max(1, std::atoi(argv[++i]));
        else {
            std::fprintf(stderr, "usage: acceptance [--criterion N] [--workers W]\n");
            return 2;
        }
    }
    const auto& list = criteria();
    if (only < 0 || only > int(list.size())) {
        std::fprintf(stderr, "criterion must lie in [1, %zu]\n", list.size());
        return 2;
    }
    int failed = 0;
    for (int k = 1; k <= int(list.size()); ++k) {
        if (only && k != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = list[std::size_t(k - 1)].run();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("C%-2d %s  %s: %s [%.1f s]\n", k, out.pass ? "PASS" : "FAIL",
                    list[std::size_t(k - 1)].name, out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failed;
    }
    return failed ? 1 : 0;
}
