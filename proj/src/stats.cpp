#include "homlab/stats.hpp"

#include "homlab/common.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace homlab {

double Summary::sd() const { return std::sqrt(std::max(0.0, variance)); }

double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) return std::nan("");
    std::sort(xs.begin(), xs.end());
    const double pos = p * double(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    const double t = pos - double(lo);
    return xs[lo] + t * (xs[hi] - xs[lo]);
}

Summary summarize(std::span<const double> xs) {
    Summary s;
    s.n = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / double(s.n);
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - s.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    if (s.n > 1) {
        s.variance = m2 / double(s.n - 1);
        s.stderr_mean = std::sqrt(s.variance / double(s.n));
        const double n = double(s.n);
        const double mu4 = m4 / n;
        const double v = (mu4 - s.variance * s.variance * (n - 3.0) / (n - 1.0)) / n;
        s.stderr_variance = std::sqrt(std::max(0.0, v));
    }
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    s.q05 = quantile(v, 0.05);
    s.q25 = quantile(v, 0.25);
    s.q50 = quantile(v, 0.50);
    s.q75 = quantile(v, 0.75);
    s.q90 = quantile(v, 0.90);
    s.q95 = quantile(v, 0.95);
    return s;
}

namespace {

double t_quantile(double level, double dof) {
    if (dof < 1.0) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.5 + level / 2.0);
}

}  // namespace

LinearFit fit_line(std::span<const double> x, std::span<const double> y, double level) {
    LinearFit f;
    if (x.size() != y.size()) throw DomainError("fit_line: size mismatch");
    f.n = static_cast<std::int64_t>(x.size());
    bool finite = true;
    for (std::size_t i = 0; i < x.size(); ++i) finite = finite && std::isfinite(x[i]) && std::isfinite(y[i]);
    if (!finite || x.size() < 2) {
        f.degenerate = true;
        return f;
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(x.size());
    my /= double(y.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) {
        f.degenerate = true;
        return f;
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = y[i] - f.intercept - f.slope * x[i];
            rss += e * e;
        }
        const double dof = double(x.size()) - 2.0;
        f.slope_se = std::sqrt(rss / dof / sxx);
        const double t = t_quantile(level, dof);
        f.ci_lo = f.slope - t * f.slope_se;
        f.ci_hi = f.slope + t * f.slope_se;
    } else {
        f.ci_lo = f.ci_hi = f.slope;
    }
    return f;
}

MultiFit fit_multi(const std::vector<std::vector<double>>& columns, std::span<const double> y,
                   double level) {
    MultiFit out;
    const auto p = static_cast<Eigen::Index>(columns.size());
    const auto n = static_cast<Eigen::Index>(y.size());
    if (p == 0 || n <= p) {
        out.degenerate = true;
        return out;
    }
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Y[i] = y[std::size_t(i)];
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = columns[std::size_t(j)].at(std::size_t(i));
    }
    if (!X.allFinite() || !Y.allFinite()) {
        out.degenerate = true;
        return out;
    }
    Eigen::MatrixXd XtX = X.transpose() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(XtX);
    if (lu.rank() < p) {
        out.degenerate = true;
        return out;
    }
    Eigen::VectorXd beta = lu.solve(X.transpose() * Y);
    const double rss = (Y - X * beta).squaredNorm();
    const double dof = double(n - p);
    Eigen::MatrixXd cov = lu.inverse() * (rss / dof);
    out.beta.assign(beta.data(), beta.data() + p);
    for (Eigen::Index j = 0; j < p; ++j) out.se.push_back(std::sqrt(std::max(0.0, cov(j, j))));
    out.t_quantile = t_quantile(level, dof);
    return out;
}

// ---------------------------------------------------------------------------

void sort_records(std::vector<RawRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
        if (a.cell != b.cell) return a.cell < b.cell;
        return a.sample < b.sample;
    });
}

std::vector<double> select(std::span<const RawRecord> records, int cell, const std::string& quantity) {
    std::vector<std::pair<std::int64_t, double>> tmp;
    for (const auto& r : records)
        if (r.cell == cell && r.quantity == quantity) tmp.emplace_back(r.sample, r.value);
    std::stable_sort(tmp.begin(), tmp.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<double> out;
    out.reserve(tmp.size());
    for (auto& t : tmp) out.push_back(t.second);
    return out;
}

std::uint64_t experiment_id(const std::string& kind) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : kind) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t experiment, std::int64_t sample) {
    return hash_combine(hash_combine(mix64(base_seed), experiment), static_cast<std::uint64_t>(sample));
}

std::vector<std::vector<RawRecord>> run_pool(
    std::int64_t n, int workers, const std::function<std::vector<RawRecord>(std::int64_t)>& task,
    const std::function<void(std::int64_t, const std::vector<RawRecord>&)>& on_done) {
    std::vector<std::vector<RawRecord>> out(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)));
    if (n <= 0) return out;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    std::atomic<std::int64_t> next{0};
    std::mutex done_mu;
    std::exception_ptr first_error;
    auto body = [&] {
        while (true) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                auto recs = task(i);
                std::lock_guard lock(done_mu);
                if (on_done) on_done(i, recs);
                out[std::size_t(i)] = std::move(recs);
            } catch (...) {
                std::lock_guard lock(done_mu);
                if (!first_error) first_error = std::current_exception();
                next.store(n);
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// ---------------------------------------------------------------------------

const CellSummary* StatReport::cell(const std::string& label) const {
    for (const auto& c : cells)
        if (c.label == label) return &c;
    return nullptr;
}

const FitReport* StatReport::find_fit(const std::string& name) const {
    for (const auto& f : fits)
        if (f.name == name) return &f;
    return nullptr;
}

double StatReport::scalar(const std::string& key) const {
    auto it = scalars.find(key);
    if (it == scalars.end()) throw DomainError("StatReport: no scalar '" + key + "'");
    return it->second;
}

namespace {

nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? nlohmann::json("nan") : nlohmann::json(v > 0 ? "inf" : "-inf");
}

}  // namespace

void to_json(nlohmann::json& j, const Summary& s) {
    j = {{"n", s.n},
         {"mean", num(s.mean)},
         {"variance", num(s.variance)},
         {"sd", num(s.sd())},
         {"stderr", num(s.stderr_mean)},
         {"stderr_variance", num(s.stderr_variance)},
         {"min", num(s.min)},
         {"max", num(s.max)},
         {"q05", num(s.q05)},
         {"q25", num(s.q25)},
         {"q50", num(s.q50)},
         {"q75", num(s.q75)},
         {"q90", num(s.q90)},
         {"q95", num(s.q95)}};
}

void to_json(nlohmann::json& j, const LinearFit& f) {
    j = {{"slope", num(f.slope)}, {"intercept", num(f.intercept)}, {"slope_se", num(f.slope_se)},
         {"ci95", {num(f.ci_lo), num(f.ci_hi)}}, {"n", f.n}, {"degenerate", f.degenerate}};
}

void to_json(nlohmann::json& j, const StatReport& r) {
    j = nlohmann::json::object();
    j["experiment"] = r.experiment;
    j["base_seed"] = r.base_seed;
    j["failures"] = r.failures;
    auto cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json cj;
        cj["label"] = c.label;
        cj["params"] = nlohmann::json::object();
        for (const auto& [k, v] : c.params) cj["params"][k] = num(v);
        cj["quantities"] = nlohmann::json::object();
        for (const auto& [k, v] : c.quantities) cj["quantities"][k] = v;
        cells.push_back(cj);
    }
    j["cells"] = cells;
    auto fits = nlohmann::json::array();
    for (const auto& f : r.fits) {
        nlohmann::json fj;
        fj["name"] = f.name;
        fj["x_label"] = f.x_label;
        fj["y_label"] = f.y_label;
        auto xs = nlohmann::json::array(), ys = nlohmann::json::array();
        for (double v : f.x) xs.push_back(num(v));
        for (double v : f.y) ys.push_back(num(v));
        fj["x"] = xs;
        fj["y"] = ys;
        fj["fit"] = f.fit;
        fits.push_back(fj);
    }
    j["fits"] = fits;
    j["scalars"] = nlohmann::json::object();
    for (const auto& [k, v] : r.scalars) j["scalars"][k] = num(v);
    j["notes"] = r.notes;
}

}  // namespace homlab
