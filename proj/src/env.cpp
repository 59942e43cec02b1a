#include "homlab/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace homlab {

bool IntBox::contains(const Site& z) const {
    for (int i = 0; i < z.dim; ++i)
        if (z[i] < lo[i] || z[i] > hi[i]) return false;
    return true;
}

std::int64_t IntBox::count() const {
    std::int64_t n = 1;
    for (int i = 0; i < lo.dim; ++i) n *= std::max<std::int64_t>(0, hi[i] - lo[i] + 1);
    return n;
}

std::vector<Site> IntBox::sites() const {
    std::vector<Site> out;
    if (count() == 0) return out;
    out.reserve(static_cast<std::size_t>(count()));
    Site z = lo;
    while (true) {
        out.push_back(z);
        int i = lo.dim - 1;
        while (i >= 0) {
            if (++z[i] <= hi[i]) break;
            z[i] = lo[i];
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

IntBox IntBox::cube(int d, std::int64_t radius) {
    IntBox b{Site(d), Site(d)};
    for (int i = 0; i < d; ++i) {
        b.lo[i] = -radius;
        b.hi[i] = radius;
    }
    return b;
}

SiteSeedLattice::SiteSeedLattice(std::uint64_t base_seed, int dim, IntBox window)
    : base_seed_(base_seed), dim_(dim), window_(std::move(window)), offset_(dim) {}

std::uint64_t SiteSeedLattice::seed_at(const Site& z) const {
    const Site raw = z + offset_;
    if (!overrides_.empty()) {
        auto it = overrides_.find(raw);
        if (it != overrides_.end()) return it->second;
    }
    return hash_site(base_seed_, raw);
}

SiteSeedLattice translate(const SiteSeedLattice& lattice, const Site& z) {
    SiteSeedLattice out = lattice;
    out.offset_ = lattice.offset_ + z;
    out.window_.lo = lattice.window_.lo - z;
    out.window_.hi = lattice.window_.hi - z;
    return out;
}

SiteSeedLattice resample_site(const SiteSeedLattice& lattice, const Site& z,
                              std::uint64_t fresh_seed) {
    SiteSeedLattice out = lattice;
    const Site raw = z + lattice.offset_;
    // Keep the override map canonical so that equal site values mean equal lattices.
    if (hash_site(lattice.base_seed_, raw) == fresh_seed)
        out.overrides_.erase(raw);
    else
        out.overrides_[raw] = fresh_seed;
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(FieldKind k) {
    switch (k) {
        case FieldKind::scalar_checkerboard: return "scalar_checkerboard";
        case FieldKind::diagonal_iid: return "diagonal_iid";
        case FieldKind::full_symmetric: return "full_symmetric";
        case FieldKind::radial_counterexample: return "radial_counterexample";
    }
    return "?";
}

FieldKind field_kind_from_string(const std::string& s) {
    for (auto k : {FieldKind::scalar_checkerboard, FieldKind::diagonal_iid,
                   FieldKind::full_symmetric, FieldKind::radial_counterexample})
        if (to_string(k) == s) return k;
    throw InvalidSpec("unknown field kind '" + s + "'");
}

double DiscreteLaw::draw(double u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        acc += probabilities[i];
        if (u < acc) return values[i];
    }
    return values.back();
}

double DiscreteLaw::min() const { return *std::min_element(values.begin(), values.end()); }
double DiscreteLaw::max() const { return *std::max_element(values.begin(), values.end()); }

void DiscreteLaw::validate(const std::string& what) const {
    if (values.empty()) throw InvalidSpec(what + ": empty value list");
    if (values.size() != probabilities.size())
        throw InvalidSpec(what + ": values and probabilities differ in length");
    double total = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0)) throw InvalidSpec(what + ": negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidSpec(what + ": probabilities do not sum to 1");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidSpec(what + ": non-finite value");
}

double FieldSpec::range() const { return ell > 0.0 ? ell : 2.0 * std::sqrt(double(dimension)); }

double FieldSpec::effective_range() const { return range() + 2.0 * smoothing_radius; }

bool FieldSpec::diagonal_only() const {
    return kind == FieldKind::scalar_checkerboard || kind == FieldKind::diagonal_iid;
}

void FieldSpec::validate() const {
    if (dimension < 2 || dimension > kMaxDim)
        throw InvalidSpec("dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
    if (!(lambda > 0.0) || !(lambda <= Lambda) || !std::isfinite(Lambda))
        throw InvalidSpec("need 0 < lambda <= Lambda");
    if (ell != 0.0 && ell < 2.0 * std::sqrt(double(dimension)) - 1e-12)
        throw InvalidSpec("ell must be at least 2*sqrt(d)");
    if (!(smoothing_radius >= 0.0) || smoothing_radius > 0.5)
        throw InvalidSpec("smoothing_radius must lie in [0, 1/2]");
    const double tol = 1e-12;
    auto in_bounds = [&](const DiscreteLaw& law, const std::string& what) {
        law.validate(what);
        if (law.min() < lambda - tol || law.max() > Lambda + tol)
            throw InvalidSpec(what + ": values outside [lambda, Lambda]");
    };
    switch (kind) {
        case FieldKind::scalar_checkerboard:
            in_bounds(scalar_law, "scalar_checkerboard");
            break;
        case FieldKind::diagonal_iid:
            if (axis_laws.size() != 1 && axis_laws.size() != std::size_t(dimension))
                throw InvalidSpec("diagonal_iid: need one law or one per axis");
            for (const auto& law : axis_laws) in_bounds(law, "diagonal_iid");
            break;
        case FieldKind::full_symmetric:
            if (!(dominance >= 0.0) || dominance > 1.0)
                throw InvalidSpec(
                    "full_symmetric: dominance outside [0, 1] admits eigenvalues outside "
                    "[lambda, Lambda]");
            break;
        case FieldKind::radial_counterexample:
            if (lambda > 1.0 + tol)
                throw InvalidSpec("radial_counterexample: eigenvalue 1 is below lambda");
            if (Lambda < 1.0) throw InvalidSpec("radial_counterexample: Lambda below 1");
            break;
    }
}

FieldSpec FieldSpec::constant(int d, double a) {
    return checkerboard(d, {a}, {1.0});
}

FieldSpec FieldSpec::checkerboard(int d, std::vector<double> values, std::vector<double> probs) {
    FieldSpec s;
    s.kind = FieldKind::scalar_checkerboard;
    s.dimension = d;
    s.scalar_law = {std::move(values), std::move(probs)};
    s.lambda = s.scalar_law.min();
    s.Lambda = s.scalar_law.max();
    return s;
}

FieldSpec FieldSpec::radial(int d, RadialVariant v, double Lambda) {
    FieldSpec s;
    s.kind = FieldKind::radial_counterexample;
    s.dimension = d;
    s.variant = v;
    s.lambda = 1.0;
    s.Lambda = Lambda;
    return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json law_json(const DiscreteLaw& l) {
    return {{"values", l.values}, {"probabilities", l.probabilities}};
}

/// `strict` rejects keys other than values and probabilities.
DiscreteLaw law_from(const nlohmann::json& j, const std::string& what, bool strict = true) {
    if (!j.is_object()) throw InvalidSpec(what + ": expected an object");
    for (auto it = j.begin(); strict && it != j.end(); ++it)
        if (it.key() != "values" && it.key() != "probabilities")
            throw InvalidSpec(what + ": unknown key '" + it.key() + "'");
    DiscreteLaw l;
    l.values = j.at("values").get<std::vector<double>>();
    if (j.contains("probabilities"))
        l.probabilities = j.at("probabilities").get<std::vector<double>>();
    else
        l.probabilities.assign(l.values.size(), l.values.empty() ? 0.0 : 1.0 / l.values.size());
    return l;
}

}  // namespace

void to_json(nlohmann::json& j, const DiscreteLaw& l) { j = law_json(l); }

void from_json(const nlohmann::json& j, DiscreteLaw& l) {
    l = law_from(j, "law");
    l.validate("law");
}

void to_json(nlohmann::json& j, const FieldSpec& s) {
    j = nlohmann::json::object();
    j["kind"] = to_string(s.kind);
    j["dimension"] = s.dimension;
    j["lambda"] = s.lambda;
    j["Lambda"] = s.Lambda;
    j["ell"] = s.range();
    j["smoothing_radius"] = s.smoothing_radius;
    switch (s.kind) {
        case FieldKind::scalar_checkerboard:
            j["values"] = s.scalar_law.values;
            j["probabilities"] = s.scalar_law.probabilities;
            break;
        case FieldKind::diagonal_iid: {
            auto arr = nlohmann::json::array();
            for (const auto& l : s.axis_laws) arr.push_back(law_json(l));
            j["axis_laws"] = arr;
            break;
        }
        case FieldKind::full_symmetric: j["dominance"] = s.dominance; break;
        case FieldKind::radial_counterexample:
            j["variant"] = s.variant == RadialVariant::A1 ? "A1" : "A2";
            break;
    }
}

void from_json(const nlohmann::json& j, FieldSpec& s) {
    if (!j.is_object()) throw InvalidSpec("field: expected an object");
    static const std::set<std::string> known = {
        "kind",   "dimension", "lambda",    "Lambda",    "ell",    "smoothing_radius",
        "values", "probabilities", "axis_laws", "dominance", "variant"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key())) throw InvalidSpec("field: unknown key '" + it.key() + "'");
    try {
        s = FieldSpec{};
        s.kind = field_kind_from_string(j.at("kind").get<std::string>());
        s.dimension = j.value("dimension", 2);
        s.ell = j.value("ell", 0.0);
        s.smoothing_radius = j.value("smoothing_radius", 0.0);
        std::optional<double> lo, hi;
        if (j.contains("lambda")) lo = j.at("lambda").get<double>();
        if (j.contains("Lambda")) hi = j.at("Lambda").get<double>();
        switch (s.kind) {
            case FieldKind::scalar_checkerboard:
                s.scalar_law = law_from(j, "scalar_checkerboard", false);
                s.lambda = lo.value_or(s.scalar_law.values.empty() ? 1.0 : s.scalar_law.min());
                s.Lambda = hi.value_or(s.scalar_law.values.empty() ? 1.0 : s.scalar_law.max());
                break;
            case FieldKind::diagonal_iid: {
                double mn = 1e300, mx = -1e300;
                for (const auto& lj : j.at("axis_laws")) {
                    s.axis_laws.push_back(law_from(lj, "diagonal_iid"));
                    if (!s.axis_laws.back().values.empty()) {
                        mn = std::min(mn, s.axis_laws.back().min());
                        mx = std::max(mx, s.axis_laws.back().max());
                    }
                }
                s.lambda = lo.value_or(mn);
                s.Lambda = hi.value_or(mx);
                break;
            }
            case FieldKind::full_symmetric:
                if (!lo || !hi) throw InvalidSpec("full_symmetric: lambda and Lambda required");
                s.lambda = *lo;
                s.Lambda = *hi;
                s.dominance = j.value("dominance", 0.5);
                break;
            case FieldKind::radial_counterexample: {
                const auto v = j.value("variant", std::string("A1"));
                if (v != "A1" && v != "A2") throw InvalidSpec("radial_counterexample: bad variant");
                s.variant = v == "A1" ? RadialVariant::A1 : RadialVariant::A2;
                if (!hi) throw InvalidSpec("radial_counterexample: Lambda required");
                s.lambda = lo.value_or(1.0);
                s.Lambda = *hi;
                break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("field: ") + e.what());
    }
    s.validate();
}

// ---------------------------------------------------------------------------

SymMatrix cell_matrix(const FieldSpec& spec, std::uint64_t site_seed) {
    const int d = spec.dimension;
    SplitMix rng(site_seed);
    SymMatrix A = SymMatrix::Zero(d, d);
    switch (spec.kind) {
        case FieldKind::scalar_checkerboard: {
            const double a = spec.scalar_law.draw(rng.uniform());
            for (int i = 0; i < d; ++i) A(i, i) = a;
            break;
        }
        case FieldKind::diagonal_iid:
            for (int i = 0; i < d; ++i) {
                const auto& law = spec.axis_laws.size() == 1 ? spec.axis_laws[0]
                                                             : spec.axis_laws[std::size_t(i)];
                A(i, i) = law.draw(rng.uniform());
            }
            break;
        case FieldKind::full_symmetric: {
            const double spread = spec.Lambda - spec.lambda;
            const double o = spec.dominance * spread / (2.0 * (d - 1));
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) {
                    const double v = o * (2.0 * rng.uniform() - 1.0);
                    A(i, j) = v;
                    A(j, i) = v;
                }
            const double slack = std::max(0.0, spread - 2.0 * (d - 1) * o);
            for (int i = 0; i < d; ++i) {
                double off = 0.0;
                for (int j = 0; j < d; ++j)
                    if (j != i) off += std::abs(A(i, j));
                A(i, i) = spec.lambda + off + slack * rng.uniform();
            }
            break;
        }
        case FieldKind::radial_counterexample:
            A.setIdentity();
            break;
    }
    return A;
}

SiteSeedLattice sample_environment(const FieldSpec& spec, std::uint64_t base_seed,
                                   std::int64_t window_radius) {
    spec.validate();
    return SiteSeedLattice(base_seed, spec.dimension, IntBox::cube(spec.dimension, window_radius));
}

MatrixField::MatrixField(FieldSpec spec, SiteSeedLattice lattice)
    : spec_(std::move(spec)), lattice_(std::move(lattice)) {
    spec_.validate();
    if (lattice_.dim() != spec_.dimension)
        throw InvalidSpec("lattice dimension does not match the field spec");
}

MatrixField realize_field(const SiteSeedLattice& lattice, const FieldSpec& spec) {
    return MatrixField(spec, lattice);
}

SymMatrix MatrixField::cell_value(const Site& z) const {
    return cell_matrix(spec_, lattice_.seed_at(z));
}

SymMatrix MatrixField::radial_eval(const Point& x) const {
    const int d = spec_.dimension;
    const double r = x.norm();
    SymMatrix I = SymMatrix::Identity(d, d);
    if (r == 0.0) return I;
    const Point u = x / r;
    SymMatrix P = u * u.transpose();
    const double L = spec_.Lambda;
    SymMatrix raw = spec_.variant == RadialVariant::A1 ? SymMatrix(L * P + (I - P))
                                                       : SymMatrix(P + L * (I - P));
    SymMatrix A = r < 1.0 ? SymMatrix(I + r * (raw - I)) : raw;
    // Exact symmetry regardless of rounding in the outer products.
    return 0.5 * (A + A.transpose());
}

SymMatrix MatrixField::eval(const Point& x) const {
    if (spec_.kind == FieldKind::radial_counterexample) return radial_eval(x);
    const int d = spec_.dimension;
    const Site base = cell_of(x);
    const double rho = spec_.smoothing_radius;
    if (rho == 0.0) return cell_value(base);

    // Per axis: blend with the neighbouring cell inside a band of width rho
    // around each face.
    std::array<int, kMaxDim> nb{};
    std::array<double, kMaxDim> w_other{};
    for (int i = 0; i < d; ++i) {
        const double t = x[i] - static_cast<double>(base[i]);
        if (t < rho) {
            nb[i] = -1;
            w_other[i] = 1.0 - (t + rho) / (2.0 * rho);
        } else if (t > 1.0 - rho) {
            nb[i] = 1;
            w_other[i] = (t - (1.0 - rho)) / (2.0 * rho);
        } else {
            nb[i] = 0;
            w_other[i] = 0.0;
        }
    }
    SymMatrix A = SymMatrix::Zero(d, d);
    for (int mask = 0; mask < (1 << d); ++mask) {
        double w = 1.0;
        Site z = base;
        bool skip = false;
        for (int i = 0; i < d; ++i) {
            if (mask & (1 << i)) {
                if (nb[i] == 0) {
                    skip = true;
                    break;
                }
                w *= w_other[i];
                z[i] += nb[i];
            } else {
                w *= 1.0 - w_other[i];
            }
        }
        if (skip || w == 0.0) continue;
        A += w * cell_value(z);
    }
    return A;
}

}  // namespace homlab
