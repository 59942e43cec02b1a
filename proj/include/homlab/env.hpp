#pragma once

/// @file env.hpp
/// Random coefficient fields on the unit-cell lattice: per-site seeds,
/// translation, single-site resampling, and the realized matrix field.

#include "homlab/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace homlab {

/// Inclusive integer box [lo, hi] in Z^d.
struct IntBox {
    Site lo;
    Site hi;

    bool contains(const Site& z) const;
    std::int64_t count() const;
    /// All sites in lexicographic order (first axis slowest).
    std::vector<Site> sites() const;
    static IntBox cube(int d, std::int64_t radius);
};

/// Seeds for every lattice site.  The seed at z is hash(base_seed, z + offset)
/// unless an override is stored for z + offset.
class SiteSeedLattice {
public:
    SiteSeedLattice() = default;
    SiteSeedLattice(std::uint64_t base_seed, int dim, IntBox window);

    std::uint64_t seed_at(const Site& z) const;
    std::uint64_t base_seed() const { return base_seed_; }
    int dim() const { return dim_; }
    const IntBox& window() const { return window_; }
    const Site& offset() const { return offset_; }
    const std::map<Site, std::uint64_t>& overrides() const { return overrides_; }

    friend bool operator==(const SiteSeedLattice&, const SiteSeedLattice&) = default;

    friend SiteSeedLattice translate(const SiteSeedLattice& lattice, const Site& z);
    friend SiteSeedLattice resample_site(const SiteSeedLattice& lattice, const Site& z,
                                         std::uint64_t fresh_seed);

private:
    std::uint64_t base_seed_ = 0;
    int dim_ = 0;
    IntBox window_;
    Site offset_;
    std::map<Site, std::uint64_t> overrides_;
};

/// T_z: the returned lattice reads site x from site x + z of the input.
SiteSeedLattice translate(const SiteSeedLattice& lattice, const Site& z);

/// Replace the seed at z; every other site is untouched.
SiteSeedLattice resample_site(const SiteSeedLattice& lattice, const Site& z,
                              std::uint64_t fresh_seed);

// ---------------------------------------------------------------------------

enum class FieldKind { scalar_checkerboard, diagonal_iid, full_symmetric, radial_counterexample };
enum class RadialVariant { A1, A2 };

std::string to_string(FieldKind k);
FieldKind field_kind_from_string(const std::string& s);

/// Finite distribution over real values.
struct DiscreteLaw {
    std::vector<double> values;
    std::vector<double> probabilities;

    double draw(double u) const;
    double min() const;
    double max() const;
    void validate(const std::string& what) const;
};

struct FieldSpec {
    FieldKind kind = FieldKind::scalar_checkerboard;
    int dimension = 2;
    double lambda = 1.0;
    double Lambda = 1.0;
    /// Dependence range; zero means the minimum 2*sqrt(d).
    double ell = 0.0;
    double smoothing_radius = 0.0;

    /// scalar_checkerboard: A = a Id with a drawn from this law.
    DiscreteLaw scalar_law;
    /// diagonal_iid: one law per axis, or a single law shared by all axes.
    std::vector<DiscreteLaw> axis_laws;
    /// full_symmetric: off-diagonal entries uniform in [-o, o] with
    /// o = dominance * (Lambda - lambda) / (2 (d - 1)); the diagonal keeps
    /// a_ii >= lambda + sum_j |a_ij|.  Values above 1 can leave [lambda, Lambda].
    double dominance = 0.5;
    RadialVariant variant = RadialVariant::A1;

    void validate() const;
    /// ell with the zero default resolved.
    double range() const;
    /// ell + 2 * smoothing_radius.
    double effective_range() const;
    bool diagonal_only() const;
    bool random() const { return kind != FieldKind::radial_counterexample; }

    static FieldSpec constant(int d, double a);
    static FieldSpec checkerboard(int d, std::vector<double> values, std::vector<double> probs);
    static FieldSpec radial(int d, RadialVariant v, double Lambda);
};

void to_json(nlohmann::json& j, const DiscreteLaw& l);
void from_json(const nlohmann::json& j, DiscreteLaw& l);
void to_json(nlohmann::json& j, const FieldSpec& s);
void from_json(const nlohmann::json& j, FieldSpec& s);

/// Matrix on the unit cell of a site with the given seed.
SymMatrix cell_matrix(const FieldSpec& spec, std::uint64_t site_seed);

SiteSeedLattice sample_environment(const FieldSpec& spec, std::uint64_t base_seed,
                                   std::int64_t window_radius = 16);

/// Realized coefficient field A(x).
class MatrixField {
public:
    MatrixField(FieldSpec spec, SiteSeedLattice lattice);

    SymMatrix eval(const Point& x) const;
    SymMatrix cell_value(const Site& z) const;
    int dim() const { return spec_.dimension; }
    const FieldSpec& spec() const { return spec_; }
    const SiteSeedLattice& lattice() const { return lattice_; }
    double effective_range() const { return spec_.effective_range(); }

private:
    SymMatrix radial_eval(const Point& x) const;

    FieldSpec spec_;
    SiteSeedLattice lattice_;
};

MatrixField realize_field(const SiteSeedLattice& lattice, const FieldSpec& spec);

}  // namespace homlab
