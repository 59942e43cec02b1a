#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace homlab {

/// Largest supported spatial dimension.  Small fixed-capacity storage keeps
/// per-point field evaluation allocation free.
inline constexpr int kMaxDim = 5;

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using SymMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Integer lattice site z in Z^d.
struct Site {
    int dim = 0;
    std::array<std::int64_t, kMaxDim> c{};

    Site() = default;
    explicit Site(int d) : dim(d) {}
    Site(std::initializer_list<std::int64_t> coords);

    std::int64_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    std::int64_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    friend Site operator+(const Site& a, const Site& b);
    friend Site operator-(const Site& a, const Site& b);
    friend bool operator==(const Site& a, const Site& b) = default;
    friend auto operator<=>(const Site& a, const Site& b) = default;

    double norm() const;
    std::string str() const;
};

/// Largest absolute eigenvalue.
double spectral_norm(const SymMatrix& M);

/// Unit cell containing x: floor of each coordinate.
Site cell_of(const Point& x);

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSpec : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ResourceBudgetError : Error {
    using Error::Error;
};

struct DegenerateError : Error {
    using Error::Error;
};

struct NonMonotoneError : Error {
    using Error::Error;
};

/// Iterative solve failed to reach the requested residual.
struct SolverError : Error {
    SolverError(const std::string& what, std::vector<double> history)
        : Error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

// ---------------------------------------------------------------------------
// Hashing.  splitmix64 finalizer; used both for per-site seeds and for
// deriving per-sample seeds.

constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
}

std::uint64_t hash_site(std::uint64_t base_seed, const Site& z);

/// Stream of uniform doubles drawn from a single 64-bit seed.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

}  // namespace homlab
