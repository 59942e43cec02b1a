#include "homlab/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homlab {

namespace {

using OffK = std::array<std::int8_t, kMaxDim>;

/// One multigrid level: a (2 half + 1)^d grid with identity boundary rows and
/// zero boundary values for corrections.
struct Level {
    int d = 0;
    std::int64_t n = 0;
    std::int64_t size = 0;
    std::array<std::int64_t, kMaxDim> stride{};
    std::vector<OffK> offk;
    std::vector<std::int64_t> delta;
    std::size_t center = 0;
    std::vector<double> w;
    mutable std::vector<double> u, f, r;

    std::vector<std::int64_t> dof;  // interior index -> grid index (direct levels only)
    std::vector<std::int64_t> dof_of;  // grid index -> interior index or -1
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;

    std::size_t noff() const { return offk.size(); }

    void init(int dim, std::int64_t points) {
        d = dim;
        n = points;
        size = 1;
        for (int i = d - 1; i >= 0; --i) {
            stride[std::size_t(i)] = size;
            size *= n;
        }
        u.assign(std::size_t(size), 0.0);
        f.assign(std::size_t(size), 0.0);
        r.assign(std::size_t(size), 0.0);
    }

    void set_offsets(std::vector<OffK> ks) {
        offk = std::move(ks);
        delta.clear();
        center = offk.size();
        for (std::size_t o = 0; o < offk.size(); ++o) {
            std::int64_t dl = 0;
            bool zero = true;
            for (int i = 0; i < d; ++i) {
                dl += offk[o][std::size_t(i)] * stride[std::size_t(i)];
                zero = zero && offk[o][std::size_t(i)] == 0;
            }
            if (zero) center = o;
            delta.push_back(dl);
        }
        if (center != 0) throw std::logic_error("multigrid level: center offset must come first");
    }

    std::int64_t interior_count() const {
        std::int64_t c = 1;
        for (int i = 0; i < d; ++i) c *= n - 2;
        return c;
    }

    /// Calls fn(base, parity) for each interior line along the last axis;
    /// base is the index of the line's k_last = 0 point.
    template <class F>
    void for_each_line(F&& fn) const {
        for_each_line_from(0, 1, std::forward<F>(fn));
    }

    /// Lines whose first coordinate is `plane` (d > 1); with first == 0 all
    /// interior lines.
    template <class F>
    void for_each_line_from(int first, std::int64_t plane, F&& fn) const {
        std::array<std::int64_t, kMaxDim> k{};
        const int lead = d - 1;
        for (int i = 0; i < lead; ++i) k[std::size_t(i)] = 1;
        if (first == 1) k[0] = plane;
        while (true) {
            std::int64_t base = 0, par = 0;
            for (int i = 0; i < lead; ++i) {
                base += k[std::size_t(i)] * stride[std::size_t(i)];
                par += k[std::size_t(i)];
            }
            fn(base, par);
            int i = lead - 1;
            while (i >= first) {
                if (++k[std::size_t(i)] <= n - 2) break;
                k[std::size_t(i)] = 1;
                --i;
            }
            if (i < first) break;
        }
    }

    /// Stencil loops with the offset count fixed at compile time for the
    /// common stencils (NO = 0 falls back to the runtime count).
    template <std::size_t NO>
    void sweep_fixed(int color, int first = 0, std::int64_t plane = 1) const {
        const std::size_t no = NO ? NO : noff();
        const std::int64_t* dl = delta.data();
        double* uu = u.data();
        const double* ww = w.data();
        const double* ff = f.data();
        for_each_line_from(first, plane, [&](std::int64_t base, std::int64_t par) {
            std::int64_t k0 = ((par + 1) % 2 == color) ? 1 : 2;
            for (std::int64_t k = k0; k <= n - 2; k += 2) {
                const std::int64_t i = base + k;
                const double* wi = ww + std::size_t(i) * no;
                double s = ff[i];
                for (std::size_t o = 1; o < no; ++o) s -= wi[o] * uu[i + dl[o]];
                uu[i] = s / wi[0];
            }
        });
    }

    template <std::size_t NO>
    void residual_fixed() const {
        const std::size_t no = NO ? NO : noff();
        const std::int64_t* dl = delta.data();
        const double* uu = u.data();
        const double* ww = w.data();
        const double* ff = f.data();
        double* rr = r.data();
        std::fill(r.begin(), r.end(), 0.0);
        for_each_line([&](std::int64_t base, std::int64_t) {
            for (std::int64_t k = 1; k <= n - 2; ++k) {
                const std::int64_t i = base + k;
                const double* wi = ww + std::size_t(i) * no;
                double s = ff[i];
                for (std::size_t o = 0; o < no; ++o) s -= wi[o] * uu[i + dl[o]];
                rr[i] = s;
            }
        });
    }

    template <std::size_t NO>
    void sweep_pair_fixed(int c0, int c1) const {
        if (d == 1) {
            sweep_fixed<NO>(c0);
            sweep_fixed<NO>(c1);
            return;
        }
        // Color c1 on plane a-1 only reads color c0 on planes a-2..a, so this
        // wavefront equals a full c0 pass followed by a full c1 pass.
        for (std::int64_t a = 1; a <= n - 1; ++a) {
            if (a <= n - 2) sweep_fixed<NO>(c0, 1, a);
            if (a >= 2) sweep_fixed<NO>(c1, 1, a - 1);
        }
    }

    void sweep_color(int color) const {
        switch (noff()) {
            case 5: return sweep_fixed<5>(color);
            case 7: return sweep_fixed<7>(color);
            case 9: return sweep_fixed<9>(color);
            case 19: return sweep_fixed<19>(color);
            case 27: return sweep_fixed<27>(color);
            default: return sweep_fixed<0>(color);
        }
    }

    /// Full pass of color c0 then of color c1.
    void sweep_pair(int c0, int c1) const {
        switch (noff()) {
            case 5: return sweep_pair_fixed<5>(c0, c1);
            case 7: return sweep_pair_fixed<7>(c0, c1);
            case 9: return sweep_pair_fixed<9>(c0, c1);
            case 19: return sweep_pair_fixed<19>(c0, c1);
            case 27: return sweep_pair_fixed<27>(c0, c1);
            default: return sweep_pair_fixed<0>(c0, c1);
        }
    }

    void residual() const {
        switch (noff()) {
            case 5: return residual_fixed<5>();
            case 7: return residual_fixed<7>();
            case 9: return residual_fixed<9>();
            case 19: return residual_fixed<19>();
            case 27: return residual_fixed<27>();
            default: return residual_fixed<0>();
        }
    }

    double interior_sup(const std::vector<double>& v) const {
        double m = 0.0;
        for_each_line([&](std::int64_t base, std::int64_t) {
            for (std::int64_t k = 1; k <= n - 2; ++k) m = std::max(m, std::abs(v[std::size_t(base + k)]));
        });
        return m;
    }

    void coords(std::int64_t idx, std::int64_t* k) const {
        for (int i = 0; i < d; ++i) {
            k[i] = idx / stride[std::size_t(i)];
            idx -= k[i] * stride[std::size_t(i)];
        }
    }

    void factorize() {
        dof.clear();
        dof_of.assign(std::size_t(size), -1);
        auto& map = dof_of;
        for_each_line([&](std::int64_t base, std::int64_t) {
            for (std::int64_t k = 1; k <= n - 2; ++k) {
                map[std::size_t(base + k)] = std::int64_t(dof.size());
                dof.push_back(base + k);
            }
        });
        std::vector<Eigen::Triplet<double>> trip;
        const std::size_t no = noff();
        for (std::size_t row = 0; row < dof.size(); ++row) {
            const std::int64_t i = dof[row];
            for (std::size_t o = 0; o < no; ++o) {
                const double v = w[std::size_t(i) * no + o];
                if (v == 0.0) continue;
                const std::int64_t col = map[std::size_t(i + delta[o])];
                if (col >= 0) trip.emplace_back(int(row), int(col), v);
            }
        }
        Eigen::SparseMatrix<double> A(int(dof.size()), int(dof.size()));
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();
        lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        lu->compute(A);
        if (lu->info() != Eigen::Success) {
            lu.reset();
            dof.clear();
            dof_of.clear();
        }
    }

    void direct_solve() const {
        Eigen::VectorXd b(static_cast<Eigen::Index>(dof.size()));
        const std::size_t no = noff();
        for (std::size_t k = 0; k < dof.size(); ++k) {
            const std::int64_t i = dof[k];
            double s = f[std::size_t(i)];
            // Couplings to boundary points move to the right side.
            for (std::size_t o = 0; o < no; ++o) {
                const std::int64_t j = i + delta[o];
                if (dof_of[std::size_t(j)] < 0) s -= w[std::size_t(i) * no + o] * u[std::size_t(j)];
            }
            b[Eigen::Index(k)] = s;
        }
        Eigen::VectorXd x = lu->solve(b);
        for (std::size_t k = 0; k < dof.size(); ++k) u[std::size_t(dof[k])] = x[Eigen::Index(k)];
    }
};

struct Transfer {
    std::int64_t fine_delta;
    double weight;  // prolongation weight prod p(delta_k)
};

/// Galerkin coarse operator R A P with bilinear P and R = 2^-d P^T.
void galerkin(const Level& fine, Level& coarse) {
    const int d = fine.d;
    int n3 = 1;
    for (int i = 0; i < d; ++i) n3 *= 3;
    std::vector<OffK> ks(static_cast<std::size_t>(n3));
    for (int t = 0; t < n3; ++t) {
        int rem = t;
        for (int i = d - 1; i >= 0; --i) {
            ks[std::size_t(t)][std::size_t(i)] = static_cast<std::int8_t>(rem % 3 - 1);
            rem /= 3;
        }
    }
    auto off_index = [&](const std::array<int, kMaxDim>& c) {
        int t = 0;
        for (int i = 0; i < d; ++i) t = t * 3 + (c[std::size_t(i)] + 1);
        return t;
    };

    // For each restriction offset delta and fine offset o, the coarse targets
    // depend only on the parity of delta + o per axis.
    struct Hit {
        int coff;
        std::array<int, kMaxDim> rel;
        double pw;
    };
    const std::size_t nof = fine.noff();
    std::vector<std::vector<std::vector<Hit>>> table(static_cast<std::size_t>(n3), std::vector<std::vector<Hit>>(nof));
    std::vector<double> rw(static_cast<std::size_t>(n3));
    std::vector<std::int64_t> fdel(static_cast<std::size_t>(n3));
    for (int t = 0; t < n3; ++t) {
        double wr = 1.0;
        std::int64_t fd = 0;
        for (int i = 0; i < d; ++i) {
            const int dl = ks[std::size_t(t)][std::size_t(i)];
            wr *= dl == 0 ? 0.5 : 0.25;  // 2^-d * p(delta)
            fd += dl * fine.stride[std::size_t(i)];
        }
        rw[std::size_t(t)] = wr;
        fdel[std::size_t(t)] = fd;
        for (std::size_t o = 0; o < nof; ++o) {
            // fine target j = 2I + delta + o; per axis offset s = delta + o in [-2, 2]
            std::vector<Hit> hits{Hit{0, {}, 1.0}};
            for (int i = 0; i < d; ++i) {
                const int s = ks[std::size_t(t)][std::size_t(i)] + fine.offk[o][std::size_t(i)];
                std::vector<Hit> next;
                for (const auto& hh : hits) {
                    if (s % 2 == 0) {
                        Hit a = hh;
                        a.rel[std::size_t(i)] = s / 2;
                        next.push_back(a);
                    } else {
                        for (int side : {-1, 1}) {
                            Hit a = hh;
                            a.rel[std::size_t(i)] = (s + side) / 2;
                            a.pw *= 0.5;
                            next.push_back(a);
                        }
                    }
                }
                hits = std::move(next);
            }
            for (auto& hh : hits) hh.coff = off_index(hh.rel);
            table[std::size_t(t)][o] = std::move(hits);
        }
    }

    std::vector<double> wc(std::size_t(coarse.size) * std::size_t(n3), 0.0);
    std::array<std::int64_t, kMaxDim> K{};
    for (std::int64_t I = 0; I < coarse.size; ++I) {
        coarse.coords(I, K.data());
        bool boundary = false;
        for (int i = 0; i < d; ++i) boundary = boundary || K[std::size_t(i)] == 0 || K[std::size_t(i)] == coarse.n - 1;
        double* row = wc.data() + std::size_t(I) * std::size_t(n3);
        if (boundary) {
            row[n3 / 2] = 1.0;
            continue;
        }
        // Coarse neighbours touching the boundary are dropped (zero correction there).
        std::array<bool, kMaxDim> lo_edge{}, hi_edge{};
        for (int i = 0; i < d; ++i) {
            lo_edge[std::size_t(i)] = K[std::size_t(i)] == 1;
            hi_edge[std::size_t(i)] = K[std::size_t(i)] == coarse.n - 2;
        }
        bool edge = false;
        for (int i = 0; i < d; ++i) edge = edge || lo_edge[std::size_t(i)] || hi_edge[std::size_t(i)];
        std::int64_t fi0 = 0;
        for (int i = 0; i < d; ++i) fi0 += 2 * K[std::size_t(i)] * fine.stride[std::size_t(i)];
        for (int t = 0; t < n3; ++t) {
            const std::int64_t fi = fi0 + fdel[std::size_t(t)];
            const double* wf = fine.w.data() + std::size_t(fi) * nof;
            for (std::size_t o = 0; o < nof; ++o) {
                const double v = wf[o];
                if (v == 0.0) continue;
                const double base = rw[std::size_t(t)] * v;
                for (const auto& hh : table[std::size_t(t)][o]) {
                    if (edge) {
                        bool out = false;
                        for (int i = 0; i < d; ++i)
                            if ((lo_edge[std::size_t(i)] && hh.rel[std::size_t(i)] < 0) ||
                                (hi_edge[std::size_t(i)] && hh.rel[std::size_t(i)] > 0))
                                out = true;
                        if (out) continue;
                    }
                    row[hh.coff] += base * hh.pw;
                }
            }
        }
    }

    // Drop offsets that vanish identically on this level.
    double scale = 0.0;
    for (std::int64_t I = 0; I < coarse.size; ++I)
        scale = std::max(scale, std::abs(wc[std::size_t(I) * std::size_t(n3) + std::size_t(n3 / 2)]));
    std::vector<int> keep{n3 / 2};
    for (int t = 0; t < n3; ++t) {
        if (t == n3 / 2) continue;
        bool any = false;
        for (std::int64_t I = 0; I < coarse.size && !any; ++I)
            any = std::abs(wc[std::size_t(I) * std::size_t(n3) + std::size_t(t)]) > 1e-14 * scale;
        if (any) keep.push_back(t);
    }
    std::vector<OffK> kept;
    for (int t : keep) kept.push_back(ks[std::size_t(t)]);
    coarse.set_offsets(kept);
    coarse.w.assign(std::size_t(coarse.size) * kept.size(), 0.0);
    for (std::int64_t I = 0; I < coarse.size; ++I)
        for (std::size_t q = 0; q < keep.size(); ++q)
            coarse.w[std::size_t(I) * kept.size() + q] =
                wc[std::size_t(I) * std::size_t(n3) + std::size_t(keep[q])];
}

}  // namespace

struct MultigridSolver::Impl {
    Grid grid;
    double eps = 0.0;
    bool transpose = false;
    std::vector<double> boundary;
    /// Center weights of the original rows.  The hierarchy is built from
    /// diag^-1 L (forward) or (diag^-1 L)^T (transpose).
    std::vector<double> diag;
    std::vector<std::uint8_t> fixed;
    SolveOptions opt;
    std::vector<Level> levels;
    std::vector<std::vector<Transfer>> transfers;  // per level l -> l+1

    /// Fine index of coarse point I (fine coordinates are twice the coarse ones).
    static std::int64_t fine_index(const Level& F, const Level& C, std::int64_t I) {
        std::array<std::int64_t, kMaxDim> K{};
        C.coords(I, K.data());
        std::int64_t fi = 0;
        for (int i = 0; i < F.d; ++i) fi += 2 * K[std::size_t(i)] * F.stride[std::size_t(i)];
        return fi;
    }

    void restrict_to(std::size_t l) const {
        const Level& F = levels[l];
        const Level& C = levels[l + 1];
        const auto& T = transfers[l];
        const double scale = std::pow(0.5, F.d);
        std::fill(C.f.begin(), C.f.end(), 0.0);
        std::fill(C.u.begin(), C.u.end(), 0.0);
        const double* fr = F.r.data();
        C.for_each_line([&](std::int64_t base, std::int64_t) {
            std::int64_t fi = fine_index(F, C, base + 1);
            for (std::int64_t k = 1; k <= C.n - 2; ++k, fi += 2) {
                double s = 0.0;
                for (const auto& t : T) s += t.weight * fr[fi + t.fine_delta];
                C.f[std::size_t(base + k)] = scale * s;
            }
        });
    }

    void prolong_add(std::size_t l) const {
        const Level& F = levels[l];
        const Level& C = levels[l + 1];
        const auto& T = transfers[l];
        double* fu = F.u.data();
        C.for_each_line([&](std::int64_t base, std::int64_t) {
            std::int64_t fi = fine_index(F, C, base + 1);
            for (std::int64_t k = 1; k <= C.n - 2; ++k, fi += 2) {
                const double e = C.u[std::size_t(base + k)];
                if (e == 0.0) continue;
                for (const auto& t : T) fu[fi + t.fine_delta] += t.weight * e;
            }
        });
    }

    void coarse_solve(const Level& L) const {
        if (L.lu) {
            L.direct_solve();
            return;
        }
        for (int s = 0; s < 50; ++s) {
            L.sweep_pair(0, 1);
        }
    }

    void vcycle(std::size_t l) const {
        const Level& L = levels[l];
        if (l + 1 == levels.size()) {
            coarse_solve(L);
            return;
        }
        for (int s = 0; s < opt.pre_smooth; ++s) {
            L.sweep_pair(0, 1);
        }
        L.residual();
        restrict_to(l);
        vcycle(l + 1);
        prolong_add(l);
        for (int s = 0; s < opt.post_smooth; ++s) {
            L.sweep_pair(1, 0);
        }
    }
};

MultigridSolver::MultigridSolver(const DiscreteOperator& op, bool transpose, SolveOptions opt)
    : impl_(std::make_unique<Impl>()) {
    Impl& S = *impl_;
    S.grid = op.grid;
    S.eps = op.eps;
    S.transpose = transpose;
    S.opt = opt;
    S.boundary = op.boundary;
    S.fixed = op.dirichlet;
    const Grid& g = op.grid;
    const int d = g.dim();

    Level fine;
    fine.init(d, g.n_axis());
    std::vector<OffK> ks;
    for (const auto& o : op.offsets) ks.push_back(o.k);
    fine.set_offsets(ks);
    const std::size_t no = op.n_offsets();
    S.diag.assign(std::size_t(g.size()), 1.0);
    std::vector<double> scaled = op.weights;
    for (std::int64_t i = 0; i < g.size(); ++i) {
        if (op.is_dirichlet(i)) continue;
        const double c = op.row(i)[0];
        if (!(c > 0.0)) throw NonMonotoneError("solve: nonpositive center weight");
        S.diag[std::size_t(i)] = c;
        for (std::size_t o = 0; o < no; ++o) scaled[std::size_t(i) * no + o] /= c;
    }
    if (!transpose) {
        fine.w = std::move(scaled);
    } else {
        std::vector<std::size_t> neg(no);
        for (std::size_t o = 0; o < no; ++o) {
            neg[o] = no;
            for (std::size_t q = 0; q < no; ++q) {
                bool match = true;
                for (int i = 0; i < d; ++i) match = match && op.offsets[q].k[std::size_t(i)] == -op.offsets[o].k[std::size_t(i)];
                if (match) neg[o] = q;
            }
            if (neg[o] == no) throw DomainError("adjoint: stencil offsets not symmetric");
        }
        fine.w.assign(op.weights.size(), 0.0);
        for (std::int64_t j = 0; j < g.size(); ++j) {
            double* wt = fine.w.data() + std::size_t(j) * no;
            if (op.is_dirichlet(j)) {
                wt[0] = 1.0;
                continue;
            }
            for (std::size_t o = 0; o < no; ++o) {
                const std::int64_t src = j + op.deltas[o];
                if (op.is_dirichlet(src)) continue;
                wt[o] = scaled[std::size_t(src) * no + neg[o]];
            }
        }
    }
    S.levels.push_back(std::move(fine));

    std::int64_t half = g.half();
    while (S.levels.back().interior_count() > opt.coarse_target && half % 2 == 0 && half / 2 >= 2) {
        half /= 2;
        Level coarse;
        coarse.init(d, 2 * half + 1);
        galerkin(S.levels.back(), coarse);
        std::vector<Transfer> T;
        int n3 = 1;
        for (int i = 0; i < d; ++i) n3 *= 3;
        for (int t = 0; t < n3; ++t) {
            int rem = t;
            std::int64_t fd = 0;
            double wgt = 1.0;
            for (int i = d - 1; i >= 0; --i) {
                const int dl = rem % 3 - 1;
                rem /= 3;
                fd += dl * S.levels.back().stride[std::size_t(i)];
                wgt *= dl == 0 ? 1.0 : 0.5;
            }
            T.push_back({fd, wgt});
        }
        S.transfers.push_back(std::move(T));
        S.levels.push_back(std::move(coarse));
    }
    Level& last = S.levels.back();
    if (last.interior_count() <= std::max<std::int64_t>(opt.direct_max, 1)) last.factorize();
}

MultigridSolver::~MultigridSolver() = default;
MultigridSolver::MultigridSolver(MultigridSolver&&) noexcept = default;
MultigridSolver& MultigridSolver::operator=(MultigridSolver&&) noexcept = default;

int MultigridSolver::levels() const { return static_cast<int>(impl_->levels.size()); }

GridFunction MultigridSolver::solve(const GridFunction& rhs, double tol, SolveStats* stats) const {
    const Impl& S = *impl_;
    if (!(rhs.grid == S.grid)) throw DomainError("solve: grid mismatch");
    if (!(tol > 0.0)) throw DomainError("solve: tol must be positive");
    const Level& L = S.levels.front();
    const Grid& g = S.grid;
    const auto& D = S.diag;
    for (std::int64_t i = 0; i < g.size(); ++i) {
        const auto k = std::size_t(i);
        if (S.fixed[k]) {
            // Identity rows carry the Dirichlet value.
            L.u[k] = S.transpose ? 0.0 : S.boundary[k];
            L.f[k] = L.u[k];
        } else {
            L.u[k] = 0.0;
            L.f[k] = S.transpose ? rhs[i] : rhs[i] / D[k];
        }
    }
    double fnorm = 0.0;
    for (std::int64_t i = 0; i < g.size(); ++i)
        if (!S.fixed[std::size_t(i)]) fnorm = std::max(fnorm, std::abs(rhs[i]));

    // Residual and solution in the caller's units.
    auto true_residual = [&] {
        L.residual();
        double m = 0.0;
        for (std::int64_t i = 0; i < g.size(); ++i) {
            const auto k = std::size_t(i);
            m = std::max(m, std::abs(S.transpose ? L.r[k] : L.r[k] * D[k]));
        }
        return m;
    };
    auto solution_sup = [&] {
        double m = 0.0;
        for (std::int64_t i = 0; i < g.size(); ++i) {
            const auto k = std::size_t(i);
            if (!S.fixed[k]) m = std::max(m, std::abs(S.transpose ? L.u[k] / D[k] : L.u[k]));
        }
        return m;
    };

    const double e2 = S.eps * S.eps;
    std::vector<double> history;
    double r0 = -1.0;
    int it = 0;
    while (true) {
        const double rn = true_residual();
        history.push_back(rn);
        if (!std::isfinite(rn)) break;
        if (r0 < 0.0) r0 = rn;
        double scale = fnorm + e2 * solution_sup();
        if (scale == 0.0) scale = r0;
        if (rn <= tol * scale || rn == 0.0) {
            GridFunction u(g);
            for (std::int64_t i = 0; i < g.size(); ++i) {
                const auto k = std::size_t(i);
                u[i] = S.transpose ? (S.fixed[k] ? 0.0 : L.u[k] / D[k]) : L.u[k];
            }
            if (stats) {
                stats->iterations = it;
                stats->levels = levels();
                stats->residual = rn;
                stats->history = history;
            }
            return u;
        }
        if (it >= S.opt.max_iterations) break;
        if (S.levels.size() == 1 && !L.lu) {
            L.sweep_pair(0, 1);
        } else if (S.levels.size() == 1) {
            L.direct_solve();
        } else {
            S.vcycle(0);
        }
        ++it;
    }
    std::ostringstream os;
    os << "solver did not converge after " << it << " cycles (residual " << history.back()
       << ", requested " << tol << " relative)";
    throw SolverError(os.str(), history);
}

GridFunction solve(const DiscreteOperator& op, const GridFunction& rhs, double tol, SolveStats* stats) {
    return MultigridSolver(op).solve(rhs, tol, stats);
}

GridFunction adjoint_solve(const DiscreteOperator& op, const GridFunction& rhs, double tol,
                           SolveStats* stats) {
    return MultigridSolver(op, true).solve(rhs, tol, stats);
}

}  // namespace homlab
