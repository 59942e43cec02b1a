#include "homlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace homlab {

namespace {

bool allowed_spacing(double h) {
    for (double a : {1.0, 0.5, 0.25, 0.125})
        if (h == a) return true;
    return false;
}

}  // namespace

Grid::Grid(Point center, double radius, double h) : center_(std::move(center)), radius_(radius), h_(h) {
    const int d = dim();
    if (d < 1 || d > kMaxDim) throw DomainError("Grid: unsupported dimension");
    if (!allowed_spacing(h)) throw DomainError("Grid: h must be one of 1, 1/2, 1/4, 1/8");
    if (!(radius > 0.0)) throw DomainError("Grid: radius must be positive");
    const double q = radius / h;
    half_ = static_cast<std::int64_t>(std::llround(q));
    if (std::abs(q - double(half_)) > 1e-9) throw DomainError("Grid: radius must be a multiple of h");
    const std::int64_t n = n_axis();
    size_ = 1;
    for (int i = d - 1; i >= 0; --i) {
        stride_[std::size_t(i)] = size_;
        size_ *= n;
    }
}

Grid origin_grid(int d, double radius, double h) { return Grid(Point::Zero(d), radius, h); }

void Grid::coords(std::int64_t idx, std::int64_t* k) const {
    for (int i = 0; i < dim(); ++i) {
        k[i] = idx / stride_[std::size_t(i)];
        idx -= k[i] * stride_[std::size_t(i)];
    }
}

std::int64_t Grid::index(const std::int64_t* k) const {
    std::int64_t idx = 0;
    for (int i = 0; i < dim(); ++i) idx += k[i] * stride_[std::size_t(i)];
    return idx;
}

Point Grid::point(std::int64_t idx) const {
    std::array<std::int64_t, kMaxDim> k{};
    coords(idx, k.data());
    Point x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = center_[i] + h_ * double(k[std::size_t(i)] - half_);
    return x;
}

bool Grid::on_boundary(std::int64_t idx) const {
    std::array<std::int64_t, kMaxDim> k{};
    coords(idx, k.data());
    for (int i = 0; i < dim(); ++i)
        if (k[std::size_t(i)] == 0 || k[std::size_t(i)] == 2 * half_) return true;
    return false;
}

std::int64_t Grid::nearest(const Point& x) const {
    std::array<std::int64_t, kMaxDim> k{};
    for (int i = 0; i < dim(); ++i) {
        const auto ki = std::llround((x[i] - center_[i]) / h_) + half_;
        if (ki < 0 || ki > 2 * half_) throw DomainError("Grid: point outside the box");
        k[std::size_t(i)] = ki;
    }
    return index(k.data());
}

std::int64_t Grid::center_index() const { return (size_ - 1) / 2; }

bool operator==(const Grid& a, const Grid& b) {
    return a.dim() == b.dim() && a.center_ == b.center_ && a.half_ == b.half_ && a.h_ == b.h_;
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(Grid g, double fill)
    : grid(std::move(g)), values(static_cast<std::size_t>(grid.size()), fill) {}

GridFunction::GridFunction(Grid g, const std::function<double(const Point&)>& f)
    : GridFunction(std::move(g)) {
    for (std::int64_t i = 0; i < grid.size(); ++i) (*this)[i] = f(grid.point(i));
}

double GridFunction::sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double GridFunction::interior_sup_norm() const {
    double m = 0.0;
    for (std::int64_t i = 0; i < grid.size(); ++i)
        if (!grid.on_boundary(i)) m = std::max(m, std::abs((*this)[i]));
    return m;
}

namespace {

void require_same(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid == b.grid)) throw DomainError("grid functions live on different grids");
}

}  // namespace

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    require_same(a, b);
    GridFunction c = a;
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] += b.values[i];
    return c;
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    require_same(a, b);
    GridFunction c = a;
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] -= b.values[i];
    return c;
}

GridFunction operator*(double s, const GridFunction& a) {
    GridFunction c = a;
    for (double& v : c.values) v *= s;
    return c;
}

double interior_dot(const GridFunction& a, const GridFunction& b) {
    require_same(a, b);
    double s = 0.0;
    for (std::int64_t i = 0; i < a.grid.size(); ++i)
        if (!a.grid.on_boundary(i)) s += a[i] * b[i];
    return s;
}

// ---------------------------------------------------------------------------
// Flat binary layout: "HLGF", int32 d, d doubles center, double radius,
// double h, uint64 count, count doubles (row-major, first axis slowest).

void write_binary(const GridFunction& u, std::ostream& os) {
    const char magic[4] = {'H', 'L', 'G', 'F'};
    os.write(magic, 4);
    const std::int32_t d = u.grid.dim();
    os.write(reinterpret_cast<const char*>(&d), sizeof d);
    for (int i = 0; i < d; ++i) {
        const double c = u.grid.center()[i];
        os.write(reinterpret_cast<const char*>(&c), sizeof c);
    }
    const double r = u.grid.radius(), h = u.grid.h();
    os.write(reinterpret_cast<const char*>(&r), sizeof r);
    os.write(reinterpret_cast<const char*>(&h), sizeof h);
    const std::uint64_t n = u.values.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(u.values.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
}

GridFunction read_binary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "HLGF", 4) != 0) throw DomainError("read_binary: bad magic");
    std::int32_t d = 0;
    is.read(reinterpret_cast<char*>(&d), sizeof d);
    if (d < 1 || d > kMaxDim) throw DomainError("read_binary: bad dimension");
    Point c(d);
    for (int i = 0; i < d; ++i) is.read(reinterpret_cast<char*>(&c[i]), sizeof(double));
    double r = 0, h = 0;
    is.read(reinterpret_cast<char*>(&r), sizeof r);
    is.read(reinterpret_cast<char*>(&h), sizeof h);
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    GridFunction u(Grid(c, r, h));
    if (n != u.values.size()) throw DomainError("read_binary: payload size mismatch");
    is.read(reinterpret_cast<char*>(u.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw DomainError("read_binary: truncated payload");
    return u;
}

void write_csv_slice(const GridFunction& u, std::ostream& os, int a0, int a1) {
    const Grid& g = u.grid;
    if (a0 == a1 || a0 < 0 || a1 < 0 || a0 >= g.dim() || a1 >= g.dim())
        throw DomainError("write_csv_slice: bad axes");
    os << "x" << a0 << ",x" << a1 << ",value\n";
    std::array<std::int64_t, kMaxDim> k{};
    k.fill(g.half());
    char buf[96];
    for (std::int64_t i = 0; i < g.n_axis(); ++i)
        for (std::int64_t j = 0; j < g.n_axis(); ++j) {
            k[std::size_t(a0)] = i;
            k[std::size_t(a1)] = j;
            const auto idx = g.index(k.data());
            const Point x = g.point(idx);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x[a0], x[a1], u[idx]);
            os << buf;
        }
}

// ---------------------------------------------------------------------------

std::vector<Offset> stencil_offsets(int d, bool cross_terms) {
    std::vector<Offset> out;
    out.push_back(Offset{});
    for (int i = 0; i < d; ++i)
        for (int s : {1, -1}) {
            Offset o;
            o.k[std::size_t(i)] = static_cast<std::int8_t>(s);
            out.push_back(o);
        }
    if (cross_terms)
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                for (int sj : {1, -1})
                    for (int s : {1, -1}) {
                        Offset o;
                        o.k[std::size_t(i)] = static_cast<std::int8_t>(s);
                        o.k[std::size_t(j)] = static_cast<std::int8_t>(s * sj);
                        out.push_back(o);
                    }
    return out;
}

void stencil_row(const SymMatrix& A, double eps, double h, const std::vector<Offset>& offsets,
                 double* w) {
    const int d = static_cast<int>(A.rows());
    const bool cross = offsets.size() > std::size_t(1 + 2 * d);
    std::fill(w, w + offsets.size(), 0.0);
    const double ih2 = 1.0 / (h * h);
    double center = 0.0;
    for (int i = 0; i < d; ++i) {
        double off = 0.0;
        for (int j = 0; j < d; ++j)
            if (j != i) off += std::abs(A(i, j));
        if (!cross && off != 0.0)
            throw DomainError("stencil_row: off-diagonal entries need cross-term offsets");
        const double c = A(i, i) - off;
        w[1 + 2 * i] = -c * ih2;
        w[2 + 2 * i] = -c * ih2;
        center += 2.0 * c * ih2;
    }
    if (cross) {
        std::size_t p = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j, ++p) {
                const double a = A(i, j);
                const std::size_t base = std::size_t(1 + 2 * d) + 4 * p;
                // e_i + e_j pair when a >= 0, e_i - e_j pair otherwise.
                const std::size_t at = a >= 0.0 ? base : base + 2;
                w[at] = -std::abs(a) * ih2;
                w[at + 1] = -std::abs(a) * ih2;
                center += 2.0 * std::abs(a) * ih2;
            }
    }
    w[0] = eps * eps + center;
}

std::vector<Offset> wide_offsets(int d) {
    auto out = stencil_offsets(d, true);
    // Remaining directions of {-1,0,1}^d with at least three nonzero entries,
    // first nonzero entry positive, each followed by its negative.
    std::array<int, kMaxDim> v{};
    int total = 1;
    for (int i = 0; i < d; ++i) total *= 3;
    for (int t = 0; t < total; ++t) {
        int rem = t, nz = 0, first = 0;
        for (int i = d - 1; i >= 0; --i) {
            v[std::size_t(i)] = rem % 3 - 1;
            rem /= 3;
        }
        for (int i = 0; i < d; ++i)
            if (v[std::size_t(i)] != 0) {
                if (nz == 0) first = v[std::size_t(i)];
                ++nz;
            }
        if (nz < 3 || first < 0) continue;
        for (int s : {1, -1}) {
            Offset o;
            for (int i = 0; i < d; ++i) o.k[std::size_t(i)] = static_cast<std::int8_t>(s * v[std::size_t(i)]);
            out.push_back(o);
        }
    }
    return out;
}

namespace {

/// Lawson-Hanson nonnegative least squares: min |B x - b| subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& B, const Eigen::VectorXd& b) {
    const Eigen::Index n = B.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(std::size_t(n), false);
    const double tol = 1e-13 * std::max(1.0, B.cwiseAbs().maxCoeff());
    for (int outer = 0; outer < 3 * int(n); ++outer) {
        const Eigen::VectorXd grad = B.transpose() * (b - B * x);
        Eigen::Index best = -1;
        double gmax = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[std::size_t(j)] && grad[j] > gmax) {
                gmax = grad[j];
                best = j;
            }
        if (best < 0) break;
        passive[std::size_t(best)] = true;
        while (true) {
            std::vector<Eigen::Index> P;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[std::size_t(j)]) P.push_back(j);
            Eigen::MatrixXd BP(B.rows(), Eigen::Index(P.size()));
            for (std::size_t k = 0; k < P.size(); ++k) BP.col(Eigen::Index(k)) = B.col(P[k]);
            const Eigen::VectorXd z = BP.colPivHouseholderQr().solve(b);
            bool feasible = true;
            for (Eigen::Index k = 0; k < z.size(); ++k) feasible = feasible && z[k] > 0.0;
            if (feasible) {
                x.setZero();
                for (std::size_t k = 0; k < P.size(); ++k) x[P[k]] = z[Eigen::Index(k)];
                break;
            }
            double alpha = 1.0;
            for (std::size_t k = 0; k < P.size(); ++k) {
                const double zk = z[Eigen::Index(k)], xk = x[P[k]];
                if (zk <= 0.0) alpha = std::min(alpha, xk / (xk - zk));
            }
            for (std::size_t k = 0; k < P.size(); ++k)
                x[P[k]] += alpha * (z[Eigen::Index(k)] - x[P[k]]);
            for (std::size_t k = 0; k < P.size(); ++k)
                if (x[P[k]] <= 1e-15) {
                    x[P[k]] = 0.0;
                    passive[std::size_t(P[k])] = false;
                }
        }
    }
    return x;
}

}  // namespace

bool wide_stencil_row(const SymMatrix& A, double eps, double h, const std::vector<Offset>& offsets,
                      double* w) {
    const int d = static_cast<int>(A.rows());
    const std::size_t pairs = (offsets.size() - 1) / 2;
    const Eigen::Index m = d * (d + 1) / 2;
    Eigen::MatrixXd B(m, Eigen::Index(pairs));
    Eigen::VectorXd b(m);
    Eigen::Index r = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j, ++r) {
            b[r] = A(i, j);
            for (std::size_t p = 0; p < pairs; ++p) {
                const auto& k = offsets[1 + 2 * p].k;
                B(r, Eigen::Index(p)) = double(k[std::size_t(i)] * k[std::size_t(j)]);
            }
        }
    const Eigen::VectorXd alpha = nnls(B, b);
    if ((B * alpha - b).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()))
        return false;
    std::fill(w, w + offsets.size(), 0.0);
    const double ih2 = 1.0 / (h * h);
    double center = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        w[1 + 2 * p] = -alpha[Eigen::Index(p)] * ih2;
        w[2 + 2 * p] = -alpha[Eigen::Index(p)] * ih2;
        center += 2.0 * alpha[Eigen::Index(p)] * ih2;
    }
    w[0] = eps * eps + center;
    return true;
}

namespace {

DiscreteOperator make_operator(const Grid& grid, double eps, bool cross, bool wide = false) {
    if (!(eps >= 0.0)) throw DomainError("assemble: eps must be nonnegative");
    DiscreteOperator op;
    op.grid = grid;
    op.eps = eps;
    op.offsets = wide ? wide_offsets(grid.dim()) : stencil_offsets(grid.dim(), cross);
    for (const auto& o : op.offsets) {
        std::int64_t delta = 0;
        for (int i = 0; i < grid.dim(); ++i) delta += o.k[std::size_t(i)] * grid.stride(i);
        op.deltas.push_back(delta);
    }
    op.weights.assign(static_cast<std::size_t>(grid.size()) * op.offsets.size(), 0.0);
    op.boundary.assign(static_cast<std::size_t>(grid.size()), 0.0);
    op.dirichlet.assign(static_cast<std::size_t>(grid.size()), 0);
    for (std::int64_t i = 0; i < grid.size(); ++i)
        if (grid.on_boundary(i)) op.dirichlet[std::size_t(i)] = 1;
    return op;
}

/// Returns false when some row has a positive off-center weight.  With
/// `wide` offsets such rows are replaced by the wide decomposition when one
/// exists.
template <class Eval>
bool fill_rows(DiscreteOperator& op, Eval&& eval, bool wide) {
    const Grid& g = op.grid;
    const std::size_t no = op.offsets.size();
    bool ok = true;
    for (std::int64_t i = 0; i < g.size(); ++i) {
        double* w = op.weights.data() + std::size_t(i) * no;
        if (op.is_dirichlet(i)) {
            w[0] = 1.0;
            continue;
        }
        const SymMatrix A = eval(g.point(i));
        stencil_row(A, op.eps, g.h(), op.offsets, w);
        bool row_ok = true;
        for (std::size_t o = 1; o < no; ++o) row_ok = row_ok && w[o] <= 0.0;
        if (!row_ok && wide) {
            std::vector<double> alt(no);
            if (wide_stencil_row(A, op.eps, g.h(), op.offsets, alt.data())) {
                std::copy(alt.begin(), alt.end(), w);
                row_ok = true;
            }
        }
        ok = ok && row_ok;
    }
    op.monotone = check_monotone(op).is_monotone;
    return ok;
}

template <class Eval>
DiscreteOperator assemble_with_fallback(const Grid& grid, double eps, bool cross, Eval&& eval) {
    DiscreteOperator op = make_operator(grid, eps, cross);
    if (fill_rows(op, eval, false) || !cross || grid.dim() < 3) return op;
    op = make_operator(grid, eps, cross, true);
    fill_rows(op, eval, true);
    return op;
}

}  // namespace

DiscreteOperator assemble(const MatrixField& field, double eps, const Grid& grid) {
    if (grid.dim() != field.dim()) throw DomainError("assemble: dimension mismatch");
    return assemble_with_fallback(grid, eps, !field.spec().diagonal_only(),
                                  [&](const Point& x) { return field.eval(x); });
}

DiscreteOperator assemble(const std::function<SymMatrix(const Point&)>& A, int d, bool cross,
                          double eps, const Grid& grid) {
    if (grid.dim() != d) throw DomainError("assemble: dimension mismatch");
    return assemble_with_fallback(grid, eps, cross, A);
}

void DiscreteOperator::set_boundary(const std::function<double(const Point&)>& g) {
    for (std::int64_t i = 0; i < grid.size(); ++i)
        boundary[std::size_t(i)] = is_dirichlet(i) ? g(grid.point(i)) : 0.0;
}

void DiscreteOperator::set_boundary(double c) {
    for (std::int64_t i = 0; i < grid.size(); ++i)
        boundary[std::size_t(i)] = is_dirichlet(i) ? c : 0.0;
}

void DiscreteOperator::set_dirichlet_outside(const std::function<bool(const Point&)>& inside) {
    const std::size_t no = offsets.size();
    for (std::int64_t i = 0; i < grid.size(); ++i) {
        if (is_dirichlet(i) || inside(grid.point(i))) continue;
        dirichlet[std::size_t(i)] = 1;
        double* w = weights.data() + std::size_t(i) * no;
        std::fill(w, w + no, 0.0);
        w[0] = 1.0;
    }
}

MonotoneReport check_monotone(const DiscreteOperator& op) {
    MonotoneReport rep;
    rep.margin = std::numeric_limits<double>::infinity();
    const Grid& g = op.grid;
    const std::size_t no = op.n_offsets();
    for (std::int64_t i = 0; i < g.size(); ++i) {
        if (op.is_dirichlet(i)) continue;
        const double* w = op.row(i);
        double m = w[0];
        for (std::size_t o = 1; o < no; ++o) m = std::min(m, -w[o]);
        if (m < rep.margin) {
            rep.margin = m;
            rep.worst_row = i;
        }
    }
    if (rep.worst_row < 0) {
        rep.margin = 0.0;
        return rep;
    }
    rep.worst_point = g.point(rep.worst_row);
    const double* w = op.row(rep.worst_row);
    rep.is_monotone = rep.margin >= 0.0 && w[0] > 0.0;
    if (rep.margin >= 0.0) {
        // Center weights must also be strictly positive everywhere.
        for (std::int64_t i = 0; i < g.size(); ++i)
            if (!op.is_dirichlet(i) && !(op.row(i)[0] > 0.0)) {
                rep.is_monotone = false;
                rep.worst_row = i;
                rep.worst_point = g.point(i);
                break;
            }
    }
    return rep;
}

GridFunction apply(const DiscreteOperator& op, const GridFunction& u) {
    if (!(u.grid == op.grid)) throw DomainError("apply: grid mismatch");
    GridFunction out(op.grid);
    const std::size_t no = op.n_offsets();
    for (std::int64_t i = 0; i < op.grid.size(); ++i) {
        if (op.is_dirichlet(i)) {
            out[i] = u[i];
            continue;
        }
        const double* w = op.row(i);
        double s = 0.0;
        for (std::size_t o = 0; o < no; ++o) s += w[o] * u[i + op.deltas[o]];
        out[i] = s;
    }
    return out;
}

}  // namespace homlab
