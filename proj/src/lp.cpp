#include "homlab/lp.hpp"

#include "homlab/common.hpp"

#include <cmath>
#include <vector>

namespace homlab {

namespace {

struct Tableau {
    const Eigen::MatrixXd& A;
    Eigen::VectorXd b;
    std::int64_t n = 0;  // real columns; artificials are n .. n + p - 1
    int p = 0;
    std::vector<std::int64_t> basis;
    std::vector<std::uint8_t> basic;
    Eigen::MatrixXd Binv;
    Eigen::VectorXd xB;

    Eigen::VectorXd column(std::int64_t j) const {
        if (j < n) return A.col(j);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
        e[j - n] = 1.0;
        return e;
    }

    void refactor() {
        Eigen::MatrixXd B(p, p);
        for (int i = 0; i < p; ++i) B.col(i) = column(basis[std::size_t(i)]);
        Binv = B.partialPivLu().inverse();
        xB = Binv * b;
        for (int i = 0; i < p; ++i)
            if (xB[i] < 0.0 && xB[i] > -1e-12) xB[i] = 0.0;
    }

    void pivot(int r, std::int64_t q, const Eigen::VectorXd& w, double theta) {
        xB -= theta * w;
        xB[r] = theta;
        const double wr = w[r];
        Binv.row(r) /= wr;
        for (int i = 0; i < p; ++i)
            if (i != r && w[i] != 0.0) Binv.row(i) -= w[i] * Binv.row(r);
        basic[std::size_t(basis[std::size_t(r)])] = 0;
        basis[std::size_t(r)] = q;
        basic[std::size_t(q)] = 1;
    }
};

}  // namespace

LpResult solve_standard_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& c, double tol, std::int64_t max_iterations) {
    const int p = int(A.rows());
    const std::int64_t n = A.cols();
    if (b.size() != p || c.size() != n) throw DomainError("lp: dimension mismatch");

    Eigen::MatrixXd Af = A;
    Eigen::VectorXd bf = b;
    for (int i = 0; i < p; ++i)
        if (bf[i] < 0.0) {
            bf[i] = -bf[i];
            Af.row(i) *= -1.0;
        }
    Tableau tab{Af, bf, n, p, {}, {}, {}, {}};
    tab.basis.resize(std::size_t(p));
    tab.basic.assign(std::size_t(n + p), 0);
    for (int i = 0; i < p; ++i) {
        tab.basis[std::size_t(i)] = n + i;
        tab.basic[std::size_t(n + i)] = 1;
    }
    tab.Binv = Eigen::MatrixXd::Identity(p, p);
    tab.xB = tab.b;

    const double cscale = std::max(1.0, c.size() ? c.cwiseAbs().maxCoeff() : 0.0);
    LpResult res;

    auto run_phase = [&](int phase) -> LpStatus {
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + p);
        if (phase == 1) cost.tail(p).setOnes();
        else cost.head(n) = c;
        const double dtol = tol * (phase == 1 ? 1.0 : cscale);
        int degenerate_run = 0;
        std::int64_t since_refactor = 0;
        while (true) {
            if (res.iterations >= max_iterations) return LpStatus::iteration_limit;
            Eigen::VectorXd cB(p);
            for (int i = 0; i < p; ++i) cB[i] = cost[tab.basis[std::size_t(i)]];
            const Eigen::RowVectorXd pi = cB.transpose() * tab.Binv;
            const Eigen::VectorXd d = cost.head(n) - Af.transpose() * pi.transpose();
            const bool bland = degenerate_run > 50;
            std::int64_t q = -1;
            double best = -dtol;
            for (std::int64_t j = 0; j < n; ++j) {
                if (tab.basic[std::size_t(j)] || !(d[j] < -dtol)) continue;
                if (bland) {
                    q = j;
                    break;
                }
                if (d[j] < best) {
                    best = d[j];
                    q = j;
                }
            }
            if (q < 0) return LpStatus::optimal;
            const Eigen::VectorXd w = tab.Binv * Af.col(q);
            int r = -1;
            double theta = 0.0;
            for (int i = 0; i < p; ++i) {
                if (!(w[i] > 1e-12)) continue;
                const double ratio = std::max(0.0, tab.xB[i]) / w[i];
                bool take = r < 0 || ratio < theta - 1e-14;
                if (!take && std::abs(ratio - theta) <= 1e-14)
                    take = bland ? tab.basis[std::size_t(i)] < tab.basis[std::size_t(r)] : w[i] > w[r];
                if (take) {
                    r = i;
                    theta = ratio;
                }
            }
            if (r < 0) return LpStatus::unbounded;
            degenerate_run = theta <= 1e-14 ? degenerate_run + 1 : 0;
            tab.pivot(r, q, w, theta);
            ++res.iterations;
            if (++since_refactor >= 64) {
                tab.refactor();
                since_refactor = 0;
            }
        }
    };

    LpStatus st = run_phase(1);
    if (st != LpStatus::optimal) {
        res.status = st;
        return res;
    }
    tab.refactor();
    double infeas = 0.0;
    for (int i = 0; i < p; ++i)
        if (tab.basis[std::size_t(i)] >= n) infeas += std::abs(tab.xB[i]);
    if (infeas > 1e-9 * std::max(1.0, tab.b.cwiseAbs().maxCoeff())) {
        res.status = LpStatus::infeasible;
        return res;
    }
    // Pivot zero-level artificials out where a real column allows it.
    for (int r = 0; r < p; ++r) {
        if (tab.basis[std::size_t(r)] < n) continue;
        const Eigen::VectorXd row = Af.transpose() * tab.Binv.row(r).transpose();
        std::int64_t q = -1;
        double big = 1e-9;
        for (std::int64_t j = 0; j < n; ++j)
            if (!tab.basic[std::size_t(j)] && std::abs(row[j]) > big) {
                big = std::abs(row[j]);
                q = j;
            }
        if (q < 0) continue;
        tab.xB[r] = 0.0;
        tab.pivot(r, q, tab.Binv * Af.col(q), 0.0);
    }
    tab.refactor();

    st = run_phase(2);
    res.status = st;
    if (st != LpStatus::optimal) return res;
    tab.refactor();
    res.y = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd cB(p);
    for (int i = 0; i < p; ++i) {
        const auto j = tab.basis[std::size_t(i)];
        cB[i] = j < n ? c[j] : 0.0;
        if (j < n) res.y[j] = std::max(0.0, tab.xB[i]);
    }
    Eigen::VectorXd pi = (cB.transpose() * tab.Binv).transpose();
    for (int i = 0; i < p; ++i)
        if (b[i] < 0.0) pi[i] = -pi[i];
    res.pi = pi;
    res.objective = c.dot(res.y);
    return res;
}

}  // namespace homlab
