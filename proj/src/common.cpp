#include "homlab/common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace homlab {

Site::Site(std::initializer_list<std::int64_t> coords) : dim(static_cast<int>(coords.size())) {
    if (dim > kMaxDim) throw DomainError("Site: dimension exceeds kMaxDim");
    std::size_t i = 0;
    for (auto v : coords) c[i++] = v;
}

Site operator+(const Site& a, const Site& b) {
    Site s(a.dim);
    for (int i = 0; i < a.dim; ++i) s[i] = a[i] + b[i];
    return s;
}

Site operator-(const Site& a, const Site& b) {
    Site s(a.dim);
    for (int i = 0; i < a.dim; ++i) s[i] = a[i] - b[i];
    return s;
}

double Site::norm() const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += static_cast<double>(c[i]) * static_cast<double>(c[i]);
    return std::sqrt(s);
}

std::string Site::str() const {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < dim; ++i) os << (i ? "," : "") << c[i];
    os << ')';
    return os.str();
}

Site cell_of(const Point& x) {
    Site s(static_cast<int>(x.size()));
    for (int i = 0; i < s.dim; ++i) s[i] = static_cast<std::int64_t>(std::floor(x[i]));
    return s;
}

std::uint64_t hash_site(std::uint64_t base_seed, const Site& z) {
    std::uint64_t h = mix64(base_seed ^ 0xa0761d6478bd642fULL);
    for (int i = 0; i < z.dim; ++i) h = hash_combine(h, static_cast<std::uint64_t>(z[i]));
    return h;
}

double spectral_norm(const SymMatrix& M) {
    Eigen::SelfAdjointEigenSolver<SymMatrix> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace homlab
