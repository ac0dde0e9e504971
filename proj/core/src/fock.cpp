#include "cvkerr/fock.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace cvkerr {

int interior_rows(int dim, int margin) {
    if (margin < 0) margin = dim / 4;
    int k = dim - margin;
    return k < 1 ? 1 : k;
}

double interior_opnorm(const Matrix& m, int k) {
    k = std::min<int>(k, std::min(m.rows(), m.cols()));
    Eigen::JacobiSVD<Matrix> svd(m.topLeftCorner(k, k));
    return svd.singularValues()(0);
}

FockOperator::FockOperator(int dim_, Matrix entries_) : dim(dim_), entries(std::move(entries_)) {
    if (dim < 1 || entries.rows() != dim || entries.cols() != dim)
        throw std::invalid_argument("FockOperator: entries must be dim x dim");
    if (!entries.allFinite())
        throw std::invalid_argument("FockOperator: entries must be finite");
}

FockOperator FockOperator::identity(int dim) {
    return {dim, Matrix::Identity(dim, dim)};
}

bool FockOperator::is_hermitian(double rtol) const {
    double scale = entries.cwiseAbs().maxCoeff();
    double defect = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
    return defect <= rtol * std::max(scale, 1.0);
}

double FockOperator::interior_unitarity_defect(int margin) const {
    int k = interior_rows(dim, margin);
    Matrix d = entries.adjoint() * entries - Matrix::Identity(dim, dim);
    // ||D Pi_k||_2 = largest singular value of the first k columns
    Eigen::JacobiSVD<Matrix> svd(d.leftCols(k));
    return svd.singularValues()(0);
}

FockState::FockState(int dim_, Vector coeffs_) : dim(dim_), coeffs(std::move(coeffs_)) {
    if (dim < 1 || coeffs.size() != dim)
        throw std::invalid_argument("FockState: coeffs must have length dim");
}

FockState FockState::basis(int dim, int n) {
    if (n < 0 || n >= dim) throw std::invalid_argument("FockState::basis: n out of range");
    Vector c = Vector::Zero(dim);
    c(n) = 1.0;
    return {dim, std::move(c)};
}

FockState FockState::coherent(double beta, int dim) {
    Vector c(dim);
    c(0) = std::exp(-beta * beta / 2.0);
    for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * beta / std::sqrt(double(n));
    return {dim, std::move(c)};
}

FockState FockState::superposition(std::span<const Complex> coeffs, int dim) {
    if (coeffs.empty() || int(coeffs.size()) > dim)
        throw std::invalid_argument("FockState::superposition: bad coefficient count");
    Vector c = Vector::Zero(dim);
    for (size_t i = 0; i < coeffs.size(); ++i) c(i) = coeffs[i];
    FockState s{dim, std::move(c)};
    s.normalize();
    return s;
}

void FockState::normalize() {
    double n = coeffs.norm();
    if (n == 0.0) throw std::invalid_argument("FockState::normalize: zero state");
    coeffs /= n;
}

double FockState::tail_mass(int margin) const {
    if (margin < 0) margin = dim / 4;
    int start = std::max(dim - margin, 0);
    return coeffs.tail(dim - start).squaredNorm();
}

Quadratures quadrature_operators(int dim) {
    if (dim < 2) throw std::invalid_argument("quadrature_operators: dim must be >= 2");
    Matrix a = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    Matrix adag = a.adjoint();
    Quadratures q;
    q.a = {dim, a};
    q.adag = {dim, adag};
    q.x = {dim, (adag + a) / 2.0};
    q.p = {dim, Complex(0, 1) * (adag - a) / 2.0};
    q.n = {dim, adag * a};
    return q;
}

FockOperator unitary_from_generator(const FockOperator& h, double t) {
    if (!h.is_hermitian())
        throw std::invalid_argument("unitary_from_generator: generator is not hermitian");
    if (t == 0.0) return FockOperator::identity(h.dim);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.entries);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("unitary_from_generator: eigensolver failed");
    Vector phases(h.dim);
    for (int i = 0; i < h.dim; ++i) phases(i) = std::exp(Complex(0, t * es.eigenvalues()(i)));
    Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    return {h.dim, std::move(u)};
}

FockOperator unitary_log(const FockOperator& u, double branch_tol) {
    Eigen::ComplexEigenSolver<Matrix> es(u.entries, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("unitary_log: eigensolver failed");
    for (int i = 0; i < u.dim; ++i) {
        Complex lam = es.eigenvalues()(i);
        if (std::abs(lam) > 1e-12 && M_PI - std::abs(std::arg(lam)) < branch_tol)
            throw BranchCutError("unitary_log: eigenvalue near the -1 branch cut");
    }
    Matrix l = u.entries.log();
    return {u.dim, std::move(l)};
}

FockOperator kerr_target_unitary(double t, int dim) {
    auto q = quadrature_operators(dim);
    Matrix x2 = q.x.entries * q.x.entries;
    Matrix p2 = q.p.entries * q.p.entries;
    Matrix x3 = x2 * q.x.entries;
    Matrix p3 = p2 * q.p.entries;
    Matrix x4 = x3 * q.x.entries;
    Matrix p4 = p3 * q.p.entries;
    Matrix comm = x3 * p3 - p3 * x3;
    // G = i t (X^4 + P^4) + (4/9) t [X^3, P^3] is anti-hermitian; -iG is hermitian.
    Matrix h = t * (x4 + p4) + Complex(0, -1) * (4.0 / 9.0) * t * comm;
    return unitary_from_generator({dim, std::move(h)}, 1.0);
}

FockState apply(const FockOperator& u, const FockState& s) {
    if (u.dim != s.dim) throw std::invalid_argument("apply: dimension mismatch");
    return {s.dim, u.entries * s.coeffs};
}

double fidelity_error(const FockState& a, const FockState& b) {
    if (a.dim != b.dim) throw std::invalid_argument("fidelity_error: dimension mismatch");
    double f = std::abs(a.coeffs.dot(b.coeffs));  // Eigen dot conjugates the left factor
    return std::max(0.0, 1.0 - f);
}

namespace detail {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double two_mode_interior_opnorm(const Matrix& m, int dim, int k) {
    std::vector<int> idx;
    idx.reserve(k * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) idx.push_back(i * dim + j);
    Matrix block(idx.size(), idx.size());
    for (size_t r = 0; r < idx.size(); ++r)
        for (size_t c = 0; c < idx.size(); ++c) block(r, c) = m(idx[r], idx[c]);
    Eigen::JacobiSVD<Matrix> svd(block);
    return svd.singularValues()(0);
}

}  // namespace detail

AppendixResiduals verify_appendix_identities(double t1, double t2, int dim,
                                             int interior, int dim_cap) {
    if (dim < 4) throw std::invalid_argument("verify_appendix_identities: dim too small");
    if (dim > dim_cap)
        throw std::invalid_argument("verify_appendix_identities: dim exceeds memory cap");
    if (interior < 0) interior = std::max(dim / 3, 2);

    auto q = quadrature_operators(dim);
    Matrix id = Matrix::Identity(dim, dim);
    Matrix x2 = q.x.entries * q.x.entries;
    Matrix x3 = x2 * q.x.entries;
    Matrix x4 = x3 * q.x.entries;

    using detail::kron;
    Matrix x2cube = kron(id, x3);        // X2^3
    Matrix x1p2 = kron(q.x.entries, q.p.entries);
    Matrix x1sq_x2 = kron(x2, q.x.entries);
    Matrix x1sq_p2 = kron(x2, q.p.entries);
    Matrix x1_4 = kron(x4, id);

    auto eg = [&](const Matrix& h, double t) {
        return unitary_from_generator({int(h.rows()), h}, t).entries;
    };

    // e^{-i t2 X2^3} e^{i t1 X1 P2} e^{i t2 X2^3} e^{-2 i t1 X1 P2}
    //   e^{i t2 X2^3} e^{i t1 X1 P2} e^{-i t2 X2^3}  ==  e^{(3/2) i t1^2 t2 X1^2 X2}
    Matrix prod1 = eg(x2cube, -t2) * eg(x1p2, t1) * eg(x2cube, t2) * eg(x1p2, -2 * t1) *
                   eg(x2cube, t2) * eg(x1p2, t1) * eg(x2cube, -t2);
    Matrix rhs1 = eg(x1sq_x2, 1.5 * t1 * t1 * t2);

    // Group commutator: [A, B] with A = i t1 X1^2 P2, B = i t1 X1^2 X2 is central,
    // so e^A e^B e^-A e^-B = e^{[A,B]} = e^{i (t1^2/2) X1^4} exactly.
    Matrix prod2 = eg(x1sq_p2, t1) * eg(x1sq_x2, t1) * eg(x1sq_p2, -t1) * eg(x1sq_x2, -t1);
    Matrix rhs2 = eg(x1_4, 0.5 * t1 * t1);

    AppendixResiduals r;
    r.residual1 = detail::two_mode_interior_opnorm(prod1 - rhs1, dim, interior);
    r.residual2 = detail::two_mode_interior_opnorm(prod2 - rhs2, dim, interior);
    return r;
}

}  // namespace cvkerr
