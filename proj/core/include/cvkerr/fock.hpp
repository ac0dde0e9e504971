#pragma once

#include <complex>
#include <span>

#include <Eigen/Dense>

#include "cvkerr/errors.hpp"

namespace cvkerr {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Dimensionless quadratures in hbar = 1/2 units: X = (a^dag + a)/2,
// P = i(a^dag - a)/2, [X, P] = i/2 on the interior block of the truncated basis.

/// Number of rows of the trusted interior block |0..k-1> for a truncation
/// dimension `dim` and top margin `margin` (defaults to dim/4).
int interior_rows(int dim, int margin = -1);

/// Spectral norm of the top-left k x k block.
double interior_opnorm(const Matrix& m, int k);

/// Dense operator on the truncated number basis |0> ... |dim-1>.
struct FockOperator {
    int dim = 0;
    Matrix entries;

    FockOperator() = default;
    FockOperator(int dim_, Matrix entries_);

    static FockOperator identity(int dim);

    FockOperator adjoint() const { return {dim, entries.adjoint()}; }

    /// max |M - M^dag| <= rtol * max |M|.
    bool is_hermitian(double rtol = 1e-12) const;

    /// ||(U^dag U - I) Pi_k||_2 with Pi_k the interior projector.
    double interior_unitarity_defect(int margin = -1) const;
};

/// Single-mode state as Fock coefficients.
struct FockState {
    int dim = 0;
    Vector coeffs;

    FockState() = default;
    FockState(int dim_, Vector coeffs_);

    static FockState basis(int dim, int n);
    static FockState coherent(double beta, int dim);
    static FockState superposition(std::span<const Complex> c, int dim);

    double norm() const { return coeffs.norm(); }
    void normalize();
    /// Probability mass on |dim-margin> and above (margin defaults to dim/4).
    double tail_mass(int margin = -1) const;
};

/// Two-mode operator with mode 1 on the slow index: entry ((i1,i2),(j1,j2))
/// sits at (i1*dim + i2, j1*dim + j2).
struct TwoModeOperator {
    int dim = 0;  // per mode
    Matrix entries;
};

struct Quadratures {
    FockOperator a, adag, x, p, n;
};

/// Ladder and quadrature operators; a|n> = sqrt(n)|n-1>.
Quadratures quadrature_operators(int dim);

/// exp(i t H) for hermitian H, via eigendecomposition. t = 0 returns the
/// exact identity.
FockOperator unitary_from_generator(const FockOperator& h, double t);

/// Principal matrix logarithm of an interior-unitary operator. Throws
/// BranchCutError when an eigenvalue sits within `branch_tol` of the negative
/// real axis (reduce t and retry).
FockOperator unitary_log(const FockOperator& u, double branch_tol = 1e-9);

/// exp(G) with G = i t (X^4 + P^4) + (4/9) t [X^3, P^3], exponentiated through
/// the hermitian generator -iG. This is the reference evolution every
/// decomposition in this library targets.
FockOperator kerr_target_unitary(double t, int dim);

FockState apply(const FockOperator& u, const FockState& s);

/// epsilon = 1 - |<a|b>|.
double fidelity_error(const FockState& a, const FockState& b);

struct AppendixResiduals {
    double residual1 = 0.0;  // seven-factor product vs exp((3/2) i t1^2 t2 X1^2 X2)
    double residual2 = 0.0;  // group commutator vs exp(i (t1^2/2) X1^4)
};

/// Builds both two-mode gate products from exponentials and returns
/// interior-block operator-norm residuals against their closed forms.
/// The second product uses the group-commutator ordering
/// e^A e^B e^-A e^-B with A = i t1 X1^2 P2, B = i t1 X1^2 X2, for which
/// [A, B] commutes with A and B and the identity is exact.
///
/// `interior` is the trusted rows per mode; the default dim/3 keeps the
/// residuals at truncation level for |t| <= 0.1 (the quartic-order products
/// corrupt roughly the upper half of a 30-level basis).
AppendixResiduals verify_appendix_identities(double t1, double t2, int dim,
                                             int interior = -1, int dim_cap = 64);

namespace detail {
Matrix kron(const Matrix& a, const Matrix& b);
/// Spectral norm of the two-mode interior block (rows with both mode indices < k).
double two_mode_interior_opnorm(const Matrix& m, int dim, int k);
}  // namespace detail

}  // namespace cvkerr
