#pragma once

#include <array>
#include <iosfwd>

#include "cvkerr/fock.hpp"

namespace cvkerr {

enum class Quadrature { X, P };

/// Phase-polynomial coefficients: coeffs[k] multiplies y^k for k = 1..4
/// (index 0 is unused; constants are global phase and never stored).
using PolyCoeffs = std::array<double, 5>;

inline int poly_degree(const PolyCoeffs& c) {
    for (int k = 4; k >= 1; --k)
        if (c[k] != 0.0) return k;
    return 0;
}

/// Uniform symmetric position grid x_j = (j - n/2) dx, j = 0..n-1.
/// Fourier self-duality (the scaled transform maps the lattice to itself and
/// F^4 = I exactly) requires n dx^2 = pi.
struct GridSpec {
    double x_max = 0.0;
    int n_points = 0;

    GridSpec() = default;
    GridSpec(double x_max_, int n_points_);

    double dx() const { return 2.0 * x_max / n_points; }
    double x(int j) const { return (j - n_points / 2) * dx(); }
    bool self_dual(double tol = 1e-12) const;

    static GridSpec self_dual_grid(int n_points);
    /// Self-dual grid with the same point count.
    GridSpec nearest_self_dual() const;

    bool operator==(const GridSpec& o) const;
};

struct GridState {
    GridSpec spec;
    Vector values;

    GridState() = default;
    GridState(GridSpec spec_, Vector values_);

    double norm() const { return values.norm() * std::sqrt(spec.dx()); }
    void normalize();
    /// |psi|^2 mass within `edge_fraction` of each grid edge.
    double boundary_mass(double edge_fraction = 0.05) const;
};

/// psi(x) = sum_n c_n u_n(x) with u_n the hbar = 1/2 oscillator
/// eigenfunctions, u_0(x) = (2/pi)^{1/4} e^{-x^2}.
GridState fock_to_position(const FockState& s, const GridSpec& g);

/// c_n = sum_j u_n(x_j)* psi(x_j) dx. Throws TruncationError when the
/// reconstructed norm drops below 0.999.
FockState position_to_fock(const GridState& s, int dim);

enum class FourierDirection { forward, inverse };

/// Scaled Fourier gate (F psi)(x) = (1/sqrt(pi)) int e^{2ixy} psi(y) dy,
/// realized exactly on the self-dual lattice. Throws AliasingError when the
/// output boundary mass exceeds `alias_tol`.
GridState fourier_gate(const GridState& s, FourierDirection dir, double alias_tol = 1e-6);

/// e^{i sum_k c_k Q^k}. X basis multiplies pointwise; P basis conjugates the
/// sign-flipped X version with the Fourier gate: e^{ig(P)} = F^dag e^{ig(-X)} F.
GridState apply_phase_polynomial(const GridState& s, Quadrature basis, const PolyCoeffs& coeffs);

double fidelity_error(const GridState& a, const GridState& b);

/// CSV with columns x, re, im (17 significant digits).
void write_csv(const GridState& s, std::ostream& out);
GridState read_csv(std::istream& in);

namespace detail {
/// Rows 0..dim-1 hold u_n sampled on the grid (each row renormalized on the lattice).
Eigen::MatrixXd oscillator_eigenfunctions(int dim, const GridSpec& g);
/// Unnormalized scaled DFT used by fourier_gate and the homodyne correlator.
void raw_dft(Vector& data, int sign);
}  // namespace detail

}  // namespace cvkerr
