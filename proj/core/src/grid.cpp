#include "cvkerr/grid.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include <fftw3.h>

namespace cvkerr {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct PlanEntry {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;  // FFTW_FORWARD, e^{-2 pi i jk/n}
    fftw_plan bwd = nullptr;  // FFTW_BACKWARD, e^{+2 pi i jk/n}
};

std::mutex g_fft_mutex;
std::map<int, PlanEntry>& plan_cache() {
    static std::map<int, PlanEntry> cache;
    return cache;
}

PlanEntry& plans_for(int n) {
    auto& cache = plan_cache();
    auto it = cache.find(n);
    if (it == cache.end()) {
        PlanEntry e;
        e.buf = fftw_alloc_complex(n);
        e.fwd = fftw_plan_dft_1d(n, e.buf, e.buf, FFTW_FORWARD, FFTW_ESTIMATE);
        e.bwd = fftw_plan_dft_1d(n, e.buf, e.buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        it = cache.emplace(n, e).first;
    }
    return it->second;
}

}  // namespace

namespace detail {

void raw_dft(Vector& data, int sign) {
    const int n = int(data.size());
    std::lock_guard<std::mutex> lock(g_fft_mutex);
    PlanEntry& e = plans_for(n);
    for (int i = 0; i < n; ++i) {
        e.buf[i][0] = data(i).real();
        e.buf[i][1] = data(i).imag();
    }
    fftw_execute(sign == FFTW_FORWARD ? e.fwd : e.bwd);
    for (int i = 0; i < n; ++i) data(i) = Complex(e.buf[i][0], e.buf[i][1]);
}

}  // namespace detail

GridSpec::GridSpec(double x_max_, int n_points_) : x_max(x_max_), n_points(n_points_) {
    if (x_max <= 0.0) throw std::invalid_argument("GridSpec: x_max must be positive");
    if (n_points < 256 || !power_of_two(n_points))
        throw std::invalid_argument("GridSpec: n_points must be a power of two >= 256");
}

bool GridSpec::self_dual(double tol) const {
    return std::abs(n_points * dx() * dx() - M_PI) <= tol;
}

GridSpec GridSpec::self_dual_grid(int n_points) {
    double dx = std::sqrt(M_PI / n_points);
    return GridSpec(n_points / 2 * dx, n_points);
}

GridSpec GridSpec::nearest_self_dual() const {
    return self_dual_grid(n_points);
}

bool GridSpec::operator==(const GridSpec& o) const {
    return n_points == o.n_points && x_max == o.x_max;
}

GridState::GridState(GridSpec spec_, Vector values_) : spec(spec_), values(std::move(values_)) {
    if (values.size() != spec.n_points)
        throw std::invalid_argument("GridState: values must have n_points entries");
}

void GridState::normalize() {
    double n = norm();
    if (n == 0.0) throw std::invalid_argument("GridState::normalize: zero state");
    values /= n;
}

double GridState::boundary_mass(double edge_fraction) const {
    const int n = spec.n_points;
    int edge = std::max(1, int(n * edge_fraction));
    double m = 0.0;
    for (int j = 0; j < edge; ++j) m += std::norm(values(j)) + std::norm(values(n - 1 - j));
    return m * spec.dx();
}

namespace detail {

Eigen::MatrixXd oscillator_eigenfunctions(int dim, const GridSpec& g) {
    const int n = g.n_points;
    Eigen::MatrixXd u(dim, n);
    const double c0 = std::pow(2.0 / M_PI, 0.25);
    for (int j = 0; j < n; ++j) {
        double x = g.x(j);
        u(0, j) = c0 * std::exp(-x * x);
        if (dim > 1) u(1, j) = 2.0 * x * u(0, j);
    }
    for (int m = 1; m + 1 < dim; ++m) {
        double a = 2.0 / std::sqrt(m + 1.0);
        double b = std::sqrt(m / (m + 1.0));
        for (int j = 0; j < n; ++j) u(m + 1, j) = a * g.x(j) * u(m, j) - b * u(m - 1, j);
    }
    // lattice renormalization keeps round trips exact against recurrence drift
    double dx = g.dx();
    for (int m = 0; m < dim; ++m) {
        double nrm = u.row(m).norm() * std::sqrt(dx);
        if (nrm > 0.0) u.row(m) /= nrm;
    }
    return u;
}

}  // namespace detail

GridState fock_to_position(const FockState& s, const GridSpec& g) {
    Eigen::MatrixXd u = detail::oscillator_eigenfunctions(s.dim, g);
    Vector v = u.transpose().cast<Complex>() * s.coeffs;
    GridState out{g, std::move(v)};
    if (out.boundary_mass() > 1e-8)
        throw std::domain_error("fock_to_position: grid too small for this state");
    out.normalize();
    return out;
}

FockState position_to_fock(const GridState& s, int dim) {
    if (dim < 2) throw std::invalid_argument("position_to_fock: dim must be >= 2");
    Eigen::MatrixXd u = detail::oscillator_eigenfunctions(dim, s.spec);
    Vector c = (u.cast<Complex>() * s.values) * s.spec.dx();
    double nrm = c.norm();
    if (nrm < 0.999)
        throw TruncationError("position_to_fock: reconstructed norm " + std::to_string(nrm));
    c /= nrm;
    return {dim, std::move(c)};
}

GridState fourier_gate(const GridState& s, FourierDirection dir, double alias_tol) {
    if (!s.spec.self_dual())
        throw std::domain_error("fourier_gate: grid is not self-dual (n dx^2 != pi)");
    const int n = s.spec.n_points;
    // With n dx^2 = pi and j, m offset by n/2:
    //   (F psi)_m = (dx/sqrt(pi)) (-1)^m sum_j (-1)^j e^{+- 2 pi i jm/n} psi_j
    // (n divisible by 4 makes the e^{i pi n/2} factor unity).
    Vector v(n);
    for (int j = 0; j < n; ++j) v(j) = (j & 1) ? -s.values(j) : s.values(j);
    detail::raw_dft(v, dir == FourierDirection::forward ? FFTW_BACKWARD : FFTW_FORWARD);
    double scale = s.spec.dx() / std::sqrt(M_PI);
    for (int m = 0; m < n; ++m) v(m) *= (m & 1) ? -scale : scale;
    GridState out{s.spec, std::move(v)};
    if (out.boundary_mass() > alias_tol)
        throw AliasingError("fourier_gate: output boundary mass " +
                            std::to_string(out.boundary_mass()));
    return out;
}

GridState apply_phase_polynomial(const GridState& s, Quadrature basis, const PolyCoeffs& coeffs) {
    if (poly_degree(coeffs) == 0) return s;
    auto phase_mult = [](GridState st, const PolyCoeffs& c) {
        for (int j = 0; j < st.spec.n_points; ++j) {
            double x = st.spec.x(j);
            double ph = ((c[4] * x + c[3]) * x + c[2]) * x * x + c[1] * x;
            st.values(j) *= std::exp(Complex(0, ph));
        }
        return st;
    };
    if (basis == Quadrature::X) return phase_mult(s, coeffs);
    // e^{ig(P)} = F^dag e^{ig(-X)} F
    PolyCoeffs flipped{};
    for (int k = 1; k <= 4; ++k) flipped[k] = (k % 2 == 0) ? coeffs[k] : -coeffs[k];
    GridState t = fourier_gate(s, FourierDirection::forward);
    t = phase_mult(std::move(t), flipped);
    return fourier_gate(t, FourierDirection::inverse);
}

double fidelity_error(const GridState& a, const GridState& b) {
    if (!(a.spec == b.spec)) throw std::invalid_argument("fidelity_error: grid mismatch");
    Complex ov = a.values.dot(b.values) * a.spec.dx();
    return std::max(0.0, 1.0 - std::abs(ov));
}

void write_csv(const GridState& s, std::ostream& out) {
    out << "x,re,im\n";
    char line[128];
    for (int j = 0; j < s.spec.n_points; ++j) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", s.spec.x(j),
                      s.values(j).real(), s.values(j).imag());
        out << line;
    }
}

GridState read_csv(std::istream& in) {
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> xs;
    std::vector<Complex> vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double x, re, im;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &re, &im) != 3)
            throw std::invalid_argument("read_csv: malformed line: " + line);
        xs.push_back(x);
        vs.push_back(Complex(re, im));
    }
    int n = int(vs.size());
    if (n < 2) throw std::invalid_argument("read_csv: too few rows");
    double dx = xs[1] - xs[0];
    GridSpec spec(n / 2 * dx, n);
    Vector v(n);
    for (int j = 0; j < n; ++j) v(j) = vs[j];
    return {spec, std::move(v)};
}

}  // namespace cvkerr
