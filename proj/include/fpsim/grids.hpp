#pragma once

// Grids and matrix representations of classical spatial dynamics generators:
// Fourier spectral and Fornberg finite-difference differentiation matrices,
// flow/diffusion/velocity-field generators, rotor phase increments and
// spherical averaging grids.

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "sparse_core.hpp"
#include "wigner.hpp"

namespace fpsim {

struct PhaseGrid {
    int n = 0; // phi_j = 2 pi j / n

    explicit PhaseGrid(int points) : n(points) {
        if (points < 1) throw InvalidInput("PhaseGrid: need at least one point");
    }
    double point(int j) const { return two_pi * j / n; }
    Eigen::VectorXd points() const {
        Eigen::VectorXd p(n);
        for (int j = 0; j < n; ++j) p[j] = point(j);
        return p;
    }
};

enum class Boundary { periodic, reflective, absorptive };

struct CoordinateGrid {
    Eigen::VectorXd points; // metres, strictly increasing
    Boundary boundary = Boundary::reflective;

    CoordinateGrid(Eigen::VectorXd pts, Boundary bc) : points(std::move(pts)), boundary(bc) {
        if (points.size() < 3) throw InvalidInput("CoordinateGrid: need at least 3 points");
        for (Eigen::Index i = 1; i < points.size(); ++i)
            if (points[i] <= points[i - 1])
                throw InvalidInput("CoordinateGrid: points must be strictly increasing");
    }

    static CoordinateGrid uniform(double x0, double length, Eigen::Index n, Boundary bc) {
        Eigen::VectorXd pts(n);
        for (Eigen::Index i = 0; i < n; ++i) pts[i] = x0 + length * double(i) / double(n);
        // periodic grids span [x0, x0+length) so that x0+length wraps onto x0
        if (bc != Boundary::periodic)
            for (Eigen::Index i = 0; i < n; ++i)
                pts[i] = x0 + length * double(i) / double(n - 1);
        return CoordinateGrid(std::move(pts), bc);
    }

    Eigen::Index n() const { return points.size(); }
    double spacing() const { return (points[points.size() - 1] - points[0]) / double(points.size() - 1); }
};

struct Orientation {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
    Rotation rotation() const { return Rotation::euler(alpha, beta, gamma); }
};

struct SphericalGrid {
    std::vector<Orientation> orientations;
    Eigen::VectorXd weights; // positive, sum to 1
};

// Fourier spectral first-derivative matrix on the uniform periodic phase grid.
// Even n uses the cot form, odd n the csc variant; both differentiate every
// representable Fourier mode exactly.
inline CSparse fourier_diff(int n) {
    if (n < 2) throw InvalidInput("fourier_diff: need at least 2 points");
    std::vector<Triplet> trip;
    trip.reserve(size_t(n) * size_t(n - 1));
    const bool even = (n % 2 == 0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (r == c) continue;
            const int d = r - c;
            const double arg = d * pi / n;
            const double sign = (d % 2 == 0) ? 1.0 : -1.0;
            const double v = 0.5 * sign * (even ? std::cos(arg) / std::sin(arg) : 1.0 / std::sin(arg));
            trip.emplace_back(r, c, cxd(v, 0.0));
        }
    return CSparse::from_triplets(n, n, trip);
}

namespace detail {

// Fornberg weights for the m-th derivative at point z from nodes x.
inline Eigen::VectorXd fornberg_weights(double z, const Eigen::VectorXd& x, int m) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
    double c1 = 1.0;
    double c4 = x[0] - z;
    c(0, 0) = 1.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        const int mn = int(std::min<Eigen::Index>(i, m));
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c.col(m);
}

} // namespace detail

// Finite-difference derivative matrix from Fornberg weights. Boundary rows:
// periodic grids wrap around (requires uniform spacing), reflective grids use
// one-sided stencils, absorptive grids keep the centred stencil and treat
// off-grid ghost values as zero (Dirichlet).
inline CSparse fd_matrix(const CoordinateGrid& grid, int deriv_order, int stencil = 5) {
    const Eigen::Index n = grid.n();
    if (deriv_order < 1) throw InvalidInput("fd_matrix: derivative order must be >= 1");
    if (stencil < deriv_order + 1)
        throw InvalidInput("fd_matrix: stencil must have at least deriv_order+1 points");
    if (stencil > n) throw InvalidInput("fd_matrix: stencil larger than the grid");

    const int left = (stencil - 1) / 2;
    std::vector<Triplet> trip;

    if (grid.boundary == Boundary::periodic) {
        const double h = grid.spacing();
        for (Eigen::Index i = 1; i < n; ++i)
            if (std::abs((grid.points[i] - grid.points[i - 1]) - h) > 1e-9 * h)
                throw InvalidInput("fd_matrix: periodic boundary requires a uniform grid");
        const double period = h * double(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd xs(stencil);
            for (int s = 0; s < stencil; ++s) {
                const Eigen::Index raw = i - left + s;
                const Eigen::Index j = ((raw % n) + n) % n;
                double shift = 0.0;
                if (raw < 0) shift = -period;
                if (raw >= n) shift = period;
                xs[s] = grid.points[j] + shift;
            }
            const Eigen::VectorXd w = detail::fornberg_weights(grid.points[i], xs, deriv_order);
            for (int s = 0; s < stencil; ++s) {
                const Eigen::Index j = (((i - left + s) % n) + n) % n;
                if (w[s] != 0.0) trip.emplace_back(i, j, cxd(w[s], 0.0));
            }
        }
    } else if (grid.boundary == Boundary::reflective) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index lo =
                std::clamp<Eigen::Index>(i - left, 0, n - stencil);
            const Eigen::VectorXd xs = grid.points.segment(lo, stencil);
            const Eigen::VectorXd w = detail::fornberg_weights(grid.points[i], xs, deriv_order);
            for (int s = 0; s < stencil; ++s)
                if (w[s] != 0.0) trip.emplace_back(i, lo + s, cxd(w[s], 0.0));
        }
    } else { // absorptive
        const double h_lo = grid.points[1] - grid.points[0];
        const double h_hi = grid.points[n - 1] - grid.points[n - 2];
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd xs(stencil);
            for (int s = 0; s < stencil; ++s) {
                const Eigen::Index raw = i - left + s;
                if (raw < 0)
                    xs[s] = grid.points[0] + double(raw) * h_lo;
                else if (raw >= n)
                    xs[s] = grid.points[n - 1] + double(raw - (n - 1)) * h_hi;
                else
                    xs[s] = grid.points[raw];
            }
            const Eigen::VectorXd w = detail::fornberg_weights(grid.points[i], xs, deriv_order);
            for (int s = 0; s < stencil; ++s) {
                const Eigen::Index raw = i - left + s;
                if (raw < 0 || raw >= n) continue; // ghost value is zero
                if (w[s] != 0.0) trip.emplace_back(i, raw, cxd(w[s], 0.0));
            }
        }
    }
    return CSparse::from_triplets(n, n, trip);
}

struct MotionSpec {
    enum class Kind { flow, diffusion, velocity_field } kind = Kind::flow;
    double value = 0.0;                 // flow velocity m/s or D_T m^2/s
    Eigen::VectorXd field;              // per-point velocity samples
    int stencil = 5;

    static MotionSpec flow(double v, int stencil = 5) { return {Kind::flow, v, {}, stencil}; }
    static MotionSpec diffusion(double d, int stencil = 5) {
        return {Kind::diffusion, d, {}, stencil};
    }
    static MotionSpec velocity_field(Eigen::VectorXd v, int stencil = 5) {
        return {Kind::velocity_field, 0.0, std::move(v), stencil};
    }
};

// Spatial dynamics generator on the coordinate grid, with the sign convention
// of d rho/dt = [-iL + M] rho: flow -> v D1, diffusion -> D_T D2,
// velocity field -> diag(div v) + diag(v) D1.
inline CSparse motion_generator(const CoordinateGrid& grid, const MotionSpec& spec) {
    switch (spec.kind) {
    case MotionSpec::Kind::flow:
        return spec.value * fd_matrix(grid, 1, spec.stencil);
    case MotionSpec::Kind::diffusion:
        if (spec.value < 0.0) throw InvalidInput("motion_generator: negative diffusion coefficient");
        return spec.value * fd_matrix(grid, 2, spec.stencil);
    case MotionSpec::Kind::velocity_field: {
        if (spec.field.size() != grid.n())
            throw InvalidInput("motion_generator: velocity sample count mismatch");
        const CSparse d1 = fd_matrix(grid, 1, spec.stencil);
        const CVector v = spec.field.cast<cxd>();
        const CVector div = d1 * v;
        return CSparse::diag(div) + CSparse::diag(v) * d1;
    }
    }
    throw InvalidInput("motion_generator: unknown kind");
}

// Rotor phase increment generator omega * d/dphi; its exponential advances
// the phase as in f(phi) -> f(phi + omega t).
inline CSparse rotor_generator(const PhaseGrid& grid, double omega) {
    if (omega == 0.0) return CSparse::zero(grid.n, grid.n);
    return omega * fourier_diff(grid.n);
}

enum class SphericalScheme { two_angle_spiral, user_list };

// Two-angle powder grid: golden-ratio spiral over (alpha, beta) with gamma = 0
// and uniform weights. user_list validates and normalises supplied weights.
inline SphericalGrid spherical_grid(int n_points) {
    if (n_points < 1) throw InvalidInput("spherical_grid: need at least one point");
    SphericalGrid g;
    g.orientations.reserve(size_t(n_points));
    const double golden_angle = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n_points; ++k) {
        Orientation o;
        if (n_points == 1) {
            o = {0.0, 0.0, 0.0};
        } else {
            const double z = 1.0 - 2.0 * (k + 0.5) / double(n_points);
            o.beta = std::acos(std::clamp(z, -1.0, 1.0));
            o.alpha = std::fmod(golden_angle * k, two_pi);
            o.gamma = 0.0;
        }
        g.orientations.push_back(o);
    }
    g.weights = Eigen::VectorXd::Constant(n_points, 1.0 / double(n_points));
    return g;
}

inline SphericalGrid spherical_grid(std::vector<Orientation> orientations,
                                    Eigen::VectorXd weights) {
    if (orientations.empty()) throw InvalidInput("spherical_grid: empty orientation list");
    if (Eigen::Index(orientations.size()) != weights.size())
        throw InvalidInput("spherical_grid: weight count mismatch");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (weights[i] <= 0.0) throw InvalidInput("spherical_grid: weights must be positive");
    weights /= weights.sum();
    return {std::move(orientations), std::move(weights)};
}

} // namespace fpsim
