#pragma once

// Rotations (z-y-z Euler and angle-axis) and rank-2 Wigner matrices.
//
// Index convention: Wigner matrices are stored with row/column index
// m = -2..2 ascending. wigner_d2(R) is the active transformation of rank-2
// spherical tensor components: sphten2(R A R^T) = wigner_d2(R) * sphten2(A).
// For a rotation about z by phi this gives diag(e^{-2i phi},...,e^{+2i phi}),
// and the matrix is the elementwise conjugate of the Varshalovich D-matrix.

#include <Eigen/Dense>

#include <cmath>
#include <variant>

#include "constants.hpp"
#include "errors.hpp"

namespace fpsim {

using Matrix5cd = Eigen::Matrix<cxd, 5, 5>;

struct EulerAngles {
    double alpha = 0.0, beta = 0.0, gamma = 0.0; // z-y-z, active
};

struct AngleAxis {
    Eigen::Vector3d axis{0.0, 0.0, 1.0};
    double angle = 0.0;
};

class Rotation {
public:
    Rotation() : rep_(EulerAngles{}) {}

    static Rotation euler(double alpha, double beta, double gamma) {
        Rotation r;
        r.rep_ = EulerAngles{alpha, beta, gamma};
        return r;
    }

    static Rotation angle_axis(const Eigen::Vector3d& axis, double angle) {
        const double n = axis.norm();
        if (n < 1e-12) throw InvalidInput("Rotation: axis must be nonzero");
        Rotation r;
        r.rep_ = AngleAxis{axis / n, angle};
        return r;
    }

    static Rotation about_z(double angle) { return euler(angle, 0.0, 0.0); }

    // rotation taking the z axis onto the unit vector n
    static Rotation z_to_axis(const Eigen::Vector3d& n_in) {
        const double n = n_in.norm();
        if (n < 1e-12) throw InvalidInput("Rotation: axis must be nonzero");
        const Eigen::Vector3d u = n_in / n;
        return euler(std::atan2(u.y(), u.x()), std::acos(std::clamp(u.z(), -1.0, 1.0)), 0.0);
    }

    static Rotation identity() { return Rotation(); }

    static Rotation from_matrix(const Eigen::Matrix3d& m) {
        Rotation r;
        r.rep_ = extract_euler(m);
        return r;
    }

    Eigen::Matrix3d matrix3() const {
        if (std::holds_alternative<EulerAngles>(rep_)) {
            const auto& e = std::get<EulerAngles>(rep_);
            return rot_z(e.alpha) * rot_y(e.beta) * rot_z(e.gamma);
        }
        const auto& aa = std::get<AngleAxis>(rep_);
        return Eigen::AngleAxisd(aa.angle, aa.axis).toRotationMatrix();
    }

    EulerAngles euler_angles() const {
        if (std::holds_alternative<EulerAngles>(rep_)) return std::get<EulerAngles>(rep_);
        return extract_euler(matrix3());
    }

    Rotation compose_after(const Rotation& first) const {
        // this * first: "first" applied first
        return from_matrix(matrix3() * first.matrix3());
    }

private:
    static Eigen::Matrix3d rot_z(double a) {
        Eigen::Matrix3d m;
        m << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
        return m;
    }
    static Eigen::Matrix3d rot_y(double a) {
        Eigen::Matrix3d m;
        m << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0, std::cos(a);
        return m;
    }

    static EulerAngles extract_euler(const Eigen::Matrix3d& m) {
        EulerAngles e;
        const double sb = std::hypot(m(0, 2), m(1, 2));
        e.beta = std::atan2(sb, m(2, 2));
        if (sb > 1e-12) {
            e.alpha = std::atan2(m(1, 2), m(0, 2));
            e.gamma = std::atan2(m(2, 1), -m(2, 0));
        } else if (m(2, 2) > 0.0) {
            e.alpha = std::atan2(m(1, 0), m(0, 0)); // beta = 0: pure z rotation
            e.gamma = 0.0;
        } else {
            e.alpha = std::atan2(-m(1, 0), -m(0, 0)); // beta = pi
            e.gamma = 0.0;
        }
        return e;
    }

    std::variant<EulerAngles, AngleAxis> rep_;
};

namespace detail {

inline double factorial(int n) {
    static const double table[] = {1, 1, 2, 6, 24, 120, 720, 5040, 40320};
    return table[n];
}

// Wigner small-d element d^j_{mr,mc}(beta), standard phase convention
inline double wigner_small_d(int j, int mr, int mc, double beta) {
    const double ch = std::cos(0.5 * beta);
    const double sh = std::sin(0.5 * beta);
    const int s_lo = std::max(0, mc - mr);
    const int s_hi = std::min(j + mc, j - mr);
    double sum = 0.0;
    for (int s = s_lo; s <= s_hi; ++s) {
        const double num = ((mr - mc + s) % 2 == 0 ? 1.0 : -1.0);
        const double den = factorial(j + mc - s) * factorial(s) *
                           factorial(mr - mc + s) * factorial(j - mr - s);
        sum += num / den * std::pow(ch, 2 * j + mc - mr - 2 * s) *
               std::pow(sh, mr - mc + 2 * s);
    }
    const double norm = std::sqrt(factorial(j + mc) * factorial(j - mc) *
                                  factorial(j + mr) * factorial(j - mr));
    return norm * sum;
}

} // namespace detail

// Rank-2 Wigner matrix of the rotation, ascending index m = -2..2.
inline Matrix5cd wigner_d2(const Rotation& rot) {
    const EulerAngles e = rot.euler_angles();
    Matrix5cd w;
    for (int mr = -2; mr <= 2; ++mr)
        for (int mc = -2; mc <= 2; ++mc)
            w(mr + 2, mc + 2) = std::exp(ci * double(mr) * e.alpha) *
                                detail::wigner_small_d(2, mr, mc, e.beta) *
                                std::exp(ci * double(mc) * e.gamma);
    return w;
}

// Rank-2 spherical components of a 3x3 Cartesian tensor, ascending m = -2..2.
// Rows of the extraction map are orthonormal; the rank-1 (antisymmetric) part
// never enters these components.
inline Eigen::Vector<cxd, 5> sphten2(const Eigen::Matrix3d& a) {
    Eigen::Vector<cxd, 5> phi;
    const double s6 = std::sqrt(6.0);
    phi(0) = 0.5 * cxd(a(0, 0) - a(1, 1), -(a(0, 1) + a(1, 0)));           // m = -2
    phi(1) = 0.5 * cxd(a(0, 2) + a(2, 0), -(a(1, 2) + a(2, 1)));           // m = -1
    phi(2) = (2.0 * a(2, 2) - a(0, 0) - a(1, 1)) / s6;                     // m =  0
    phi(3) = -0.5 * cxd(a(0, 2) + a(2, 0), a(1, 2) + a(2, 1));             // m = +1
    phi(4) = 0.5 * cxd(a(0, 0) - a(1, 1), a(0, 1) + a(1, 0));              // m = +2
    return phi;
}

} // namespace fpsim
