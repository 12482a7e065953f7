#pragma once

// Spin operators, Liouville-space superoperators and the spin system container.
//
// Vectorisation convention is row-major throughout: vec([H,rho]) =
// (H ⊗ 1 - 1 ⊗ H^T) vec(rho). All stored Hamiltonian quantities are in
// angular frequency units (rad/s). Rotating-frame offsets are stored as
// (reference minus absolute) frequency; pulse carrier offsets use the same
// rule, which keeps the paper-literal generator signs physical.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "sparse_core.hpp"
#include "wigner.hpp"

namespace fpsim {

struct SpinOps {
    CSparse sx, sy, sz, sp, sm;
};

// Angular momentum matrices for a (2s+1)-dimensional spin, [Sx,Sy] = i Sz.
// Basis ordered by descending projection quantum number.
inline SpinOps spin_operators(int multiplicity) {
    if (multiplicity < 2) throw InvalidInput("spin_operators: multiplicity must be >= 2");
    const int n = multiplicity;
    const double s = 0.5 * (n - 1);

    std::vector<Triplet> tz, tp;
    for (int a = 0; a < n; ++a) {
        const double m = s - a;
        if (m != 0.0) tz.emplace_back(a, a, cxd(m, 0.0));
        if (a > 0) tp.emplace_back(a - 1, a, cxd(std::sqrt(s * (s + 1) - m * (m + 1)), 0.0));
    }
    SpinOps ops;
    ops.sz = CSparse::from_triplets(n, n, tz);
    ops.sp = CSparse::from_triplets(n, n, tp);
    ops.sm = ops.sp.adjoint();
    ops.sx = (ops.sp + ops.sm) * 0.5;
    ops.sy = (ops.sp - ops.sm) * cxd(0.0, -0.5);
    return ops;
}

// Commutation superoperator of h: C vec(rho) = vec(h rho - rho h).
inline CSparse comm_superop(const CSparse& h) {
    if (!h.is_square()) throw InvalidInput("comm_superop: matrix must be square");
    const CSparse id = CSparse::identity(h.rows());
    return kron(h, id) - kron(id, h.transpose());
}

// Row-major vectorisation of a Hilbert-space operator.
inline CVector vec(const CMatrix& m) {
    CVector v(m.rows() * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
    return v;
}

inline CMatrix unvec(const CVector& v, Eigen::Index dim) {
    if (v.size() != dim * dim) throw InvalidInput("unvec: size mismatch");
    CMatrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = v[i * dim + j];
    return m;
}

struct Spin {
    std::string isotope;
    int multiplicity = 2;
    double gamma = 0.0; // rad s^-1 T^-1
};

struct Coupling {
    int i = 0, j = 0;
    Eigen::Matrix3d tensor = Eigen::Matrix3d::Zero(); // rad/s
    double j_hz = 0.0;
};

// Traceless symmetric quadrupolar tensor from (C_Q, eta_Q, orientation).
inline Eigen::Matrix3d quadrupolar_tensor(double cq_hz, double eta, int multiplicity,
                                          const Rotation& orientation) {
    const double s = 0.5 * (multiplicity - 1);
    const double c = two_pi * cq_hz / (4.0 * s * (2.0 * s - 1.0));
    Eigen::Matrix3d pas = Eigen::Matrix3d::Zero();
    pas(0, 0) = -c * (1.0 - eta);
    pas(1, 1) = -c * (1.0 + eta);
    pas(2, 2) = 2.0 * c;
    const Eigen::Matrix3d r = orientation.matrix3();
    return r * pas * r.transpose();
}

// Point-dipole coupling tensor b (1 - 3 e e^T), b = mu0 g1 g2 hbar / (4 pi r^3).
inline Eigen::Matrix3d dipolar_tensor(double gamma1, double gamma2, double distance_m,
                                      const Eigen::Vector3d& direction) {
    if (distance_m <= 0.0) throw InvalidInput("dipolar_tensor: distance must be positive");
    const double dn = direction.norm();
    if (dn < 1e-12) throw InvalidInput("dipolar_tensor: direction must be nonzero");
    const Eigen::Vector3d e = direction / dn;
    const double b = mu0 * gamma1 * gamma2 * hbar /
                     (4.0 * pi * distance_m * distance_m * distance_m);
    return b * (Eigen::Matrix3d::Identity() - 3.0 * e * e.transpose());
}

class SpinSystem {
public:
    explicit SpinSystem(double field_t) : field_(field_t) {
        if (field_t <= 0.0) throw InvalidInput("SpinSystem: field must be positive");
    }

    // Nuclear spin with an isotropic shift; frame referenced to the bare
    // Larmor frequency plus frame_offset_hz.
    int add_spin(const std::string& isotope, double shift_ppm = 0.0,
                 double frame_offset_hz = 0.0) {
        return add_spin_tensor(isotope, shift_ppm * Eigen::Matrix3d::Identity(),
                               frame_offset_hz);
    }

    // Nuclear spin with a full 3x3 shift tensor in ppm.
    int add_spin_tensor(const std::string& isotope, const Eigen::Matrix3d& shift_ppm,
                        double frame_offset_hz = 0.0) {
        const auto data = isotope_lookup(isotope);
        if (!data) throw InvalidInput("SpinSystem: unknown isotope " + isotope);
        spins_.push_back({isotope, data->multiplicity, data->gamma});
        // rotating-frame Zeeman tensor, (reference - absolute) convention
        zeeman_.push_back(two_pi * frame_offset_hz * Eigen::Matrix3d::Identity() -
                          data->gamma * field_ * 1e-6 * shift_ppm);
        quad_.emplace_back();
        return int(spins_.size()) - 1;
    }

    // Electron characterised by a g-tensor; frame_hz is the absolute microwave
    // reference frequency defining the rotating frame.
    int add_electron(const Eigen::Vector3d& g_eigenvalues, const Rotation& orientation,
                     double frame_hz) {
        const Eigen::Matrix3d r = orientation.matrix3();
        const Eigen::Matrix3d g = r * g_eigenvalues.asDiagonal() * r.transpose();
        const double g_iso = g_eigenvalues.sum() / 3.0;
        spins_.push_back({"E", 2, g_iso * bohr_magneton / hbar});
        zeeman_.push_back(two_pi * frame_hz * Eigen::Matrix3d::Identity() -
                          (bohr_magneton * field_ / hbar) * g);
        quad_.emplace_back();
        return int(spins_.size()) - 1;
    }

    void add_coupling(int i, int j, const Eigen::Matrix3d& tensor_rad_s, double j_hz) {
        check_pair(i, j);
        couplings_.push_back({i, j, tensor_rad_s, j_hz});
    }

    void add_j_coupling(int i, int j, double j_hz) {
        add_coupling(i, j, Eigen::Matrix3d::Zero(), j_hz);
    }

    void add_dipolar(int i, int j, double distance_m, const Eigen::Vector3d& direction) {
        check_pair(i, j);
        couplings_.push_back(
            {i, j, dipolar_tensor(spins_[i].gamma, spins_[j].gamma, distance_m, direction),
             0.0});
    }

    void set_quadrupolar(int i, double cq_hz, double eta, const Rotation& orientation) {
        check_spin(i);
        if (spins_[i].multiplicity < 3)
            throw InvalidInput("SpinSystem: quadrupolar tensor on a spin-1/2 is not allowed");
        quad_[i] = quadrupolar_tensor(cq_hz, eta, spins_[i].multiplicity, orientation);
    }

    int size() const { return int(spins_.size()); }
    const Spin& spin(int i) const { return spins_[size_t(i)]; }
    const std::vector<Spin>& spins() const { return spins_; }
    double field() const { return field_; }
    const Eigen::Matrix3d& zeeman(int i) const { return zeeman_[size_t(i)]; }
    const std::vector<Coupling>& couplings() const { return couplings_; }
    const std::optional<Eigen::Matrix3d>& quadrupolar(int i) const { return quad_[size_t(i)]; }

    Eigen::Index hilbert_dim() const {
        Eigen::Index d = 1;
        for (const auto& s : spins_) d *= s.multiplicity;
        return d;
    }
    Eigen::Index liouville_dim() const {
        const Eigen::Index d = hilbert_dim();
        return d * d;
    }

    // Single-spin operator embedded into the product Hilbert space.
    CSparse embed(int i, const CSparse& op) const {
        check_spin(i);
        if (op.rows() != spins_[size_t(i)].multiplicity)
            throw InvalidInput("SpinSystem::embed: operator dimension mismatch");
        CSparse out = CSparse::identity(1);
        for (int k = 0; k < size(); ++k)
            out = kron(out, k == i ? op : CSparse::identity(spins_[size_t(k)].multiplicity));
        return out;
    }

    SpinOps product_operators(int i) const {
        const SpinOps base = spin_operators(spins_[size_t(i)].multiplicity);
        return {embed(i, base.sx), embed(i, base.sy), embed(i, base.sz),
                embed(i, base.sp), embed(i, base.sm)};
    }

private:
    void check_spin(int i) const {
        if (i < 0 || i >= size()) throw InvalidInput("SpinSystem: spin index out of range");
    }
    void check_pair(int i, int j) const {
        check_spin(i);
        check_spin(j);
        if (i == j) throw InvalidInput("SpinSystem: coupling requires two distinct spins");
    }

    double field_;
    std::vector<Spin> spins_;
    std::vector<Eigen::Matrix3d> zeeman_;
    std::vector<Coupling> couplings_;
    std::vector<std::optional<Eigen::Matrix3d>> quad_;
};

} // namespace fpsim
