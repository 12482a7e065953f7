#pragma once

// Decomposition of the spin Hamiltonian into an isotropic commutation
// superoperator plus 25 irreducible spherical components Q_km, such that the
// superoperator at orientation R is h0 + sum_km [W(R)]_km q(k,m) with W from
// wigner_d2. Also houses the relaxation/kinetics container.

#include <array>
#include <optional>
#include <vector>

#include "spin.hpp"

namespace fpsim {

struct IrreducibleComponents {
    CSparse h0;                                   // isotropic part, rad/s
    std::array<std::array<CSparse, 5>, 5> q;      // q[k+2][m+2], k,m = -2..2
    Eigen::Index dim = 0;                         // Liouville dimension

    const CSparse& qkm(int k, int m) const { return q[size_t(k + 2)][size_t(m + 2)]; }
};

struct ComponentOptions {
    // Overtone simulations keep all five spin components of the quadrupolar
    // interaction; everything else is secular by default.
    bool full_quadrupolar = false;
};

namespace detail {

// Rank-2 spin tensor operators for a pair of operator sets, ascending q.
// T_{2,0} = (2 SzSz - SxSx - SySy)/sqrt6, T_{2,+-1} = -+ (Sz S+- + S+- Sz)/2,
// T_{2,+-2} = S+- S+- / 2.
inline std::array<CSparse, 5> pair_spin_tensor(const SpinOps& a, const SpinOps& b) {
    std::array<CSparse, 5> t;
    const double s6 = std::sqrt(6.0);
    t[0] = (a.sm * b.sm) * 0.5;
    t[1] = (a.sz * b.sm + a.sm * b.sz) * 0.5;
    t[2] = (a.sz * b.sz * 2.0 - a.sx * b.sx - a.sy * b.sy) * (1.0 / s6);
    t[3] = (a.sz * b.sp + a.sp * b.sz) * (-0.5);
    t[4] = (a.sp * b.sp) * 0.5;
    return t;
}

// Spin-field tensor operators with the field along z: the q = +-2 slots
// vanish and q = +-1 are pure S+- (non-secular).
inline std::array<CSparse, 5> field_spin_tensor(const SpinOps& a) {
    const Eigen::Index n = a.sz.rows();
    std::array<CSparse, 5> t;
    t[0] = CSparse::zero(n, n);
    t[1] = a.sm * 0.5;
    t[2] = a.sz * (2.0 / std::sqrt(6.0));
    t[3] = a.sp * (-0.5);
    t[4] = CSparse::zero(n, n);
    return t;
}

struct QAccumulator {
    Eigen::Index dim;
    CSparse h0;
    std::array<std::array<CSparse, 5>, 5> q;
    std::array<std::array<bool, 5>, 5> used{};

    explicit QAccumulator(Eigen::Index d) : dim(d), h0(CSparse::zero(d, d)) {
        for (auto& row : q)
            for (auto& e : row) e = CSparse::zero(d, d);
    }

    // H = sum_m (-1)^m Phi_m T_{2,-m}; rotation index k gives
    // Q_km = (-1)^k Phi_m T_{2,-k}. Rank-1 content is dropped (symmetric
    // part only), rank-0 goes to the caller's isotropic term.
    void add_rank2(const Eigen::Matrix3d& tensor, const std::array<CSparse, 5>& t2) {
        const Eigen::Matrix3d sym = 0.5 * (tensor + tensor.transpose());
        const Eigen::Matrix3d aniso = sym - (sym.trace() / 3.0) * Eigen::Matrix3d::Identity();
        const auto phi = sphten2(aniso);
        for (int m = -2; m <= 2; ++m) {
            if (std::abs(phi(m + 2)) < 1e-300) continue;
            for (int k = -2; k <= 2; ++k) {
                const CSparse& tk = t2[size_t(2 - k)]; // T_{2,-k}
                if (tk.nnz() == 0) continue;
                const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                q[size_t(k + 2)][size_t(m + 2)] =
                    q[size_t(k + 2)][size_t(m + 2)] + (sign * phi(m + 2)) * tk;
                used[size_t(k + 2)][size_t(m + 2)] = true;
            }
        }
    }
};

} // namespace detail

inline bool is_homonuclear(const Spin& a, const Spin& b) {
    return a.isotope == b.isotope;
}

// Build h0 and the 25 Q_km for the spin system. Secularity policy: Zeeman
// anisotropies keep only their Sz component; homonuclear couplings keep the
// full T_{2,0}; heteronuclear couplings keep 2 SzSz/sqrt6; quadrupolar keeps
// T_{2,0} unless full_quadrupolar is requested.
inline IrreducibleComponents build_components(const SpinSystem& sys,
                                              const ComponentOptions& opt = {}) {
    const Eigen::Index hd = sys.hilbert_dim();
    detail::QAccumulator acc(hd);
    CSparse h0_hilb = CSparse::zero(hd, hd);

    for (int i = 0; i < sys.size(); ++i) {
        const SpinOps ops = sys.product_operators(i);
        const Eigen::Matrix3d& z = sys.zeeman(i);

        h0_hilb = h0_hilb + (z.trace() / 3.0) * ops.sz;
        auto t2 = detail::field_spin_tensor(ops);
        t2[1] = CSparse::zero(hd, hd); // secular: drop S+- content
        t2[3] = CSparse::zero(hd, hd);
        acc.add_rank2(z, t2);

        if (sys.quadrupolar(i)) {
            auto tq = detail::pair_spin_tensor(ops, ops);
            if (!opt.full_quadrupolar) {
                tq[0] = CSparse::zero(hd, hd);
                tq[1] = CSparse::zero(hd, hd);
                tq[3] = CSparse::zero(hd, hd);
                tq[4] = CSparse::zero(hd, hd);
            }
            acc.add_rank2(*sys.quadrupolar(i), tq);
            // quadrupolar tensors are traceless; no isotropic term
        }
    }

    for (const auto& c : sys.couplings()) {
        const SpinOps a = sys.product_operators(c.i);
        const SpinOps b = sys.product_operators(c.j);
        const bool homo = is_homonuclear(sys.spin(c.i), sys.spin(c.j));
        const double j_iso = two_pi * c.j_hz + c.tensor.trace() / 3.0;

        if (homo)
            h0_hilb = h0_hilb + j_iso * (a.sx * b.sx + a.sy * b.sy + a.sz * b.sz);
        else
            h0_hilb = h0_hilb + j_iso * (a.sz * b.sz);

        auto t2 = detail::pair_spin_tensor(a, b);
        t2[0] = CSparse::zero(hd, hd);
        t2[1] = CSparse::zero(hd, hd);
        t2[3] = CSparse::zero(hd, hd);
        t2[4] = CSparse::zero(hd, hd);
        if (!homo) t2[2] = (a.sz * b.sz) * (2.0 / std::sqrt(6.0));
        acc.add_rank2(c.tensor, t2);
    }

    IrreducibleComponents ic;
    ic.dim = hd * hd;
    ic.h0 = comm_superop(h0_hilb);
    for (int k = 0; k < 5; ++k)
        for (int m = 0; m < 5; ++m)
            ic.q[size_t(k)][size_t(m)] = acc.used[size_t(k)][size_t(m)]
                                             ? comm_superop(acc.q[size_t(k)][size_t(m)])
                                             : CSparse::zero(hd * hd, hd * hd);
    return ic;
}

// Hamiltonian superoperator at the orientation reached by applying the listed
// rotations in order (first listed acts first; the Wigner product is folded
// right to left).
inline CSparse rotate_components(const IrreducibleComponents& ic,
                                 const std::vector<Rotation>& rots) {
    if (rots.empty()) throw InvalidInput("rotate_components: rotation list is empty");
    Matrix5cd w = wigner_d2(rots.front());
    for (size_t r = 1; r < rots.size(); ++r) w = wigner_d2(rots[r]) * w;

    CSparse h = ic.h0;
    for (int k = -2; k <= 2; ++k)
        for (int m = -2; m <= 2; ++m) {
            const CSparse& qkm = ic.qkm(k, m);
            if (qkm.nnz() == 0) continue;
            const cxd coeff = w(k + 2, m + 2);
            if (std::abs(coeff) < 1e-300) continue;
            h = h + coeff * qkm;
        }
    return h;
}

struct RelaxKin {
    CSparse r; // relaxation superoperator, s^-1
    CSparse k; // kinetics superoperator, s^-1

    static RelaxKin none(Eigen::Index liouville_dim) {
        return {CSparse::zero(liouville_dim, liouville_dim),
                CSparse::zero(liouville_dim, liouville_dim)};
    }
    CSparse sum() const { return r + k; }
};

struct RelaxationRates {
    std::vector<double> t1_s; // per spin; infinity = no relaxation
    std::vector<double> t2_s;
};

// Phenomenological relaxation toward the zero state: a coherence (a,b) is
// damped at the sum over spins whose projection differs between a and b of
// 1/T2; populations are damped at the mean 1/T1.
inline RelaxKin relax_kin(const SpinSystem& sys, const RelaxationRates& rates) {
    const int ns = sys.size();
    if (int(rates.t1_s.size()) != ns || int(rates.t2_s.size()) != ns)
        throw InvalidInput("relax_kin: one T1 and T2 per spin required");
    for (int i = 0; i < ns; ++i)
        if (rates.t1_s[size_t(i)] <= 0.0 || rates.t2_s[size_t(i)] <= 0.0)
            throw InvalidInput("relax_kin: relaxation times must be positive");

    const Eigen::Index hd = sys.hilbert_dim();
    const Eigen::Index ld = hd * hd;

    // projection pattern of each product basis state
    std::vector<std::vector<int>> proj(static_cast<size_t>(hd),
                                       std::vector<int>(static_cast<size_t>(ns), 0));
    for (Eigen::Index a = 0; a < hd; ++a) {
        Eigen::Index rest = a;
        for (int s = ns - 1; s >= 0; --s) {
            const int mult = sys.spin(s).multiplicity;
            proj[size_t(a)][size_t(s)] = int(rest % mult);
            rest /= mult;
        }
    }

    double r1_mean = 0.0;
    for (int i = 0; i < ns; ++i)
        r1_mean += (std::isinf(rates.t1_s[size_t(i)]) ? 0.0 : 1.0 / rates.t1_s[size_t(i)]);
    r1_mean /= double(ns);

    std::vector<Triplet> trip;
    for (Eigen::Index a = 0; a < hd; ++a)
        for (Eigen::Index b = 0; b < hd; ++b) {
            const Eigen::Index row = a * hd + b;
            double rate = 0.0;
            if (a == b) {
                rate = r1_mean;
            } else {
                for (int s = 0; s < ns; ++s)
                    if (proj[size_t(a)][size_t(s)] != proj[size_t(b)][size_t(s)] &&
                        !std::isinf(rates.t2_s[size_t(s)]))
                        rate += 1.0 / rates.t2_s[size_t(s)];
            }
            if (rate != 0.0) trip.emplace_back(row, row, cxd(-rate, 0.0));
        }

    return {CSparse::from_triplets(ld, ld, trip), CSparse::zero(ld, ld)};
}

// User-supplied superoperators pass through after dimension validation.
inline RelaxKin relax_kin(const SpinSystem& sys, const CSparse& r, const CSparse& k) {
    const Eigen::Index ld = sys.liouville_dim();
    if (r.rows() != ld || r.cols() != ld || k.rows() != ld || k.cols() != ld)
        throw InvalidInput("relax_kin: superoperator dimensions must match the Liouville space");
    return {r, k};
}

// Commutation superoperators used as pulse / gradient channel operators.
struct SpinChannelOps {
    CSparse sx;       // sum over driven spins of Sx, as a commutation superoperator
    CSparse sy;
    CSparse gradient; // sum_n gamma_n Sz^(n), as a commutation superoperator
};

inline SpinChannelOps make_channel_ops(const SpinSystem& sys,
                                       const std::vector<int>& driven = {}) {
    const Eigen::Index hd = sys.hilbert_dim();
    CSparse sx = CSparse::zero(hd, hd), sy = CSparse::zero(hd, hd),
            gz = CSparse::zero(hd, hd);
    for (int i = 0; i < sys.size(); ++i) {
        const SpinOps ops = sys.product_operators(i);
        const bool drive =
            driven.empty() || std::find(driven.begin(), driven.end(), i) != driven.end();
        if (drive) {
            sx = sx + ops.sx;
            sy = sy + ops.sy;
        }
        gz = gz + sys.spin(i).gamma * ops.sz;
    }
    return {comm_superop(sx), comm_superop(sy), comm_superop(gz)};
}

} // namespace fpsim
