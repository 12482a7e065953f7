#pragma once

// Time-sliced Liouville-von Neumann reference propagation: the brute-force
// equivalence oracle for the Fokker-Planck results. Works in Hilbert space
// (rho -> U rho U^dagger per step, midpoint-sampled Hamiltonian), which is
// identical to the commutation-superoperator exponential for R = K = 0.
//
// Phase convention: a Fokker-Planck generator with +omega * d/dphi transports
// each ensemble member's sampled phase as phi(t) = phi0 - omega t; oracle
// Hamiltonian samplers must follow that convention.

#include <functional>

#include "propagation.hpp"
#include "spin.hpp"

namespace fpsim {

using HamiltonianSampler = std::function<CMatrix(double)>; // Hilbert space, rad/s

// Observable trace tr(coil^dagger rho_k) at t_k = k dt, k = 0..n-1.
inline Trajectory lvn_oracle(const HamiltonianSampler& h, const CMatrix& rho0, double dt,
                             Eigen::Index n, const CMatrix& coil) {
    if (dt <= 0.0) throw InvalidInput("lvn_oracle: dt must be positive");
    Trajectory traj;
    traj.times.resize(n);
    traj.values.resize(n);
    CMatrix rho = rho0;
    for (Eigen::Index k = 0; k < n; ++k) {
        traj.times[k] = double(k) * dt;
        traj.values[k] = (coil.adjoint() * rho).trace();
        if (k + 1 < n) {
            const CMatrix u = expm_dense(cxd(0.0, -1.0) * dt * h((double(k) + 0.5) * dt));
            rho = u * rho * u.adjoint();
        }
    }
    return traj;
}

// Final state after n midpoint-sampled steps.
inline CMatrix lvn_propagate(const HamiltonianSampler& h, const CMatrix& rho0, double dt,
                             Eigen::Index n, double t_start = 0.0) {
    if (dt <= 0.0) throw InvalidInput("lvn_oracle: dt must be positive");
    CMatrix rho = rho0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const CMatrix u =
            expm_dense(cxd(0.0, -1.0) * dt * h(t_start + (double(k) + 0.5) * dt));
        rho = u * rho * u.adjoint();
    }
    return rho;
}

// Oracle FID sampled on a dwell grid with n_sub oracle steps per dwell.
inline Trajectory lvn_fid(const HamiltonianSampler& h, const CMatrix& rho0, double dwell,
                          Eigen::Index n_points, Eigen::Index n_sub, const CMatrix& coil) {
    Trajectory traj;
    traj.times.resize(n_points);
    traj.values.resize(n_points);
    CMatrix rho = rho0;
    const double dt = dwell / double(n_sub);
    for (Eigen::Index k = 0; k < n_points; ++k) {
        traj.times[k] = double(k) * dwell;
        traj.values[k] = (coil.adjoint() * rho).trace();
        if (k + 1 < n_points)
            rho = lvn_propagate(h, rho, dt, n_sub, double(k) * dwell);
    }
    return traj;
}

} // namespace fpsim
