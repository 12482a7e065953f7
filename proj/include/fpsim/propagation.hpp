#pragma once

// Time propagation, spatial averaging, FID acquisition, frequency-domain
// resolvent detection and powder averaging.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "assembly.hpp"

namespace fpsim {

struct Trajectory {
    Eigen::VectorXd times; // s, monotone
    CVector values;        // observable samples
};

struct Spectrum {
    Eigen::VectorXd axis; // rad/s unless stated otherwise in axis_unit
    CVector values;
    std::string axis_unit = "rad/s";
    std::map<std::string, double> metadata;
};

// Place w_j * rho0 in spatial block j. Default weights are uniform over every
// spatial factor; per-factor weight vectors may be supplied (e.g. a delta for
// coherent pulse phase coordinates). Weights must each sum to 1.
inline FPState distribute_state(
    const CVector& rho0, const FPLayout& layout,
    const std::optional<std::vector<Eigen::VectorXd>>& factor_weights = std::nullopt) {
    if (rho0.size() != layout.spin_dim())
        throw InvalidInput("distribute_state: state dimension must match the spin factor");

    const size_t n_spatial = layout.factors.size() - 1;
    std::vector<Eigen::VectorXd> w(n_spatial);
    for (size_t f = 0; f < n_spatial; ++f) {
        const Eigen::Index d = layout.factors[f].dim;
        if (factor_weights && f < factor_weights->size() && (*factor_weights)[f].size() > 0) {
            w[f] = (*factor_weights)[f];
            if (w[f].size() != d)
                throw InvalidInput("distribute_state: weight vector length mismatch");
            if (std::abs(w[f].sum() - 1.0) > 1e-9)
                throw InvalidInput("distribute_state: weights must sum to 1");
        } else {
            w[f] = Eigen::VectorXd::Constant(d, 1.0 / double(d));
        }
    }

    const Eigen::Index np = layout.spatial_dim();
    const Eigen::Index ns = layout.spin_dim();
    CVector v(np * ns);
    for (Eigen::Index p = 0; p < np; ++p) {
        double wp = 1.0;
        Eigen::Index rest = p;
        for (size_t f = n_spatial; f-- > 0;) {
            const Eigen::Index d = layout.factors[f].dim;
            wp *= w[f][rest % d];
            rest /= d;
        }
        v.segment(p * ns, ns) = wp * rho0;
    }
    return {std::move(v), layout};
}

// Sum of all spatial blocks: the average spin state visible to the coils.
inline CVector spatial_average(const FPState& state) {
    const Eigen::Index ns = state.layout.spin_dim();
    const Eigen::Index np = state.layout.spatial_dim();
    CVector out = CVector::Zero(ns);
    for (Eigen::Index p = 0; p < np; ++p) out += state.vector.segment(p * ns, ns);
    return out;
}

// Partial trace over one spatial factor: blocks are summed along that factor
// and the layout loses the slot.
inline FPState partial_trace(const FPState& state, const std::string& slot) {
    const FPLayout& lay = state.layout;
    const Eigen::Index idx = lay.find(slot);
    if (lay.factors[size_t(idx)].kind == FactorKind::spin)
        throw InvalidInput("partial_trace: cannot trace out the spin factor");

    std::vector<FactorSpec> rest;
    for (size_t f = 0; f + 1 < lay.factors.size(); ++f)
        if (Eigen::Index(f) != idx) rest.push_back(lay.factors[f]);
    rest.push_back(lay.factors.back());
    FPLayout out_layout(rest);

    const Eigen::Index ns = lay.spin_dim();
    CVector out = CVector::Zero(out_layout.total_dim());
    const size_t n_spatial = lay.factors.size() - 1;
    for (Eigen::Index p = 0; p < lay.spatial_dim(); ++p) {
        Eigen::Index rest_flat = 0;
        Eigen::Index tmp = p;
        std::vector<Eigen::Index> digits(n_spatial);
        for (size_t f = n_spatial; f-- > 0;) {
            digits[f] = tmp % lay.factors[f].dim;
            tmp /= lay.factors[f].dim;
        }
        for (size_t f = 0; f < n_spatial; ++f) {
            if (Eigen::Index(f) == idx) continue;
            rest_flat = rest_flat * lay.factors[f].dim + digits[f];
        }
        out.segment(rest_flat * ns, ns) += state.vector.segment(p * ns, ns);
    }
    return {std::move(out), std::move(out_layout)};
}

// Adjoint of spatial_average: the coil replicated over spatial blocks.
inline CVector lift_coil(const CVector& coil, const FPLayout& layout) {
    if (coil.size() != layout.spin_dim())
        throw InvalidInput("lift_coil: coil dimension must match the spin factor");
    const Eigen::Index np = layout.spatial_dim();
    CVector out(np * coil.size());
    for (Eigen::Index p = 0; p < np; ++p) out.segment(p * coil.size(), coil.size()) = coil;
    return out;
}

inline FPState evolve(const Generator& gen, const FPState& state, double t,
                      double tol = default_expmv_tol) {
    if (!gen.time_independent())
        throw InvalidInput("evolve: generator has channels; use evolve_schedule");
    if (t < 0.0) throw InvalidInput("evolve: negative time");
    if (state.vector.size() != gen.layout.total_dim())
        throw InvalidInput("evolve: state dimension mismatch");
    return {expmv(gen.constant, state.vector, t, tol), state.layout};
}

// Piecewise-constant schedule: channel coefficients frozen per slice.
inline FPState evolve_schedule(const Generator& gen, const Waveform& wf, const FPState& state,
                               double tol = default_expmv_tol) {
    wf.validate();
    for (const auto& s : wf.slices)
        for (const auto& [label, value] : s.coefficients)
            if (!gen.channel(label))
                throw InvalidInput("evolve_schedule: unknown channel '" + label + "'");

    CVector v = state.vector;
    std::optional<std::map<std::string, double>> last;
    CSparse frozen;
    for (const auto& s : wf.slices) {
        if (!last || *last != s.coefficients) {
            frozen = gen.constant;
            for (const auto& [label, value] : s.coefficients)
                if (value != 0.0) frozen = frozen + value * (*gen.channel(label));
            last = s.coefficients;
        }
        v = expmv(frozen, v, s.duration_s, tol);
    }
    return {std::move(v), state.layout};
}

// FID acquisition by repeated application of the single-dwell propagator.
inline Trajectory acquire_fid(const Generator& gen, const FPState& state, const CVector& coil,
                              double dwell, Eigen::Index n_points,
                              double tol = default_expmv_tol) {
    if (!gen.time_independent())
        throw InvalidInput("acquire_fid: generator has channels; freeze coefficients first");
    if (dwell <= 0.0) throw InvalidInput("acquire_fid: dwell must be positive");

    const CVector lifted = lift_coil(coil, gen.layout);
    Trajectory traj;
    traj.times.resize(n_points);
    traj.values.resize(n_points);
    CVector v = state.vector;
    for (Eigen::Index k = 0; k < n_points; ++k) {
        traj.times[k] = double(k) * dwell;
        traj.values[k] = lifted.dot(v);
        if (k + 1 < n_points) v = expmv(gen.constant, v, dwell, tol);
    }
    return traj;
}

// Frequency-domain detection through the resolvent: f(w) =
// -i < lifted coil | (F + w)^-1 | state > with F = i * gen.constant.
inline Spectrum detect_fd(const Generator& gen, const FPState& state, const CVector& coil,
                          const Eigen::VectorXd& omegas, const SolveOptions& opts = {}) {
    if (!gen.time_independent())
        throw InvalidInput("detect_fd: generator has channels; freeze coefficients first");
    const CSparse f = cxd(0.0, 1.0) * gen.constant;
    const CVector lifted = lift_coil(coil, gen.layout);

    Spectrum spec;
    spec.axis = omegas;
    spec.values.resize(omegas.size());
    for (Eigen::Index i = 0; i < omegas.size(); ++i) {
        const CVector x = shifted_solve(f, omegas[i], state.vector, opts);
        spec.values[i] = cxd(0.0, -1.0) * lifted.dot(x);
    }
    return spec;
}

// Weighted average of per-orientation spectra. Orientations are evaluated
// independently; the combination order is fixed by the grid ordering.
inline Spectrum powder_average(
    const std::function<Spectrum(Eigen::Index, const Orientation&)>& runner,
    const SphericalGrid& grid) {
    Spectrum acc;
    for (size_t i = 0; i < grid.orientations.size(); ++i) {
        Spectrum s = runner(Eigen::Index(i), grid.orientations[i]);
        if (i == 0) {
            acc = s;
            acc.values *= grid.weights[0];
        } else {
            if (s.axis.size() != acc.axis.size())
                throw InvalidInput("powder_average: inconsistent spectral axes");
            acc.values += grid.weights[Eigen::Index(i)] * s.values;
        }
    }
    return acc;
}

// Radix-2 FFT with a direct-sum fallback; forward kernel e^{-i w t}.
namespace detail {

inline void fft_radix2(CVector& a, bool inverse) {
    const Eigen::Index n = a.size();
    for (Eigen::Index i = 1, j = 0; i < n; ++i) {
        Eigen::Index bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (Eigen::Index len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 1.0 : -1.0) * two_pi / double(len);
        const cxd wl(std::cos(ang), std::sin(ang));
        for (Eigen::Index i = 0; i < n; i += len) {
            cxd w(1.0, 0.0);
            for (Eigen::Index k = 0; k < len / 2; ++k) {
                const cxd u = a[i + k];
                const cxd v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

} // namespace detail

inline CVector dft(const CVector& in) {
    const Eigen::Index n = in.size();
    if (n > 1 && (n & (n - 1)) == 0) {
        CVector a = in;
        detail::fft_radix2(a, false);
        return a;
    }
    CVector out = CVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index t = 0; t < n; ++t)
            out[k] += in[t] * std::exp(cxd(0.0, -two_pi * double(k) * double(t) / double(n)));
    return out;
}

// Spectrum of an FID; axis in rad/s, centred (fftshift), so a signal
// e^{+i w0 t} peaks at +w0.
inline Spectrum fft_fid(const Trajectory& fid, double dwell) {
    const Eigen::Index n = fid.values.size();
    const CVector raw = dft(fid.values);
    Spectrum spec;
    spec.axis.resize(n);
    spec.values.resize(n);
    const Eigen::Index half = n / 2;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index k = (i + half) % n;              // unshifted bin index
        const double freq_idx = double(i) - double(half);   // signed bin
        spec.axis[i] = two_pi * freq_idx / (double(n) * dwell);
        spec.values[i] = raw[k];
    }
    spec.metadata["dwell_s"] = dwell;
    spec.metadata["hz_per_rad_s"] = 1.0 / two_pi;
    return spec;
}

} // namespace fpsim
