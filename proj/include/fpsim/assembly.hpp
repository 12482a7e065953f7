#pragma once

// Fokker-Planck evolution generators in the Kronecker layout: phase factors,
// then coordinate factors, then the spin Liouville factor. Every assembler
// folds the sign convention once: Generator.constant is -iF, so evolution is
// rho(t) = exp(G t) rho(0), Hamiltonian channels carry -i, spatial-generator
// channels carry +1.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "components.hpp"
#include "grids.hpp"

namespace fpsim {

enum class FactorKind { phase, coordinate, spin };

struct FactorSpec {
    std::string name;
    Eigen::Index dim = 0;
    FactorKind kind = FactorKind::spin;
};

struct FPLayout {
    std::vector<FactorSpec> factors;

    FPLayout() = default;
    explicit FPLayout(std::vector<FactorSpec> fs) : factors(std::move(fs)) { validate(); }

    void validate() const {
        if (factors.empty()) throw InvalidInput("FPLayout: no factors");
        int stage = 0; // 0 phase, 1 coordinate, 2 spin
        int spin_count = 0;
        for (const auto& f : factors) {
            if (f.dim < 1) throw InvalidInput("FPLayout: factor dimension must be positive");
            const int s = f.kind == FactorKind::phase ? 0
                          : f.kind == FactorKind::coordinate ? 1 : 2;
            if (s < stage)
                throw InvalidInput("FPLayout: factor order must be phase, coordinate, spin");
            stage = s;
            if (f.kind == FactorKind::spin) ++spin_count;
        }
        if (spin_count != 1 || factors.back().kind != FactorKind::spin)
            throw InvalidInput("FPLayout: exactly one spin factor, listed last");
    }

    Eigen::Index total_dim() const {
        Eigen::Index d = 1;
        for (const auto& f : factors) d *= f.dim;
        return d;
    }
    Eigen::Index spin_dim() const { return factors.back().dim; }
    Eigen::Index spatial_dim() const { return total_dim() / spin_dim(); }

    Eigen::Index find(const std::string& slot) const {
        for (size_t i = 0; i < factors.size(); ++i)
            if (factors[i].name == slot) return Eigen::Index(i);
        throw InvalidInput("FPLayout: unknown slot '" + slot + "'");
    }
};

// Kronecker embedding of per-factor operators, identities elsewhere.
inline CSparse lift_multi(const FPLayout& layout,
                          const std::map<std::string, const CSparse*>& slot_ops) {
    for (const auto& [name, op] : slot_ops) {
        const auto idx = layout.find(name);
        if (op->rows() != layout.factors[size_t(idx)].dim ||
            op->cols() != layout.factors[size_t(idx)].dim)
            throw InvalidInput("lift: operator dimension does not match slot '" + name + "'");
    }
    CSparse out = CSparse::identity(1);
    for (const auto& f : layout.factors) {
        const auto it = slot_ops.find(f.name);
        out = kron(out, it == slot_ops.end() ? CSparse::identity(f.dim) : *it->second);
    }
    return out;
}

inline CSparse lift(const CSparse& op, const FPLayout& layout, const std::string& slot) {
    return lift_multi(layout, {{slot, &op}});
}

struct Generator {
    CSparse constant; // -iF: evolution is rho(t) = exp(constant * t) rho(0)
    std::vector<std::pair<std::string, CSparse>> channels;
    FPLayout layout;

    bool time_independent() const { return channels.empty(); }

    const CSparse* channel(const std::string& label) const {
        for (const auto& [name, op] : channels)
            if (name == label) return &op;
        return nullptr;
    }

    // Freeze channel coefficients into the constant part (e.g. a constant
    // readout gradient), producing a channel-free generator.
    Generator with_coefficients(const std::map<std::string, double>& coeffs) const {
        Generator g{constant, {}, layout};
        for (const auto& [label, value] : coeffs) {
            const CSparse* op = channel(label);
            if (!op) throw InvalidInput("Generator: unknown channel '" + label + "'");
            if (value != 0.0) g.constant = g.constant + value * (*op);
        }
        return g;
    }
};

struct WaveformSlice {
    double duration_s = 0.0;
    std::map<std::string, double> coefficients;
};

struct Waveform {
    std::vector<WaveformSlice> slices;

    void validate() const {
        for (const auto& s : slices)
            if (s.duration_s <= 0.0) throw InvalidInput("Waveform: slice durations must be positive");
    }
};

struct FPState {
    CVector vector;
    FPLayout layout;
};

namespace detail {

// Block-diagonal matrix of per-spatial-point spin superoperators; the block
// builder is called with the flat spatial index (first factor slowest).
inline CSparse spatial_blockdiag(const FPLayout& layout,
                                 const std::function<CSparse(Eigen::Index)>& block) {
    const Eigen::Index ns = layout.spin_dim();
    const Eigen::Index np = layout.spatial_dim();
    std::vector<Triplet> trip;
    for (Eigen::Index p = 0; p < np; ++p) {
        const CSparse b = block(p);
        if (b.rows() != ns || b.cols() != ns)
            throw InvalidInput("spatial_blockdiag: block dimension mismatch");
        const Eigen::Index off = p * ns;
        const auto& m = b.eigen();
        for (int k = 0; k < m.outerSize(); ++k)
            for (SparseCx::InnerIterator it(m, k); it; ++it)
                trip.emplace_back(off + it.row(), off + it.col(), it.value());
    }
    return CSparse::from_triplets(np * ns, np * ns, trip);
}

inline void check_relax(const RelaxKin& rk, Eigen::Index spin_dim) {
    if (rk.r.rows() != spin_dim || rk.r.cols() != spin_dim || rk.k.rows() != spin_dim ||
        rk.k.cols() != spin_dim)
        throw InvalidInput("assembler: relaxation/kinetics dimension mismatch");
}

inline void check_phase_grid(const PhaseGrid& grid) {
    if (grid.n < 3)
        throw InvalidInput(
            "assembler: phase grid too small; use n >= 3 and increase until convergence");
}

} // namespace detail

// Single-rotation (MAS) generator, Liouvillians evaluated block-wise over the
// rotor phase grid: crystal rotation first, rotor phase second, lab tilt last.
// Optional rf_ops (Hamiltonian superoperators on the spin factor) become
// channels applied identically to every block.
inline Generator assemble_singlerot(
    const IrreducibleComponents& ic, const Rotation& axis, double rate,
    const PhaseGrid& grid, const Orientation& orientation, const RelaxKin& rk,
    const std::vector<std::pair<std::string, CSparse>>& rf_ops = {}) {
    detail::check_phase_grid(grid);
    detail::check_relax(rk, ic.dim);

    FPLayout layout({{"rotor_phase", grid.n, FactorKind::phase},
                     {"spin", ic.dim, FactorKind::spin}});

    const CSparse rkl = rk.sum();
    CSparse constant = detail::spatial_blockdiag(layout, [&](Eigen::Index j) {
        const CSparse l = rotate_components(
            ic, {orientation.rotation(), Rotation::about_z(grid.point(int(j))), axis});
        return cxd(0.0, -1.0) * l + rkl;
    });
    if (rate != 0.0)
        constant = constant + lift(rotor_generator(grid, rate), layout, "rotor_phase");

    Generator g{std::move(constant), {}, layout};
    for (const auto& [label, op] : rf_ops)
        g.channels.emplace_back(label, cxd(0.0, -1.0) * lift(op, layout, "spin"));
    return g;
}

// Double rotation: outer phase factor first (inner phase index varies
// fastest in the stacked state vector), Wigner chain per Eq.-style ordering
// crystal -> inner rotor phase -> inner-to-outer tilt -> outer rotor phase ->
// outer-to-lab tilt.
inline Generator assemble_doublerot(const IrreducibleComponents& ic, const Rotation& n0,
                                    const Rotation& n1, double rate0, double rate1,
                                    const PhaseGrid& grid0, const PhaseGrid& grid1,
                                    const Orientation& orientation, const RelaxKin& rk) {
    // a stationary rotor may degenerate to a single phase point
    if (!(rate0 == 0.0 && grid0.n == 1)) detail::check_phase_grid(grid0);
    if (!(rate1 == 0.0 && grid1.n == 1)) detail::check_phase_grid(grid1);
    detail::check_relax(rk, ic.dim);

    FPLayout layout({{"outer_phase", grid0.n, FactorKind::phase},
                     {"inner_phase", grid1.n, FactorKind::phase},
                     {"spin", ic.dim, FactorKind::spin}});

    const CSparse rkl = rk.sum();
    CSparse constant = detail::spatial_blockdiag(layout, [&](Eigen::Index p) {
        const int j1 = int(p % grid1.n); // inner fastest
        const int j0 = int(p / grid1.n);
        const CSparse l = rotate_components(ic, {orientation.rotation(),
                                                 Rotation::about_z(grid1.point(j1)), n1,
                                                 Rotation::about_z(grid0.point(j0)), n0});
        return cxd(0.0, -1.0) * l + rkl;
    });
    if (rate0 != 0.0)
        constant = constant + lift(rotor_generator(grid0, rate0), layout, "outer_phase");
    if (rate1 != 0.0)
        constant = constant + lift(rotor_generator(grid1, rate1), layout, "inner_phase");
    return {std::move(constant), {}, layout};
}

struct SpatiotemporalSpec {
    std::optional<PhaseGrid> phase_grid; // RF phase coordinate, if any
    double initial_phase = 0.0;          // phi_0 of the RF term
    double diffusion = 0.0;              // D_T, m^2/s
    MotionSpec motion = MotionSpec::flow(0.0);
    Orientation orientation;             // static-sample orientation, identity for liquids
    int stencil = 5;
};

// Gradient / diffusion / flow generator on (optional RF phase) x coordinate x
// spin. Channels: rf_amplitude_x/y (phase-resolved when a phase grid is
// present, plain Cartesian otherwise), rf_frequency (phase derivative) and
// gradient (coordinate operator times sum_n gamma_n Sz).
inline Generator assemble_spatiotemporal(const IrreducibleComponents& ic,
                                         const CoordinateGrid& zgrid,
                                         const SpatiotemporalSpec& spec,
                                         const SpinChannelOps& ops, const RelaxKin& rk) {
    detail::check_relax(rk, ic.dim);
    if (zgrid.n() < 3)
        throw InvalidInput("assembler: coordinate grid too small; use n >= 3");

    std::vector<FactorSpec> fs;
    if (spec.phase_grid) {
        detail::check_phase_grid(*spec.phase_grid);
        fs.push_back({"rf_phase", spec.phase_grid->n, FactorKind::phase});
    }
    fs.push_back({"z", zgrid.n(), FactorKind::coordinate});
    fs.push_back({"spin", ic.dim, FactorKind::spin});
    FPLayout layout(std::move(fs));

    const CSparse h0 = rotate_components(ic, {spec.orientation.rotation()});
    const CSparse block = cxd(0.0, -1.0) * h0 + rk.sum();
    CSparse constant = detail::spatial_blockdiag(layout, [&](Eigen::Index) { return block; });

    if (spec.diffusion != 0.0)
        constant = constant +
                   lift(motion_generator(zgrid, MotionSpec::diffusion(spec.diffusion, spec.stencil)),
                        layout, "z");
    const bool motion_inert =
        spec.motion.kind == MotionSpec::Kind::flow && spec.motion.value == 0.0;
    if (!motion_inert) {
        const CSparse m = motion_generator(zgrid, spec.motion);
        if (m.nnz() > 0) constant = constant + lift(m, layout, "z");
    }

    Generator g{std::move(constant), {}, layout};
    const cxd mi(0.0, -1.0);

    if (spec.phase_grid) {
        const Eigen::VectorXd phi = spec.phase_grid->points();
        CVector cphi(phi.size()), sphi(phi.size());
        for (Eigen::Index j = 0; j < phi.size(); ++j) {
            cphi[j] = std::cos(phi[j] + spec.initial_phase);
            sphi[j] = std::sin(phi[j] + spec.initial_phase);
        }
        const CSparse dc = CSparse::diag(cphi), ds = CSparse::diag(sphi);
        g.channels.emplace_back(
            "rf_amplitude_x",
            mi * lift_multi(layout, {{"rf_phase", &dc}, {"spin", &ops.sx}}));
        g.channels.emplace_back(
            "rf_amplitude_y",
            mi * lift_multi(layout, {{"rf_phase", &ds}, {"spin", &ops.sy}}));
        g.channels.emplace_back("rf_frequency",
                                lift(fourier_diff(spec.phase_grid->n), layout, "rf_phase"));
    } else {
        g.channels.emplace_back("rf_amplitude_x", mi * lift(ops.sx, layout, "spin"));
        g.channels.emplace_back("rf_amplitude_y", mi * lift(ops.sy, layout, "spin"));
    }

    const CSparse zdiag = CSparse::diag(zgrid.points.cast<cxd>());
    g.channels.emplace_back(
        "gradient", mi * lift_multi(layout, {{"z", &zdiag}, {"spin", &ops.gradient}}));
    return g;
}

struct DeerPulse {
    double amplitude = 0.0;      // rad/s
    double carrier_offset = 0.0; // rad/s, (frame reference - pulse carrier)
    double initial_phase = 0.0;  // rad
};

// Microwave pulse generator with a phase coordinate: fully time-independent.
inline Generator assemble_deer(const IrreducibleComponents& ic, const DeerPulse& pulse,
                               const PhaseGrid& grid, const Orientation& orientation,
                               const SpinChannelOps& ops, const RelaxKin& rk) {
    detail::check_phase_grid(grid);
    detail::check_relax(rk, ic.dim);

    FPLayout layout({{"mw_phase", grid.n, FactorKind::phase},
                     {"spin", ic.dim, FactorKind::spin}});

    const CSparse h0 = rotate_components(ic, {orientation.rotation()});
    const CSparse rkl = rk.sum();
    CSparse constant = detail::spatial_blockdiag(layout, [&](Eigen::Index j) {
        const double phi = grid.point(int(j)) + pulse.initial_phase;
        const CSparse l =
            h0 + pulse.amplitude * (std::cos(phi) * ops.sx + std::sin(phi) * ops.sy);
        return cxd(0.0, -1.0) * l + rkl;
    });
    if (pulse.carrier_offset != 0.0)
        constant =
            constant + lift(rotor_generator(grid, pulse.carrier_offset), layout, "mw_phase");
    return {std::move(constant), {}, layout};
}

struct OvertoneMas {
    Eigen::Vector3d axis{std::sqrt(2.0 / 3.0), 0.0, std::sqrt(1.0 / 3.0)};
    double rate = 0.0; // rad/s
    int grid_points = 15;
};

struct OvertoneRf {
    double amplitude_n = 0.0; // rad/s, overtone nucleus channel
    double frequency_n = 0.0; // rad/s phase increment of the nitrogen RF coordinate
    int grid_points = 5;
    double amplitude_h = 0.0; // rad/s, proton channel (fixed phase)
    int spin_n = -1;          // overtone nucleus index, -1 = first multiplicity >= 3
    int spin_h = 0;           // polarisation source index
};

// Overtone cross-polarisation generator: rotor phase x RF phase x spin with
// the angle-axis rotor Wigner factor; without RF it reduces to the
// free-evolution form on the rotor phase grid alone.
inline Generator assemble_overtone(const IrreducibleComponents& ic, const SpinSystem& sys,
                                   const OvertoneMas& mas,
                                   const std::optional<OvertoneRf>& rf,
                                   const Orientation& orientation, const RelaxKin& rk) {
    detail::check_relax(rk, ic.dim);
    const PhaseGrid mas_grid(mas.grid_points);
    detail::check_phase_grid(mas_grid);

    int spin_n = rf ? rf->spin_n : -1;
    if (spin_n < 0)
        for (int i = 0; i < sys.size(); ++i)
            if (sys.spin(i).multiplicity >= 3) {
                spin_n = i;
                break;
            }
    if (spin_n < 0 || !sys.quadrupolar(spin_n))
        throw InvalidInput("assemble_overtone: overtone nucleus must carry a quadrupolar tensor");

    auto block_l = [&](int jm) {
        return rotate_components(
            ic, {orientation.rotation(),
                 Rotation::angle_axis(mas.axis, mas_grid.point(jm))});
    };

    const CSparse rkl = rk.sum();
    const double ct = std::cos(magic_angle), st = std::sin(magic_angle);

    if (!rf) {
        FPLayout layout({{"rotor_phase", mas_grid.n, FactorKind::phase},
                         {"spin", ic.dim, FactorKind::spin}});
        CSparse constant = detail::spatial_blockdiag(layout, [&](Eigen::Index j) {
            return cxd(0.0, -1.0) * block_l(int(j)) + rkl;
        });
        if (mas.rate != 0.0)
            constant = constant + lift(rotor_generator(mas_grid, mas.rate), layout, "rotor_phase");
        return {std::move(constant), {}, layout};
    }

    const PhaseGrid rf_grid(rf->grid_points);
    detail::check_phase_grid(rf_grid);
    FPLayout layout({{"rotor_phase", mas_grid.n, FactorKind::phase},
                     {"rf_phase", rf_grid.n, FactorKind::phase},
                     {"spin", ic.dim, FactorKind::spin}});

    const SpinOps n_ops = sys.product_operators(spin_n);
    const SpinOps h_ops = sys.product_operators(rf->spin_h);
    const CSparse n_x = comm_superop(n_ops.sx), n_y = comm_superop(n_ops.sy),
                  n_z = comm_superop(n_ops.sz);
    const CSparse h_term =
        rf->amplitude_h * (ct * comm_superop(h_ops.sz) + st * comm_superop(h_ops.sx));

    // cache the rotor-phase Liouvillians, reused across the RF phase index
    std::vector<CSparse> l_mas;
    l_mas.reserve(size_t(mas_grid.n));
    for (int jm = 0; jm < mas_grid.n; ++jm) l_mas.push_back(block_l(jm));

    CSparse constant = detail::spatial_blockdiag(layout, [&](Eigen::Index p) {
        const int jr = int(p % rf_grid.n); // rf phase fastest
        const int jm = int(p / rf_grid.n);
        const double phi = rf_grid.point(jr);
        const CSparse l = l_mas[size_t(jm)] +
                          rf->amplitude_n * (ct * n_z + st * (std::cos(phi) * n_x +
                                                              std::sin(phi) * n_y)) +
                          h_term;
        return cxd(0.0, -1.0) * l + rkl;
    });
    if (mas.rate != 0.0)
        constant = constant + lift(rotor_generator(mas_grid, mas.rate), layout, "rotor_phase");
    if (rf->frequency_n != 0.0)
        constant = constant + lift(rotor_generator(rf_grid, rf->frequency_n), layout, "rf_phase");
    return {std::move(constant), {}, layout};
}

struct ControlPair {
    CSparse amplitude; // Hamiltonian superoperator lift: register with -i
    CSparse frequency; // phase derivative lift: register with +1
};

// Frequency-amplitude control operators: for each named phase factor, the
// amplitude operator cos(Phi) (x) Sx + sin(Phi) (x) Sy and the frequency
// operator d/dphi on that slot.
inline std::vector<ControlPair> build_fa_controls(
    const FPLayout& layout,
    const std::vector<std::pair<std::string, SpinChannelOps>>& channels) {
    std::vector<ControlPair> out;
    out.reserve(channels.size());
    for (const auto& [slot, ops] : channels) {
        const Eigen::Index idx = layout.find(slot);
        const auto& factor = layout.factors[size_t(idx)];
        if (factor.kind != FactorKind::phase)
            throw InvalidInput("build_fa_controls: slot '" + slot + "' is not a phase factor");
        const Eigen::Index n = factor.dim;

        CVector cphi(n), sphi(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double phi = two_pi * double(j) / double(n);
            cphi[j] = std::cos(phi);
            sphi[j] = std::sin(phi);
        }
        const CSparse dc = CSparse::diag(cphi), ds = CSparse::diag(sphi);
        ControlPair cp;
        cp.amplitude = lift_multi(layout, {{slot, &dc}, {"spin", &ops.sx}}) +
                       lift_multi(layout, {{slot, &ds}, {"spin", &ops.sy}});
        cp.frequency = n >= 2 ? lift(fourier_diff(int(n)), layout, slot)
                              : CSparse::zero(layout.total_dim(), layout.total_dim());
        out.push_back(std::move(cp));
    }
    return out;
}

} // namespace fpsim
