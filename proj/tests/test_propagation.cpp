#include <catch2/catch_amalgamated.hpp>

#include <fpsim/oracle.hpp>
#include <fpsim/propagation.hpp>

#include "test_util.hpp"

using namespace fpsim;
using fpsim::test::max_abs_diff;

namespace {

SpinSystem single_offset_spin(double offset_hz) {
    SpinSystem sys(9.4);
    sys.add_spin("1H", 0.0, offset_hz); // stored offset = +2 pi offset_hz
    return sys;
}

// Direct Cartesian Hilbert-space Hamiltonian; independent of the spherical
// tensor machinery (same construction as the spin-algebra oracle tests).
CMatrix direct_hilbert(const SpinSystem& sys, const Eigen::Matrix3d& r) {
    const Eigen::Index hd = sys.hilbert_dim();
    CMatrix h = CMatrix::Zero(hd, hd);
    for (int i = 0; i < sys.size(); ++i) {
        const SpinOps ops = sys.product_operators(i);
        const Eigen::Matrix3d z = 0.5 * (sys.zeeman(i) + sys.zeeman(i).transpose());
        const Eigen::Matrix3d an = z - (z.trace() / 3.0) * Eigen::Matrix3d::Identity();
        h += (z.trace() / 3.0 + (r * an * r.transpose())(2, 2)) * ops.sz.dense();
        if (sys.quadrupolar(i)) {
            const Eigen::Matrix3d q = r * (*sys.quadrupolar(i)) * r.transpose();
            const CMatrix ss = (ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz).dense();
            h += q(2, 2) * 0.5 * (3.0 * (ops.sz * ops.sz).dense() - ss);
        }
    }
    for (const auto& c : sys.couplings()) {
        const SpinOps a = sys.product_operators(c.i);
        const SpinOps b = sys.product_operators(c.j);
        const bool homo = is_homonuclear(sys.spin(c.i), sys.spin(c.j));
        const Eigen::Matrix3d sym = 0.5 * (c.tensor + c.tensor.transpose());
        const Eigen::Matrix3d an = sym - (sym.trace() / 3.0) * Eigen::Matrix3d::Identity();
        const double zz = (r * an * r.transpose())(2, 2);
        const double iso = two_pi * c.j_hz + sym.trace() / 3.0;
        const CMatrix dot = (a.sx * b.sx + a.sy * b.sy + a.sz * b.sz).dense();
        if (homo)
            h += iso * dot + zz * 0.5 * (3.0 * (a.sz * b.sz).dense() - dot);
        else
            h += (iso + zz) * (a.sz * b.sz).dense();
    }
    return h;
}

} // namespace

TEST_CASE("distribute and spatial_average round trip") {
    const FPLayout lay({{"p", 5, FactorKind::phase}, {"spin", 4, FactorKind::spin}});
    const CVector rho0 = test::random_vector(4);
    const FPState s = distribute_state(rho0, lay);
    REQUIRE(max_abs_diff(spatial_average(s), rho0) < 1e-14);

    // degenerate single-point layout: the state is rho0 itself
    const FPLayout one({{"p", 1, FactorKind::phase}, {"spin", 4, FactorKind::spin}});
    REQUIRE(max_abs_diff(distribute_state(rho0, one).vector, rho0) == 0.0);

    // linearity of the average
    const FPState a = distribute_state(test::random_vector(4), lay);
    FPState b = distribute_state(test::random_vector(4), lay);
    b.vector = 2.0 * b.vector;
    FPState sum{a.vector + b.vector, lay};
    REQUIRE(max_abs_diff(spatial_average(sum),
                         CVector(spatial_average(a) + spatial_average(b))) < 1e-13);

    // adjointness of the coil lift
    const CVector coil = test::random_vector(4);
    const CVector v = test::random_vector(20);
    const FPState sv{v, lay};
    REQUIRE(std::abs(lift_coil(coil, lay).dot(v) - coil.dot(spatial_average(sv))) < 1e-12);

    // weights must sum to one
    std::vector<Eigen::VectorXd> bad{Eigen::VectorXd::Constant(5, 0.3)};
    REQUIRE_THROWS_AS(distribute_state(rho0, lay, bad), InvalidInput);

    // delta weights place everything in one block
    std::vector<Eigen::VectorXd> delta{Eigen::VectorXd::Zero(5)};
    delta[0][2] = 1.0;
    const FPState d = distribute_state(rho0, lay, delta);
    REQUIRE(d.vector.segment(8, 4).isApprox(rho0));
    REQUIRE(d.vector.head(8).norm() == 0.0);
}

TEST_CASE("evolve: identity at t = 0, semigroup property, channel guard") {
    SpinSystem sys = single_offset_spin(150.0);
    const IrreducibleComponents ic = build_components(sys);
    const Generator g = assemble_singlerot(ic, Rotation::identity(), two_pi * 700.0,
                                           PhaseGrid(6), Orientation{},
                                           RelaxKin::none(ic.dim));
    const FPState s0 = distribute_state(vec(spin_operators(2).sx.dense()), g.layout);

    REQUIRE(max_abs_diff(evolve(g, s0, 0.0).vector, s0.vector) == 0.0);

    const FPState two_half = evolve(g, evolve(g, s0, 1e-3), 2e-3);
    const FPState full = evolve(g, s0, 3e-3);
    REQUIRE((two_half.vector - full.vector).norm() < 1e-9 * full.vector.norm());

    const SpinChannelOps ops = make_channel_ops(sys);
    SpatiotemporalSpec spec;
    const Generator gc = assemble_spatiotemporal(
        ic, CoordinateGrid::uniform(0, 1e-2, 4, Boundary::periodic), spec, ops,
        RelaxKin::none(ic.dim));
    const FPState sc = distribute_state(vec(spin_operators(2).sx.dense()), gc.layout);
    REQUIRE_THROWS_AS(evolve(gc, sc, 1e-3), InvalidInput);
}

TEST_CASE("evolve_schedule with zero coefficients equals evolve") {
    SpinSystem sys = single_offset_spin(80.0);
    const IrreducibleComponents ic = build_components(sys);
    const SpinChannelOps ops = make_channel_ops(sys);
    SpatiotemporalSpec spec;
    spec.phase_grid = PhaseGrid(4);
    const Generator g = assemble_spatiotemporal(
        ic, CoordinateGrid::uniform(0, 1e-2, 4, Boundary::periodic), spec, ops,
        RelaxKin::none(ic.dim));

    const FPState s0 = distribute_state(vec(spin_operators(2).sx.dense()), g.layout);
    Waveform wf;
    wf.slices.push_back({2e-3, {{"rf_amplitude_x", 0.0}, {"rf_amplitude_y", 0.0}}});
    const Generator g_frozen = g.with_coefficients({});
    REQUIRE(max_abs_diff(evolve_schedule(g, wf, s0).vector,
                         evolve(g_frozen, s0, 2e-3).vector) < 1e-12);

    Waveform bad;
    bad.slices.push_back({1e-3, {{"nope", 1.0}}});
    REQUIRE_THROWS_AS(evolve_schedule(g, bad, s0), InvalidInput);
}

TEST_CASE("hard pulse through the phase-grid RF channels matches the Rabi formula") {
    // off-resonance nutation driven entirely by the phase coordinate
    SpinSystem sys = single_offset_spin(0.0);
    const IrreducibleComponents ic = build_components(sys);
    const SpinChannelOps ops = make_channel_ops(sys);
    SpatiotemporalSpec spec;
    spec.phase_grid = PhaseGrid(32);
    const Generator g = assemble_spatiotemporal(
        ic, CoordinateGrid::uniform(0, 1e-2, 3, Boundary::periodic), spec, ops,
        RelaxKin::none(ic.dim));

    const double amp = two_pi * 25e3;
    const double delta = two_pi * 10e3; // carrier offset via the frequency channel
    const double omega_eff = std::hypot(amp, delta);
    const double t_p = 0.7 * two_pi / omega_eff;

    // coherent pulse: the state enters as a delta in the phase coordinate
    std::vector<Eigen::VectorXd> delta_w{Eigen::VectorXd::Zero(32), Eigen::VectorXd()};
    delta_w[0][0] = 1.0;
    const SpinOps s = spin_operators(2);
    const FPState s0 = distribute_state(vec(s.sz.dense()), g.layout, delta_w);

    Waveform wf;
    wf.slices.push_back({t_p,
                         {{"rf_amplitude_x", amp},
                          {"rf_amplitude_y", amp},
                          {"rf_frequency", delta}}});
    const CVector rho = spatial_average(evolve_schedule(g, wf, s0));

    // analytic off-resonance Rabi: Mz(t) = 1 - 2 a^2/W^2 sin^2(W t/2)
    const double mz_expect =
        1.0 - 2.0 * (amp * amp) / (omega_eff * omega_eff) *
                  std::pow(std::sin(0.5 * omega_eff * t_p), 2);
    const CVector sz_vec = vec(s.sz.dense());
    const double mz = (sz_vec.dot(rho) / sz_vec.dot(vec(s.sz.dense()))).real();
    REQUIRE(std::abs(mz - mz_expect) < 1e-3);
}

TEST_CASE("slice refinement of a smooth sweep is self-consistent") {
    SpinSystem sys = single_offset_spin(200.0);
    const IrreducibleComponents ic = build_components(sys);
    const SpinChannelOps ops = make_channel_ops(sys);
    SpatiotemporalSpec spec;
    spec.phase_grid = PhaseGrid(16);
    const Generator g = assemble_spatiotemporal(
        ic, CoordinateGrid::uniform(0, 1e-2, 3, Boundary::periodic), spec, ops,
        RelaxKin::none(ic.dim));

    std::vector<Eigen::VectorXd> delta_w{Eigen::VectorXd::Zero(16), Eigen::VectorXd()};
    delta_w[0][0] = 1.0;
    const FPState s0 = distribute_state(vec(spin_operators(2).sz.dense()), g.layout, delta_w);

    // WURST-style smooth amplitude with a linear frequency ramp
    auto run = [&](int n_slices) {
        Waveform wf;
        const double t_total = 1e-3;
        for (int k = 0; k < n_slices; ++k) {
            const double x = (k + 0.5) / n_slices;
            WaveformSlice sl;
            sl.duration_s = t_total / n_slices;
            sl.coefficients["rf_amplitude_x"] =
                two_pi * 10e3 * (1.0 - std::pow(std::abs(std::cos(pi * x)), 8));
            sl.coefficients["rf_amplitude_y"] = sl.coefficients["rf_amplitude_x"];
            sl.coefficients["rf_frequency"] = two_pi * 2e3 * (2.0 * x - 1.0);
            wf.slices.push_back(sl);
        }
        return evolve_schedule(g, wf, s0).vector;
    };
    const CVector coarse = run(4000);
    const CVector fine = run(8000);
    REQUIRE((coarse - fine).norm() / fine.norm() < 1e-6);
}

TEST_CASE("lvn oracle: superoperator equivalence and constant-H agreement") {
    // vec(U rho U^+) equals the superoperator exponential applied to vec(rho)
    const CMatrix h = test::random_hermitian(3) * 1e3;
    const CMatrix rho0 = test::random_hermitian(3);
    const double t = 2.3e-3;
    const CMatrix u = expm_dense(cxd(0, -1) * t * h);
    const CVector via_hilbert = vec((u * rho0 * u.adjoint()).eval());
    const CVector via_superop =
        expmv(cxd(0, -1) * comm_superop(CSparse::from_dense(h)), vec(rho0), t, 1e-12);
    REQUIRE(max_abs_diff(via_hilbert, via_superop) < 1e-10 * rho0.norm());

    // constant sampler matches evolve through the Fokker-Planck machinery
    SpinSystem sys = single_offset_spin(120.0);
    const IrreducibleComponents ic = build_components(sys);
    const Generator g = assemble_singlerot(ic, Rotation::identity(), 0.0, PhaseGrid(4),
                                           Orientation{}, RelaxKin::none(ic.dim));
    const SpinOps s = spin_operators(2);
    const FPState s0 = distribute_state(vec(s.sx.dense()), g.layout);
    const CVector fp = spatial_average(evolve(g, s0, 1e-3));
    const CMatrix hh = direct_hilbert(sys, Eigen::Matrix3d::Identity());
    const CMatrix rho = lvn_propagate([&](double) { return hh; }, s.sx.dense(), 1e-5, 100);
    REQUIRE(max_abs_diff(fp, vec(rho)) < 1e-9);
}

TEST_CASE("Fokker-Planck MAS equals the gamma-averaged time-sliced oracle") {
    // small version of the acceptance experiment, run at unit-test scale
    SpinSystem sys(9.4);
    const double gamma_h = isotope_lookup("1H")->gamma;
    const double hz_per_ppm = gamma_h * 9.4 * 1e-6 / two_pi;
    const double aniso_ppm = 5000.0 / hz_per_ppm;
    Eigen::Matrix3d shift = Eigen::Matrix3d::Zero();
    shift(0, 0) = -0.5 * aniso_ppm;
    shift(1, 1) = -0.5 * aniso_ppm;
    shift(2, 2) = aniso_ppm;
    sys.add_spin_tensor("1H", shift);
    const IrreducibleComponents ic = build_components(sys);

    const int n_grid = 24;
    const double rate = two_pi * 2000.0;
    const Orientation ori{0.4, 1.2, 0.0};
    const Rotation axis = Rotation::z_to_axis(Eigen::Vector3d(1, 1, 1) / std::sqrt(3.0));
    const Generator g = assemble_singlerot(ic, axis, rate, PhaseGrid(n_grid), ori,
                                           RelaxKin::none(ic.dim));

    const SpinOps s = spin_operators(2);
    const FPState s0 = distribute_state(vec(s.sx.dense()), g.layout);
    const int n_pts = 64;
    const double dwell = 50e-6;
    const Trajectory fp = acquire_fid(g, s0, vec(s.sp.dense()), dwell, n_pts);

    // oracle: average over rotor phases, sampled phase moving at -rate
    const Eigen::Matrix3d r_axis = axis.matrix3();
    const Eigen::Matrix3d r_cr = ori.rotation().matrix3();
    CVector oracle = CVector::Zero(n_pts);
    for (int j = 0; j < n_grid; ++j) {
        const double phi0 = two_pi * j / n_grid;
        auto h = [&](double t) {
            const Eigen::Matrix3d rz =
                Rotation::about_z(phi0 - rate * t).matrix3();
            return direct_hilbert(sys, r_axis * rz * r_cr);
        };
        const Trajectory tr = lvn_fid(h, s.sx.dense(), dwell, n_pts, 50, s.sp.dense());
        oracle += tr.values / double(n_grid);
    }

    double rms = (fp.values - oracle).norm() / std::sqrt(double(n_pts));
    const double peak = fp.values.cwiseAbs().maxCoeff();
    REQUIRE(rms < 0.005 * peak);
}

TEST_CASE("deer pulse with a delta phase distribution equals the coherent oracle") {
    SpinSystem sys(0.34);
    sys.add_spin("1H", 0.0, 12e6); // stored offset 2 pi 12 MHz
    const IrreducibleComponents ic = build_components(sys);
    const SpinChannelOps ops = make_channel_ops(sys);
    const DeerPulse pulse{two_pi * 8e6, two_pi * 15e6, 0.4};
    const double t_p = 60e-9;

    const SpinOps s = spin_operators(2);
    auto run_fp = [&](int n_grid) {
        const Generator g = assemble_deer(ic, pulse, PhaseGrid(n_grid), Orientation{}, ops,
                                          RelaxKin::none(ic.dim));
        std::vector<Eigen::VectorXd> delta_w{Eigen::VectorXd::Zero(n_grid)};
        delta_w[0][0] = 1.0;
        const FPState s0 = distribute_state(vec(s.sz.dense()), g.layout, delta_w);
        return spatial_average(evolve(g, s0, t_p, 1e-12));
    };

    // coherent member: drive phase phi0 - offset * t
    const CMatrix h0 = direct_hilbert(sys, Eigen::Matrix3d::Identity());
    auto h = [&](double t) {
        const double phi = pulse.initial_phase - pulse.carrier_offset * t;
        return CMatrix(h0 + pulse.amplitude * (std::cos(phi) * s.sx.dense() +
                                               std::sin(phi) * s.sy.dense()));
    };
    const CMatrix rho = lvn_propagate(h, s.sz.dense(), t_p / 4000.0, 4000);
    const CVector oracle = vec(rho);

    // the delta distribution reproduces the coherent pulse essentially exactly;
    // residuals sit at the oracle's own time-slicing floor
    REQUIRE(max_abs_diff(run_fp(9), oracle) < 1e-6);
    REQUIRE(max_abs_diff(run_fp(17), oracle) < 1e-6);
}

TEST_CASE("acquire_fid conserves the identity coil and tracks precession phase") {
    SpinSystem sys = single_offset_spin(321.0);
    const IrreducibleComponents ic = build_components(sys);
    const Generator g = assemble_singlerot(ic, Rotation::identity(), two_pi * 400.0,
                                           PhaseGrid(4), Orientation{},
                                           RelaxKin::none(ic.dim));
    const SpinOps s = spin_operators(2);
    const CVector id = vec(CMatrix::Identity(2, 2));

    FPState mixed = distribute_state(CVector(vec(s.sz.dense()) + 0.5 * id), g.layout);
    const Trajectory tr_id = acquire_fid(g, mixed, id, 1e-4, 32);
    for (int k = 0; k < 32; ++k)
        REQUIRE(std::abs(tr_id.values[k] - tr_id.values[0]) < 1e-10);

    // single spin at offset delta: coil S+ sees e^{-i delta t}
    const FPState sp = distribute_state(vec(s.sp.dense()), g.layout);
    const double delta = two_pi * 321.0;
    const Trajectory tr = acquire_fid(g, sp, vec(s.sp.dense()), 1e-4, 16);
    for (int k = 0; k < 16; ++k) {
        const cxd expect = tr.values[0] * std::exp(cxd(0, -delta * 1e-4 * k));
        REQUIRE(std::abs(tr.values[k] - expect) < 1e-10 * std::abs(tr.values[0]));
    }
}

TEST_CASE("detect_fd: scalar Lorentzian and the undamped failure mode") {
    SpinSystem sys = single_offset_spin(100.0);
    const IrreducibleComponents ic = build_components(sys);
    const double t2 = 0.02;
    const RelaxKin rk = relax_kin(sys, {{std::numeric_limits<double>::infinity()}, {t2}});
    const Generator g = assemble_singlerot(ic, Rotation::identity(), 0.0, PhaseGrid(4),
                                           Orientation{}, rk);
    const SpinOps s = spin_operators(2);
    const FPState s0 = distribute_state(vec(s.sp.dense()), g.layout);

    const double delta = two_pi * 100.0;
    Eigen::VectorXd omegas(3);
    omegas << -delta, -delta + 1.0 / t2, -delta - 200.0;
    const Spectrum spec = detect_fd(g, s0, vec(s.sp.dense()), omegas);

    // peak at the negated stored offset, half width 1/T2
    REQUIRE(std::abs(spec.values[0]) > std::abs(spec.values[1]));
    REQUIRE(std::abs(spec.values[0]) > std::abs(spec.values[2]));
    REQUIRE(std::abs(std::abs(spec.values[1]) / std::abs(spec.values[0]) -
                     1.0 / std::sqrt(2.0)) < 0.05);

    // undamped generator: the shift hits an eigenvalue and the solve reports it
    const Generator g0 = assemble_singlerot(ic, Rotation::identity(), 0.0, PhaseGrid(4),
                                            Orientation{}, RelaxKin::none(ic.dim));
    Eigen::VectorXd bad(1);
    bad << -delta;
    REQUIRE_THROWS_AS(detect_fd(g0, s0, vec(s.sp.dense()), bad), NumericalError);
}

TEST_CASE("detect_fd matches the FFT of the FID on a damped two-spin system") {
    SpinSystem sys(9.4);
    sys.add_spin("1H", 0.0, 60.0);
    sys.add_spin("1H", 0.0, -45.0);
    sys.add_j_coupling(0, 1, 12.0);
    const IrreducibleComponents ic = build_components(sys);
    const double t2 = 0.05;
    const RelaxKin rk = relax_kin(sys, {{0.1, 0.1}, {t2, t2}});
    const Generator g = assemble_singlerot(ic, Rotation::identity(), 0.0, PhaseGrid(4),
                                           Orientation{}, rk);

    const SpinChannelOps chan = make_channel_ops(sys);
    CMatrix sx_tot = CMatrix::Zero(4, 4), sp_tot = CMatrix::Zero(4, 4);
    for (int i = 0; i < 2; ++i) {
        const SpinOps ops = sys.product_operators(i);
        sx_tot += ops.sx.dense();
        sp_tot += ops.sp.dense();
    }
    (void)chan;
    const FPState s0 = distribute_state(vec(sx_tot), g.layout);
    const CVector coil = vec(sp_tot);

    const int n = 4096;
    const double dwell = 1e-3;
    const Trajectory fid = acquire_fid(g, s0, coil, dwell, n);
    Trajectory corrected = fid;
    corrected.values[0] *= 0.5;
    Spectrum ft = fft_fid(corrected, dwell);
    ft.values *= dwell; // continuous-transform normalisation

    const Spectrum res = detect_fd(g, s0, coil, ft.axis);
    const double rms = (res.values - ft.values).norm() / std::sqrt(double(n));
    const double peak = ft.values.cwiseAbs().maxCoeff();
    REQUIRE(rms < 0.02 * peak);
}

TEST_CASE("powder averaging: identity wrapper, isotropy, axial second moment") {
    // single orientation: identity wrapper
    const SphericalGrid one = spherical_grid(1);
    auto runner = [](Eigen::Index, const Orientation& o) {
        Spectrum s;
        s.axis = Eigen::VectorXd::Zero(1);
        s.values = CVector::Constant(1, cxd(std::cos(o.beta), 0));
        return s;
    };
    REQUIRE(std::abs(powder_average(runner, one).values[0] - cxd(1, 0)) < 1e-15);

    // isotropic system: powder equals single crystal
    SpinSystem sys = single_offset_spin(70.0);
    const IrreducibleComponents ic = build_components(sys);
    const SpinOps s = spin_operators(2);
    auto fid_runner = [&](Eigen::Index, const Orientation& o) {
        const Generator g = assemble_singlerot(ic, Rotation::identity(), 0.0, PhaseGrid(4),
                                               o, RelaxKin::none(ic.dim));
        const FPState st = distribute_state(vec(s.sp.dense()), g.layout);
        const Trajectory tr = acquire_fid(g, st, vec(s.sp.dense()), 1e-4, 8);
        Spectrum sp;
        sp.axis = tr.times;
        sp.values = tr.values;
        return sp;
    };
    const Spectrum iso_many = powder_average(fid_runner, spherical_grid(50));
    const Spectrum iso_one = powder_average(fid_runner, one);
    REQUIRE((iso_many.values - iso_one.values).cwiseAbs().maxCoeff() <
            1e-12 * iso_one.values.cwiseAbs().maxCoeff());

    // axial CSA static powder: second moment of the line is (4/45) dsigma^2
    SpinSystem csa(9.4);
    Eigen::Matrix3d t = Eigen::Matrix3d::Zero();
    const double dsigma_ppm = 12.0; // sigma_par - sigma_perp
    t(2, 2) = 2.0 * dsigma_ppm / 3.0;
    t(0, 0) = -dsigma_ppm / 3.0;
    t(1, 1) = -dsigma_ppm / 3.0;
    csa.add_spin_tensor("1H", t);
    const IrreducibleComponents icc = build_components(csa);
    const double dsigma_rad =
        isotope_lookup("1H")->gamma * 9.4 * 1e-6 * dsigma_ppm; // rad/s

    const double dwell = 1e-6;
    auto freq_runner = [&](Eigen::Index, const Orientation& o) {
        const Generator g = assemble_singlerot(icc, Rotation::identity(), 0.0, PhaseGrid(4),
                                               o, RelaxKin::none(icc.dim));
        const FPState st = distribute_state(vec(s.sp.dense()), g.layout);
        const Trajectory tr = acquire_fid(g, st, vec(s.sp.dense()), dwell, 2);
        Spectrum sp;
        sp.axis = Eigen::VectorXd::Zero(2);
        const double w = -std::arg(tr.values[1] / tr.values[0]) / dwell;
        sp.values = CVector::Zero(2);
        sp.values[0] = w;     // first moment accumulator
        sp.values[1] = w * w; // second moment accumulator
        return sp;
    };
    const Spectrum mom = powder_average(freq_runner, spherical_grid(2000));
    const double mean = mom.values[0].real();
    const double m2 = mom.values[1].real() - mean * mean;
    REQUIRE(std::abs(m2 - (4.0 / 45.0) * dsigma_rad * dsigma_rad) <
            0.02 * (4.0 / 45.0) * dsigma_rad * dsigma_rad);
}

TEST_CASE("conservation and hermiticity along Fokker-Planck trajectories") {
    SpinSystem sys(9.4);
    Eigen::Matrix3d t = Eigen::Matrix3d::Zero();
    t(0, 0) = -2.0;
    t(1, 1) = 1.0;
    t(2, 2) = 1.0;
    sys.add_spin_tensor("1H", t);
    const IrreducibleComponents ic = build_components(sys);
    const Generator g = assemble_singlerot(ic, Rotation::euler(0, magic_angle, 0),
                                           two_pi * 3000.0, PhaseGrid(12),
                                           Orientation{0.7, 0.9, 0.0},
                                           RelaxKin::none(ic.dim));

    const SpinOps s = spin_operators(2);
    const CVector id = vec(CMatrix::Identity(2, 2));
    FPState st = distribute_state(CVector(vec(s.sz.dense()) + 0.25 * id), g.layout);
    const CVector lifted = lift_coil(id, g.layout);
    const cxd q0 = lifted.dot(st.vector);
    for (int k = 0; k < 20; ++k) {
        st = evolve(g, st, 5e-5);
        REQUIRE(std::abs(lifted.dot(st.vector) - q0) < 1e-10 * std::abs(q0));
        const CMatrix rho = unvec(spatial_average(st), 2);
        REQUIRE(max_abs_diff(rho, rho.adjoint().eval()) < 1e-9);
    }
}
