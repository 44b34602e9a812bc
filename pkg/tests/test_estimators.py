import numpy as np
import pytest

from actionscale.camera import CameraSpec, QuantizerState, phi_target_width
from actionscale.errors import SingularGram, ZeroDcGain
from actionscale.estimators import (
    EmbodiedEstimate,
    ImpulseEstimate,
    WindowData,
    estimate_biased,
    estimate_impulse_response,
    estimate_unbiased,
    excitation_check,
    to_embodied,
    to_embodied_value,
)
from actionscale.plant import PlantParams, PlantState, step_double_integrator
from actionscale.signals import (
    TimeSeries,
    convolve,
    cumulative_double_integral,
    make_exp_basis,
)

DT = 0.001
CAM = CameraSpec(200, 200, 90.0, 30.0)
Q_OFF = QuantizerState(enabled=False)


def control_grid(t_end):
    return TimeSeries(0.0, DT, np.zeros(int(round(t_end / DT)) + 1))


def sine_input(t_end, amp, freq):
    n = int(round(t_end / DT)) + 1
    t = DT * np.arange(n)
    return TimeSeries(0.0, DT, amp * np.sin(2.0 * np.pi * freq * t))


def cosine_input(t_end, amp, freq):
    # double integral of a cosine stays bounded, so a rest start oscillates
    # in place instead of drifting
    n = int(round(t_end / DT)) + 1
    t = DT * np.arange(n)
    return TimeSeries(0.0, DT, amp * np.cos(2.0 * np.pi * freq * t))


def simulate_touch_window(b=1.0, d=0.15, z0=1.5, t_end=3.0,
                          amp_m=0.25, freq=1.0 / 3.0, quantizer=Q_OFF,
                          cam=CAM):
    """Oscillate the distance-to-target state and observe it through the
    width extractor. Positive input opens the distance (Zdd = +b u)."""
    omega = 2.0 * np.pi * freq
    u = cosine_input(t_end, amp_m * omega ** 2, freq)
    p = PlantParams(b=b, dt=DT)
    s = PlantState(x=np.array([0.0, 0.0, z0]))
    z_traj = np.empty(len(u))
    z_traj[0] = z0
    for k in range(1, len(u)):
        s = step_double_integrator(s, float(u.values[k - 1]), p)
        z_traj[k] = s.x[2]
    z_series = TimeSeries(0.0, DT, z_traj)
    n_frames = int(np.floor(t_end * cam.fps)) + 1
    t_cam = np.arange(n_frames) / cam.fps
    phi_vals = np.array([
        phi_target_width(float(z_series.sample_at(t)), d, cam, quantizer)
        for t in t_cam
    ])
    phi = TimeSeries(0.0, 1.0 / cam.fps, phi_vals)
    return WindowData(phi=phi, u=u, window=(0.0, t_end))


def exact_window(b=1.0, d=0.15, x0=1.5, v0=0.0, t_end=3.0, seed=0):
    """Window whose phi lies exactly in the regressor span.

    Uses a piecewise-constant input and builds phi from the same trapezoid
    double integral the estimators use, so recovery is exact to rounding.
    """
    rng = np.random.default_rng(seed)
    n = int(round(t_end / DT)) + 1
    segments = rng.uniform(-1.0, 1.0, 10)
    u_vals = np.repeat(segments, int(np.ceil(n / 10)))[:n]
    u = TimeSeries(0.0, DT, u_vals)
    s = cumulative_double_integral(u)
    t_cam = np.arange(int(np.floor(t_end * 30.0)) + 1) / 30.0
    phi_vals = (x0 + v0 * t_cam + b * s.sample_at(t_cam)) / d
    phi = TimeSeries(0.0, 1.0 / 30.0, phi_vals)
    return WindowData(phi=phi, u=u, window=(0.0, t_end))


class TestDoubleIntegratorEstimators:
    def test_unbiased_recovers_simulated_truth(self):
        # 3e-6 is the floor set by the plant-integrator (semi-implicit) vs
        # regressor-quadrature (trapezoid) mismatch at dt = 1 ms
        w = simulate_touch_window()
        est = estimate_unbiased(w)
        assert est.b_over_d == pytest.approx(1.0 / 0.15, rel=3e-6)
        assert est.d_over_b == pytest.approx(0.15, rel=3e-6)
        assert est.x1_over_b == pytest.approx(1.5, rel=1e-5)

    def test_biased_recovers_simulated_truth(self):
        w = simulate_touch_window()
        est = estimate_biased(w)
        assert est.d_over_b == pytest.approx(0.15, rel=3e-6)

    def test_zero_input_raises_singular_gram(self):
        u = control_grid(3.0)
        phi = TimeSeries(0.0, 1.0 / 30.0, np.full(91, 10.0))
        w = WindowData(phi=phi, u=u, window=(0.0, 3.0))
        with pytest.raises(SingularGram):
            estimate_unbiased(w)
        with pytest.raises(SingularGram):
            estimate_biased(w)

    def test_short_pulse_is_enough(self):
        # 10 ms of nonzero input restores uniqueness
        u = control_grid(3.0)
        u.values[1000:1010] = 2.0
        s = cumulative_double_integral(u)
        t_cam = np.arange(91) / 30.0
        phi_vals = (1.5 + 1.0 * s.sample_at(t_cam)) / 0.15
        w = WindowData(phi=TimeSeries(0.0, 1.0 / 30.0, phi_vals), u=u,
                       window=(0.0, 3.0))
        est = estimate_unbiased(w)
        assert est.d_over_b == pytest.approx(0.15, rel=1e-6)

    def test_b_scaling_is_exact_on_exact_data(self):
        # identical input, gain halved: every ./b estimate doubles
        ests = {b: estimate_biased(exact_window(b=b)) for b in (0.5, 1.0, 2.0)}
        for b in (0.5, 2.0):
            ratio = 1.0 / b
            assert ests[b].d_over_b == pytest.approx(
                ratio * ests[1.0].d_over_b, rel=1e-9)
            assert ests[b].x1_over_b == pytest.approx(
                ratio * ests[1.0].x1_over_b, rel=1e-9)

    def test_family_consistency(self):
        w = simulate_touch_window()
        biased = estimate_biased(w)
        unbiased = estimate_unbiased(w)
        assert biased.d_over_b == pytest.approx(unbiased.d_over_b, rel=1e-6)
        assert biased.x1_over_b == pytest.approx(unbiased.x1_over_b, rel=1e-6)
        # internal family coherence
        assert biased.x1_over_b == pytest.approx(
            biased.x1_over_d / biased.b_over_d, rel=1e-9)
        assert biased.d_over_b == pytest.approx(1.0 / biased.b_over_d, rel=1e-12)

    def test_unbiased_beats_biased_under_noise(self):
        # additive zero-mean noise on phi: the unbiased form's mean error
        # stays within sampling noise while the biased form shows a clear
        # systematic offset
        base = exact_window(b=1.0, d=0.15, seed=3)
        sigma = 0.05
        rng = np.random.default_rng(12)
        truth = 1.0 / 0.15
        b_over_d_unbiased, b_over_d_biased = [], []
        for _ in range(400):
            noisy = TimeSeries(base.phi.t0, base.phi.dt,
                               base.phi.values + sigma * rng.standard_normal(
                                   len(base.phi)))
            w = WindowData(phi=noisy, u=base.u, window=base.window)
            b_over_d_unbiased.append(estimate_unbiased(w).b_over_d)
            b_over_d_biased.append(1.0 / estimate_biased(w).d_over_b)
        err_unbiased = abs(np.mean(b_over_d_unbiased) - truth)
        err_biased = abs(np.mean(b_over_d_biased) - truth)
        assert err_biased > 3.0 * err_unbiased

    def test_longer_window_reduces_variance(self):
        rng = np.random.default_rng(21)
        sigma = 0.05
        variances = []
        for t_end in (3.0, 6.0):
            base = exact_window(b=1.0, d=0.15, t_end=t_end, seed=5)
            vals = []
            for _ in range(200):
                noisy = TimeSeries(base.phi.t0, base.phi.dt,
                                   base.phi.values + sigma * rng.standard_normal(
                                       len(base.phi)))
                w = WindowData(phi=noisy, u=base.u, window=base.window)
                vals.append(estimate_unbiased(w).b_over_d)
            variances.append(np.var(vals))
        assert variances[1] < variances[0]


class TestImpulseResponseEstimator:
    def test_one_hot_recovery(self):
        # data generated from a single basis column: weights come back
        # one-hot on that column
        basis = make_exp_basis(10, 0.02, 0.4, 2.0, DT)
        true_idx = 4
        t_end = 8.0
        u = sine_input(t_end, 1.0, 1.0)
        u.values += 0.5  # bias the input so the kernel DC matters
        s = cumulative_double_integral(u)
        response = convolve(basis.columns[true_idx], s)
        t_cam = np.arange(int(np.floor(t_end * 60.0)) + 1) / 60.0
        kappa, v0 = 0.8, 0.3
        phi_vals = v0 * t_cam + kappa * response.sample_at(t_cam)
        w = WindowData(phi=TimeSeries(0.0, 1.0 / 60.0, phi_vals), u=u,
                       window=(0.0, t_end))
        est = estimate_impulse_response(w, basis, with_gravity=False,
                                        fit_interval_start=2.0)
        mass_outside = est.c.sum() - est.c[true_idx]
        assert est.c[true_idx] == pytest.approx(kappa, rel=1e-6)
        assert mass_outside < 1e-6 * kappa
        assert est.xdot0_over_d == pytest.approx(v0, rel=1e-6)

    def test_gravity_sign_convention(self):
        # downward gravity (position losing 0.5 g t^2) gives positive gb/d.
        # A pure sine-plus-offset input leaves kernel DC and gravity nearly
        # degenerate (both curve like t^2), so the input carries a ramp the
        # way the measurement script does.
        basis = make_exp_basis(6, 0.05, 0.3, 2.0, DT)
        t_end = 8.0
        t = DT * np.arange(int(round(t_end / DT)) + 1)
        ramp = np.clip(t / 1.5, 0.0, 1.0)
        u = TimeSeries(0.0, DT, 0.4 * ramp + np.sin(2 * np.pi * t) * (t > 1.5))
        s = cumulative_double_integral(u)
        response = convolve(basis.columns[2], s)
        t_cam = np.arange(int(np.floor(t_end * 60.0)) + 1) / 60.0
        g_over_d = 2.5
        phi_vals = 0.7 * response.sample_at(t_cam) - 0.5 * g_over_d * t_cam ** 2
        w = WindowData(phi=TimeSeries(0.0, 1.0 / 60.0, phi_vals), u=u,
                       window=(0.0, t_end))
        est = estimate_impulse_response(w, basis, fit_interval_start=2.0)
        assert est.gb_over_d == pytest.approx(g_over_d, rel=1e-6)
        assert est.dc_gain_over_d == pytest.approx(0.7, rel=1e-6)

    def test_zero_input_raises(self):
        basis = make_exp_basis(4, 0.05, 0.3, 1.0, DT)
        u = control_grid(6.0)
        phi = TimeSeries(0.0, 1.0 / 60.0, np.zeros(361))
        w = WindowData(phi=phi, u=u, window=(0.0, 6.0))
        with pytest.raises(SingularGram):
            estimate_impulse_response(w, basis, fit_interval_start=2.0)

    def test_weights_nonnegative(self):
        rng = np.random.default_rng(8)
        basis = make_exp_basis(8, 0.02, 0.4, 2.0, DT)
        u = TimeSeries(0.0, DT, rng.standard_normal(8001))
        s = cumulative_double_integral(u)
        t_cam = np.arange(481) / 60.0
        phi_vals = 0.3 * convolve(basis.columns[1], s).sample_at(t_cam)
        phi_vals += 0.05 * rng.standard_normal(len(t_cam))
        w = WindowData(phi=TimeSeries(0.0, 1.0 / 60.0, phi_vals), u=u,
                       window=(0.0, 8.0))
        est = estimate_impulse_response(w, basis, fit_interval_start=2.0)
        assert est.c.min() >= -1e-12
        assert est.dc_gain_over_d == pytest.approx(est.c.sum(), abs=1e-12)


class TestEmbodiedConversion:
    def test_scalar_division(self):
        assert to_embodied_value(1.5, 2.0) == pytest.approx(0.75)

    def test_identity_gain(self):
        assert to_embodied_value(1.5, 1.0) == 1.5

    def test_zero_gain_raises(self):
        with pytest.raises(ZeroDcGain):
            to_embodied_value(1.0, 0.0)

    def test_impulse_estimate_report(self):
        basis = make_exp_basis(3, 0.05, 0.2, 1.0, DT)
        est = ImpulseEstimate(c=np.array([0.1, 0.05, 0.05]),
                              xdot0_over_d=0.4, gb_over_d=3.27, basis=basis)
        rep = to_embodied(est)
        assert rep.scale == pytest.approx(5.0)       # 1 / 0.2
        assert rep.gravity == pytest.approx(16.35)   # 3.27 / 0.2
        assert rep.velocity == pytest.approx(2.0)

    def test_double_integrator_report(self):
        est = EmbodiedEstimate(x1_over_b=1.5, x2_over_b=-0.3, d_over_b=0.15,
                               x1_over_d=10.0, x2_over_d=-2.0,
                               b_over_d=1.0 / 0.15, gram_min_eig=1.0)
        rep = to_embodied(est)
        assert rep.position == pytest.approx(1.5)
        assert rep.scale == pytest.approx(0.15)


class TestExcitationCheck:
    def test_zero_input(self):
        basis = make_exp_basis(3, 0.05, 0.3, 1.0, DT)
        u = control_grid(3.0)
        _, min_eig = excitation_check(u, basis, (0.0, 3.0))
        assert min_eig == pytest.approx(0.0, abs=1e-15)

    def test_duplicated_inputs_are_singular(self):
        basis = make_exp_basis(3, 0.05, 0.3, 1.0, DT)
        one = sine_input(3.0, 1.0, 0.7).values
        u = TimeSeries(0.0, DT, np.column_stack([one, one]))
        gram, min_eig = excitation_check(u, basis, (0.0, 3.0))
        assert min_eig <= 1e-10 * np.trace(gram)

    def test_distinct_sinusoids_excite(self):
        basis = make_exp_basis(3, 0.05, 0.3, 1.0, DT)
        t = DT * np.arange(3001)
        u = TimeSeries(0.0, DT, np.column_stack([
            np.sin(2 * np.pi * 0.7 * t), np.sin(2 * np.pi * 1.3 * t)]))
        _, min_eig = excitation_check(u, basis, (0.0, 3.0))
        assert min_eig > 1e-8
