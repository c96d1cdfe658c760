"""Integrators: stepping rules, convergence orders, noise stream contracts,
divergence detection, and the g = 0 factorization against an independent
adaptive integrator (scipy's solve_ivp on the single-qubit equations).
"""

import importlib
import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

# the package re-exports the integrate() function under the module's own
# name, so fetch the module itself for monkeypatching
integrate_module = importlib.import_module("qubitamp.integrate")

from qubitamp.bloch import COMPONENTS, BlochTensor, thermal_product_state
from qubitamp.errors import DivergenceError, ParameterError
from qubitamp.integrate import (
    IntegratorConfig,
    NoiseStream,
    PhysicalityWarning,
    check_stability,
    integrate,
    run_ensemble,
    stability_bound,
    step,
)
from qubitamp.model import DriveParams, QubitPairParams

QUIET = DriveParams()


def damped_params():
    return QubitPairParams.symmetric(delta=1.0, g=1.0, gamma_phi=1e-3, gamma_r=1e-3, zt=1.0)


class TestConfig:
    def test_derived_quantities(self):
        cfg = IntegratorConfig(dt=1e-3, t_total=10.0, t_transient=1.0, sample_stride=10)
        assert cfg.n_steps == 10_000
        assert cfg.sample_spacing == pytest.approx(1e-2)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(dt=0.0),
            dict(t_transient=5.0, t_total=4.0),
            dict(sample_stride=0),
            dict(method="heun"),
            dict(seed=-1),
            dict(n_realizations=0),
        ],
    )
    def test_validation(self, kwargs):
        base = dict(dt=1e-3, t_total=10.0, t_transient=1.0)
        base.update(kwargs)
        with pytest.raises(ParameterError):
            IntegratorConfig(**base)


class TestStabilityGuard:
    def test_bound_formula(self):
        params = QubitPairParams.symmetric(delta=1.0, g=1.0)
        drive = DriveParams(amp_pump=15.0, omega_pump=0.4, amp_weak=0.1, omega_weak=2.4)
        # drive scale 15.1 dominates the spectral scale 2*sqrt(2)
        assert stability_bound(params, drive, 1e-3) == pytest.approx(15.1e-3)

    def test_rejects_coarse_step(self):
        params = QubitPairParams.symmetric()
        drive = DriveParams(amp_pump=600.0, omega_pump=1.0)
        with pytest.raises(ParameterError, match="stability"):
            check_stability(params, drive, 1e-3)

    def test_noise_enters_the_bound(self):
        params = QubitPairParams.symmetric()
        quiet = DriveParams()
        noisy = DriveParams(noise_d=1.0)
        dt = 1e-2
        assert stability_bound(params, noisy, dt) > stability_bound(params, quiet, dt)


class TestSingleStep:
    def test_euler_step_from_thermal_state(self):
        # only the coupling acts at t=0: XY and YX move by -2 g zt dt
        p = damped_params()
        out = step(thermal_product_state(p), 0.0, 1e-3, p, QUIET)
        assert isinstance(out, BlochTensor)
        assert out["XY"] == pytest.approx(-2e-3, rel=1e-12)
        assert out["YX"] == pytest.approx(-2e-3, rel=1e-12)
        assert out["IZ"] == pytest.approx(1.0, abs=1e-15)
        assert out["ZZ"] == pytest.approx(1.0, abs=1e-15)

    def test_plain_array_in_plain_array_out(self):
        p = damped_params()
        out = step(np.zeros(15), 0.0, 1e-3, p, QUIET, method="rk4")
        assert isinstance(out, np.ndarray)

    def test_rk4_refuses_noise(self):
        p = damped_params()
        with pytest.raises(ParameterError, match="euler"):
            step(np.zeros(15), 0.0, 1e-3, p, DriveParams(noise_d=1e-6), method="rk4")

    def test_noisy_step_needs_stream(self):
        p = damped_params()
        with pytest.raises(ParameterError, match="stream"):
            step(np.zeros(15), 0.0, 1e-3, p, DriveParams(noise_d=1e-6))

    def test_unknown_method(self):
        with pytest.raises(ParameterError):
            step(np.zeros(15), 0.0, 1e-3, damped_params(), QUIET, method="verlet")


class TestKernelAgainstReferenceStep:
    """The compiled kernels must reproduce the pure-python stepping rule."""

    def run_both(self, method, drive, n_steps, dt=1e-3, stream_seed=None):
        p = damped_params()
        cfg = IntegratorConfig(
            dt=dt, t_total=n_steps * dt, t_transient=0.0, sample_stride=1,
            method=method, seed=3,
        )
        stream = NoiseStream(3, 0) if stream_seed is not None else None
        ts = integrate(p, drive, cfg, channels=COMPONENTS, noise_stream=stream)
        kernel_path = np.stack([ts.channel(c) for c in COMPONENTS], axis=1)

        ref_stream = NoiseStream(3, 0) if stream_seed is not None else None
        s = thermal_product_state(p).values
        ref_path = [s]
        for n in range(n_steps):
            s = step(s, n * dt, dt, p, drive, noise_stream=ref_stream, method=method)
            ref_path.append(s)
        return kernel_path, np.stack(ref_path)

    def test_euler_deterministic(self, no_physicality_warnings):
        # raw Euler at this dt drifts mildly unphysical; agreement with the
        # reference stepper is what matters here
        drive = DriveParams(amp_pump=15.0, omega_pump=0.414, amp_weak=0.1, omega_weak=2.414)
        kernel, ref = self.run_both("euler", drive, 500)
        assert np.max(np.abs(kernel - ref)) < 1e-9

    def test_rk4(self):
        drive = DriveParams(amp_pump=15.0, omega_pump=0.414, amp_weak=0.1, omega_weak=2.414)
        kernel, ref = self.run_both("rk4", drive, 300)
        assert np.max(np.abs(kernel - ref)) < 1e-9

    def test_euler_with_noise(self, no_physicality_warnings):
        drive = DriveParams(amp_pump=1.0, omega_pump=0.414, noise_d=1e-4)
        kernel, ref = self.run_both("euler", drive, 200, stream_seed=3)
        assert np.max(np.abs(kernel - ref)) < 1e-9


class TestRotationLimit:
    """g = 0, no damping: IX + i IY precesses at the splitting frequency."""

    DELTA = 1.3

    def params(self):
        return QubitPairParams.symmetric(delta=self.DELTA, g=0.0)

    def initial(self):
        return BlochTensor.from_components(ix=1.0)

    def rotation_error(self, method, dt, t_total=5.0):
        cfg = IntegratorConfig(
            dt=dt, t_total=t_total, t_transient=0.0, sample_stride=1, method=method
        )
        ts = integrate(self.params(), QUIET, cfg, self.initial(), channels=("IX", "IY"))
        ix = np.cos(self.DELTA * ts.times)
        iy = -np.sin(self.DELTA * ts.times)
        return max(
            np.max(np.abs(ts.channel("IX") - ix)),
            np.max(np.abs(ts.channel("IY") - iy)),
        )

    def test_rotation_phase_and_sense(self):
        assert self.rotation_error("rk4", 1e-3, t_total=10.0) < 1e-6

    def test_euler_first_order(self):
        ratio = self.rotation_error("euler", 1e-4) / self.rotation_error("euler", 5e-5)
        assert ratio == pytest.approx(2.0, rel=0.2)

    def test_rk4_fourth_order(self):
        ratio = self.rotation_error("rk4", 1.6e-2) / self.rotation_error("rk4", 8e-3)
        assert ratio == pytest.approx(16.0, rel=0.2)


class TestDeterminism:
    def test_identical_runs_bit_identical(self):
        p = damped_params()
        drive = DriveParams(amp_pump=15.0, omega_pump=0.414, amp_weak=0.1, omega_weak=2.414)
        cfg = IntegratorConfig(dt=1e-3, t_total=50.0, t_transient=0.0, sample_stride=10, method="rk4")
        a = integrate(p, drive, cfg)
        b = integrate(p, drive, cfg)
        assert np.array_equal(a.channel("Z1"), b.channel("Z1"))
        assert np.array_equal(a.channel("X1"), b.channel("X1"))

    def test_noisy_ensemble_reproducible_and_diverse(self, no_physicality_warnings):
        p = damped_params()
        drive = DriveParams(amp_pump=1.0, omega_pump=0.414, noise_d=1e-4)
        cfg = IntegratorConfig(
            dt=1e-3, t_total=50.0, t_transient=0.0, sample_stride=10,
            method="euler", seed=12, n_realizations=3,
        )
        first = run_ensemble(p, drive, cfg)
        second = run_ensemble(p, drive, cfg)
        assert [ts.metadata["realization"] for ts in first] == [0, 1, 2]
        for a, b in zip(first, second):
            assert np.array_equal(a.channel("Z1"), b.channel("Z1"))
        assert not np.array_equal(first[0].channel("Z1"), first[1].channel("Z1"))

    def test_chunking_does_not_change_the_path(self, monkeypatch, no_physicality_warnings):
        p = damped_params()
        drive = DriveParams(amp_pump=1.0, omega_pump=0.414, noise_d=1e-4)
        cfg = IntegratorConfig(
            dt=1e-3, t_total=30.0, t_transient=0.0, sample_stride=7,
            method="euler", seed=5,
        )
        whole = integrate(p, drive, cfg)
        # force many small chunks; must stay a multiple of the phasor resync
        monkeypatch.setattr(integrate_module, "NOISE_CHUNK_STEPS", 8192)
        pieces = integrate(p, drive, cfg)
        assert np.array_equal(whole.channel("Z1"), pieces.channel("Z1"))
        assert np.array_equal(whole.channel("X1"), pieces.channel("X1"))


class TestNoiseStream:
    def test_moments(self):
        n = 1 << 19
        draws = NoiseStream(42, 0).draw(n)
        assert draws.size == 2 * n
        assert abs(draws.mean()) < 4.0 / math.sqrt(draws.size)
        assert abs(draws.var() - 1.0) < 10.0 / math.sqrt(draws.size)

    def test_reproducible_identity(self):
        assert np.array_equal(NoiseStream(1, 2).draw(100), NoiseStream(1, 2).draw(100))
        assert not np.array_equal(NoiseStream(1, 2).draw(100), NoiseStream(1, 3).draw(100))

    def test_chunked_draws_equal_one_shot(self):
        one = NoiseStream(9, 1).draw(116)
        stream = NoiseStream(9, 1)
        chunks = [stream.draw(k) for k in (7, 9, 100)]
        assert np.array_equal(np.concatenate(chunks), one)

    def test_refined_chunked_draws_equal_one_shot(self):
        one = NoiseStream(9, 1, refinement=2).draw(232)
        stream = NoiseStream(9, 1, refinement=2)
        chunks = [stream.draw(k) for k in (3, 50, 179)]
        assert np.array_equal(np.concatenate(chunks), one)

    def test_refinement_preserves_wiener_increments(self):
        # summed fine normals over a halved step must rebuild the coarse path
        n = 1000
        coarse = NoiseStream(7, 0).draw(n).reshape(n, 2)
        fine = NoiseStream(7, 0, refinement=2).draw(2 * n).reshape(2 * n, 2)
        rebuilt = (fine[0::2] + fine[1::2]) / math.sqrt(2.0)
        assert np.max(np.abs(rebuilt - coarse)) < 1e-15

    def test_invalid_refinement(self):
        with pytest.raises(ParameterError):
            NoiseStream(1, 0, refinement=3)

    def test_negative_draw(self):
        with pytest.raises(ParameterError):
            NoiseStream(1, 0).draw(-1)


class TestIntegrateContract:
    def test_records_initial_state_and_grid(self):
        p = damped_params()
        cfg = IntegratorConfig(dt=1e-3, t_total=1.0, t_transient=0.0, sample_stride=100)
        ts = integrate(p, QUIET, cfg)
        assert ts.n_samples == 11
        assert ts.times[0] == 0.0
        assert ts.sample_spacing == pytest.approx(0.1)
        assert ts.channel("Z1")[0] == 1.0  # thermal start, zt = 1

    def test_any_component_recordable(self):
        p = damped_params()
        cfg = IntegratorConfig(dt=1e-3, t_total=1.0, t_transient=0.0, sample_stride=10)
        ts = integrate(p, QUIET, cfg, channels=("ZZ", "XY"))
        assert set(ts.channels) == {"ZZ", "XY"}

    def test_unknown_channel(self):
        p = damped_params()
        cfg = IntegratorConfig(dt=1e-3, t_total=1.0, t_transient=0.0, sample_stride=10)
        with pytest.raises(ParameterError, match="channel"):
            integrate(p, QUIET, cfg, channels=("Q7",))

    def test_noise_requires_euler(self):
        p = damped_params()
        cfg = IntegratorConfig(dt=1e-3, t_total=1.0, t_transient=0.0, sample_stride=10, method="rk4")
        with pytest.raises(ParameterError, match="euler"):
            integrate(p, DriveParams(noise_d=1e-5), cfg)

    def test_metadata_complete(self):
        p = damped_params()
        cfg = IntegratorConfig(dt=1e-3, t_total=1.0, t_transient=0.5, sample_stride=10, seed=77)
        meta = integrate(p, QUIET, cfg).metadata
        for key in ("delta", "g", "gamma_phi", "gamma_r", "zt", "amp_pump", "omega_pump",
                    "noise_d", "dt", "t_total", "t_transient", "seed", "method", "max_purity"):
            assert key in meta
        assert meta["seed"] == 77

    def test_divergence_raises_with_step_index(self):
        # fast rotation at the edge of the guard: forward Euler inflates the
        # norm by ~(delta*dt)^2/2 per step until overflow
        p = QubitPairParams.symmetric(delta=24.0, g=0.0)
        drive = DriveParams(amp_pump=0.5, omega_pump=1.0)
        cfg = IntegratorConfig(dt=1e-3, t_total=4000.0, t_transient=0.0,
                               sample_stride=1000, method="euler")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PhysicalityWarning)
            with pytest.raises(DivergenceError, match="non-finite") as info:
                integrate(p, drive, cfg)
        assert info.value.step is not None and info.value.step > 0

    def test_noisy_run_warns_when_state_leaves_physical_region(self):
        p = QubitPairParams.symmetric(delta=1.0, g=1.0)  # no damping
        drive = DriveParams(amp_pump=1.0, omega_pump=0.414, noise_d=4e-4)
        cfg = IntegratorConfig(dt=1e-5, t_total=60.0, t_transient=0.0,
                               sample_stride=1000, method="euler", seed=2)
        with pytest.warns(PhysicalityWarning):
            integrate(p, drive, cfg)

    def test_deterministic_run_stays_physical(self):
        p = damped_params()
        drive = DriveParams(amp_pump=15.0, omega_pump=0.414, amp_weak=0.1, omega_weak=2.414)
        cfg = IntegratorConfig(dt=1e-3, t_total=2000.0, t_transient=0.0,
                               sample_stride=100, method="rk4")
        with warnings.catch_warnings():
            warnings.simplefilter("error", PhysicalityWarning)
            ts = integrate(p, drive, cfg)
        assert ts.metadata["max_purity"] <= 1.0 + 1e-6


class TestFactorization:
    """With g = 0 the pair factorizes into independent single qubits.

    Exact factorization needs either no damping or zero thermal targets:
    relaxation toward a nonzero polarization re-couples the correlator
    components at order gamma_r * zt. Both exact regimes are checked.
    """

    @staticmethod
    def single_qubit_reference(delta, gamma_phi, gamma_r, zt, z0, drive, t_eval):
        def field(t, s):
            e = drive.value(t)
            return [
                delta * s[1] - gamma_phi * s[0],
                -delta * s[0] + e * s[2] - gamma_phi * s[1],
                -e * s[1] - gamma_r * (s[2] - zt),
            ]

        sol = solve_ivp(
            field, (0.0, t_eval[-1]), [0.0, 0.0, z0],
            t_eval=t_eval, rtol=1e-11, atol=1e-12, method="DOP853",
        )
        return sol.y  # rows: x, y, z

    @staticmethod
    def polarized_pair(z1, z2):
        """Product of two z-polarized qubits as a 15-component vector."""
        def axis(letter, z):
            return 1.0 if letter == "I" else (z if letter == "Z" else 0.0)

        return np.array([axis(a, z1) * axis(b, z2) for a, b in COMPONENTS])

    def worst_deviation(self, p, drive, t_total=50.0, z0=(0.9, 0.7)):
        cfg = IntegratorConfig(dt=1e-3, t_total=t_total, t_transient=0.0,
                               sample_stride=50, method="rk4")
        # explicit polarized start keeps the comparison non-trivial even
        # when the thermal targets are zero
        ts = integrate(p, drive, cfg, self.polarized_pair(*z0),
                       channels=COMPONENTS)
        t = ts.times
        q1 = self.single_qubit_reference(
            p.delta1, p.gamma_phi1, p.gamma_r1, p.zt1, z0[0], drive, t)
        q2 = self.single_qubit_reference(
            p.delta2, p.gamma_phi2, p.gamma_r2, p.zt2, z0[1], drive, t)
        singles = {
            "XI": q1[0], "YI": q1[1], "ZI": q1[2],
            "IX": q2[0], "IY": q2[1], "IZ": q2[2],
        }
        worst = 0.0
        for name, want in singles.items():
            worst = max(worst, np.max(np.abs(ts.channel(name) - want)))
        # correlators must stay exact products of the single-qubit values
        for a, ia in (("X", 0), ("Y", 1), ("Z", 2)):
            for b, ib in (("X", 0), ("Y", 1), ("Z", 2)):
                want = q1[ia] * q2[ib]
                worst = max(worst, np.max(np.abs(ts.channel(a + b) - want)))
        return worst

    def test_damped_qubits_with_zero_thermal_target(self):
        p = QubitPairParams(
            delta1=1.0, delta2=1.35, g=0.0,
            gamma_phi1=1e-3, gamma_phi2=2e-3, gamma_r1=0.5e-3, gamma_r2=1.5e-3,
            zt1=0.0, zt2=0.0,
        )
        drive = DriveParams(amp_pump=2.0, omega_pump=0.9, amp_weak=0.3, omega_weak=2.1)
        assert self.worst_deviation(p, drive) < 1e-6

    def test_undamped_polarized_qubits(self):
        p = QubitPairParams(delta1=1.0, delta2=1.35, g=0.0, zt1=0.9, zt2=0.7)
        drive = DriveParams(amp_pump=2.0, omega_pump=0.9, amp_weak=0.3, omega_weak=2.1)
        assert self.worst_deviation(p, drive) < 1e-6

    def test_relaxation_toward_nonzero_target_recouples(self):
        # documents the boundary of the factorization property
        p = QubitPairParams(
            delta1=1.0, delta2=1.35, g=0.0,
            gamma_phi1=1e-3, gamma_phi2=2e-3, gamma_r1=0.5e-3, gamma_r2=1.5e-3,
            zt1=0.9, zt2=0.7,
        )
        drive = DriveParams(amp_pump=2.0, omega_pump=0.9, amp_weak=0.3, omega_weak=2.1)
        assert self.worst_deviation(p, drive, t_total=20.0) > 1e-5
