"""Trajectory integration: forward-Euler / Euler-Maruyama and RK4 drivers.

The stochastic scheme is Euler-Maruyama in the Ito convention: over a step
dt each qubit's drive gains sqrt(2*D/dt) * n with n a fresh standard normal,
which is the naive Euler discretization of white noise of intensity 2*D.
RK4 is deterministic only and exists for convergence cross-checks of the
Euler results and for fast converged runs of noiseless scenarios.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bloch import CHANNEL_INDEX, COMPONENT_INDEX, COMPONENTS, BlochTensor, physicality_check, rhs, thermal_product_state
from .errors import DivergenceError, ParameterError
from .model import DriveParams, QubitPairParams

METHODS = ("euler", "rk4")

# Max kernel steps per call for stochastic runs; bounds the pregenerated
# noise block (2 normals per step). Must stay a multiple of _kernels.RESYNC
# so chunk boundaries never disturb the drive phasors.
NOISE_CHUNK_STEPS = 1 << 21

# Left-hand side of the step-size guard may not exceed this.
STABILITY_LIMIT = 0.05


class PhysicalityWarning(UserWarning):
    """The integrated state drifted outside the physical region."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Numerical settings of a single run.

    Attributes:
        dt: integration step.
        t_total: total simulated time, starting at t=0.
        t_transient: initial span later excluded from spectral analysis
            (recording still starts at t=0).
        sample_stride: record every stride-th step.
        method: "euler" (required when noise is present) or "rk4".
        seed: base RNG seed, non-negative 64-bit integer.
        n_realizations: ensemble size for stochastic runs.
    """

    dt: float = 1e-4
    t_total: float = 1.05e5
    t_transient: float = 5000.0
    sample_stride: int = 1000
    method: str = "euler"
    seed: int = 1
    n_realizations: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if not 0.0 <= self.t_transient < self.t_total:
            raise ParameterError(
                f"need 0 <= t_transient < t_total, got {self.t_transient}, {self.t_total}"
            )
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ParameterError(f"sample_stride must be an integer >= 1, got {self.sample_stride}")
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must be a non-negative 64-bit integer, got {self.seed}")
        if int(self.n_realizations) < 1:
            raise ParameterError(f"n_realizations must be >= 1, got {self.n_realizations}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_total / self.dt))

    @property
    def sample_spacing(self) -> float:
        return self.dt * self.sample_stride


def stability_bound(params: QubitPairParams, drive: DriveParams, dt: float) -> float:
    """Value of the step-size guard expression dt * max(drive scale, spectral scale).

    The drive scale is A + eps + 4*sqrt(2D/dt) (deterministic amplitudes plus
    a four-sigma noise excursion); the spectral scale is twice the largest
    undriven transition frequency scale sqrt(delta^2 + g^2).
    """
    noise_scale = 4.0 * math.sqrt(2.0 * drive.noise_d / dt) if drive.noise_d > 0 else 0.0
    drive_scale = abs(drive.amp_pump) + abs(drive.amp_weak) + noise_scale
    delta = max(abs(params.delta1), abs(params.delta2))
    spectral_scale = 2.0 * math.hypot(delta, params.g)
    return dt * max(drive_scale, spectral_scale)


def check_stability(params: QubitPairParams, drive: DriveParams, dt: float) -> None:
    value = stability_bound(params, drive, dt)
    if value > STABILITY_LIMIT:
        raise ParameterError(
            f"step size dt={dt} violates the stability guard: "
            f"dt*max(drive scale, spectral scale) = {value:.4g} > {STABILITY_LIMIT}; "
            "reduce dt or the drive/noise amplitudes"
        )


class NoiseStream:
    """Deterministic stream of per-step standard-normal pairs.

    Each integration step consumes two independent normals, one per qubit.
    A stream is identified by (seed, realization); the same identity always
    reproduces the same sequence.

    refinement=2 produces the step-halved version of the refinement=1
    stream: each coarse step's normal n is split into the fine pair
    ((n+u)/sqrt2, (n-u)/sqrt2) with u drawn from an auxiliary generator,
    so the fine path's pairwise-summed Wiener increments reproduce the
    coarse path's exactly. This makes dt-halving comparisons share the
    same underlying noise realization.
    """

    def __init__(self, seed: int, realization: int = 0, refinement: int = 1):
        if refinement not in (1, 2):
            raise ParameterError(f"refinement must be 1 or 2, got {refinement}")
        self.seed = int(seed)
        self.realization = int(realization)
        self.refinement = refinement
        self._gen = np.random.default_rng([self.seed, self.realization, 0])
        self._aux = np.random.default_rng([self.seed, self.realization, 1])
        self._pending = np.empty(0)

    def draw(self, n_steps: int) -> np.ndarray:
        """Next n_steps steps' normals, interleaved (qubit1, qubit2)."""
        if n_steps < 0:
            raise ParameterError("n_steps must be >= 0")
        want = 2 * n_steps
        if self.refinement == 1:
            return self._gen.standard_normal(want)
        parts = []
        have = self._pending.size
        if have:
            parts.append(self._pending[:min(have, want)])
            self._pending = self._pending[min(have, want):]
        need = want - sum(p.size for p in parts)
        if need > 0:
            # one coarse step yields two fine steps = four values
            n_coarse = -(-need // 4)
            coarse = self._gen.standard_normal((n_coarse, 2))
            aux = self._aux.standard_normal((n_coarse, 2))
            fine = np.empty((2 * n_coarse, 2))
            inv = 1.0 / math.sqrt(2.0)
            fine[0::2] = (coarse + aux) * inv
            fine[1::2] = (coarse - aux) * inv
            flat = fine.reshape(-1)
            parts.append(flat[:need])
            self._pending = flat[need:]
        if not parts:
            return np.empty(0)
        return np.concatenate(parts) if len(parts) != 1 else parts[0]


@dataclass(frozen=True)
class TimeSeries:
    """Recorded trajectory samples on a uniform time grid.

    Attributes:
        times: sample times, spacing dt * sample_stride, starting at 0.
        channels: channel name -> sample array, all of equal length.
        metadata: full parameter set, seed, and realization index.
    """

    times: np.ndarray
    channels: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.times.size
        for name, values in self.channels.items():
            if values.size != n:
                raise ParameterError(f"channel {name!r} length {values.size} != {n} time samples")

    @property
    def n_samples(self) -> int:
        return int(self.times.size)

    @property
    def sample_spacing(self) -> float:
        if self.times.size < 2:
            return 0.0
        return float(self.times[1] - self.times[0])

    def channel(self, name: str) -> np.ndarray:
        if name not in self.channels:
            raise ParameterError(f"no channel {name!r}; have {sorted(self.channels)}")
        return self.channels[name]


def _channel_component(name: str) -> int:
    key = name.upper()
    if key in CHANNEL_INDEX:
        return CHANNEL_INDEX[key]
    if key in COMPONENT_INDEX:
        return COMPONENT_INDEX[key]
    raise ParameterError(
        f"unknown channel {name!r}; use Z1, X1, or a component name from {COMPONENTS}"
    )


def step(state, t: float, dt: float, params: QubitPairParams, drive: DriveParams,
         noise_stream: NoiseStream | None = None, method: str = "euler"):
    """Single integration step, reference implementation.

    Euler: x + dt * rhs(x, eps(t)), with the Euler-Maruyama noise increment
    sqrt(2*D/dt)*n added to each qubit's drive when the drive has noise.
    RK4: classical four-stage step on the deterministic field (noise must
    be absent).

    Returns the advanced state, same type as the input (BlochTensor in,
    BlochTensor out).
    """
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}, got {method!r}")
    wrap = isinstance(state, BlochTensor)
    s = state.values if wrap else np.asarray(state, dtype=float)
    if method == "rk4":
        if drive.has_noise or noise_stream is not None:
            raise ParameterError("rk4 stepping is deterministic; noise requires method='euler'")
        e_a = drive.value(t)
        e_b = drive.value(t + 0.5 * dt)
        e_c = drive.value(t + dt)
        k1 = rhs(s, e_a, e_a, params)
        k2 = rhs(s + 0.5 * dt * k1, e_b, e_b, params)
        k3 = rhs(s + 0.5 * dt * k2, e_b, e_b, params)
        k4 = rhs(s + dt * k3, e_c, e_c, params)
        out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        det = drive.value(t)
        e1 = e2 = det
        if drive.has_noise:
            if noise_stream is None:
                raise ParameterError("noisy Euler step needs a noise_stream")
            n = noise_stream.draw(1)
            amp = math.sqrt(2.0 * drive.noise_d / dt)
            e1 = det + amp * n[0]
            e2 = det + amp * n[1]
        out = s + dt * rhs(s, e1, e2, params)
    return BlochTensor(out) if wrap else out


def integrate(params: QubitPairParams, drive: DriveParams, config: IntegratorConfig,
              initial: BlochTensor | None = None, *,
              channels: tuple[str, ...] = ("Z1", "X1"),
              noise_stream: NoiseStream | None = None,
              realization: int = 0,
              noise_refinement: int = 1,
              physicality_cadence: int = 10_000,
              physicality_tol: float = 1e-3) -> TimeSeries:
    """Integrate a trajectory and record the requested channels.

    Recording happens every sample_stride steps, t=0 included. Physicality
    is monitored, not enforced: the squared component norm is tracked every
    physicality_cadence steps inside the compiled loop and the reconstructed
    density matrix is spot-checked at chunk boundaries; violations emit
    PhysicalityWarning. A non-finite state raises DivergenceError with the
    offending step index.

    Args:
        params: static pair parameters.
        drive: two-tone drive, possibly with noise.
        config: numerical settings; method "euler" is required with noise.
        initial: start state, thermal product by default.
        channels: names to record ("Z1", "X1", or any component label).
        noise_stream: explicit stream; by default one derived from
            (config.seed, realization, noise_refinement).
        realization: index used for stream derivation and metadata.
        noise_refinement: 2 selects the step-halved version of the same
            noise path (for dt-halving checks); the dt in config must
            already be halved by the caller.
    """
    if drive.has_noise and config.method != "euler":
        raise ParameterError("noise_d > 0 requires method='euler' (Euler-Maruyama)")
    check_stability(params, drive, config.dt)
    if not channels:
        raise ParameterError("need at least one channel to record")
    chan = np.array([_channel_component(c) for c in channels], dtype=np.int64)

    state = thermal_product_state(params) if initial is None else initial
    s = np.array(state.values if isinstance(state, BlochTensor) else state, dtype=float)

    n_steps = config.n_steps
    stride = int(config.sample_stride)
    n_samples = n_steps // stride + 1
    rec = np.empty((len(channels), n_samples))
    rec[:, 0] = s[chan]
    k = 1
    diag = np.array([float(np.dot(s, s)), -1.0])
    cadence = int(physicality_cadence)

    use_noise = drive.has_noise
    if use_noise and noise_stream is None:
        noise_stream = NoiseStream(config.seed, realization, noise_refinement)
    sq2d_dt = math.sqrt(2.0 * drive.noise_d / config.dt) if use_noise else 0.0
    empty_noise = np.empty(0)

    args = (
        config.dt,
        params.delta1, params.delta2, params.g,
        params.gamma_phi1, params.gamma_phi2, params.gamma_r1, params.gamma_r2,
        params.zt1, params.zt2,
        drive.amp_pump, drive.omega_pump, drive.amp_weak, drive.omega_weak,
    )

    done = 0
    worst_report = None
    chunk_cap = NOISE_CHUNK_STEPS if use_noise else n_steps
    while done < n_steps:
        todo = min(chunk_cap, n_steps - done)
        if use_noise:
            block = noise_stream.draw(todo)
            k = _kernels.euler_kernel(
                s, todo, done, *args, sq2d_dt, block,
                stride, rec, chan, k, cadence, diag,
            )
        elif config.method == "euler":
            k = _kernels.euler_kernel(
                s, todo, done, *args, 0.0, empty_noise,
                stride, rec, chan, k, cadence, diag,
            )
        else:
            k = _kernels.rk4_kernel(
                s, todo, done, *args,
                stride, rec, chan, k, cadence, diag,
            )
        if diag[1] >= 0.0:
            bad = int(diag[1])
            raise DivergenceError(
                f"state became non-finite at step {bad} (t ~ {bad * config.dt:.6g})",
                step=bad,
            )
        done += todo
        report = physicality_check(s, physicality_tol)
        if not report.passed and (
            worst_report is None or report.min_eigenvalue < worst_report[1].min_eigenvalue
        ):
            worst_report = (done * config.dt, report)

    if worst_report is not None:
        t_bad, report = worst_report
        warnings.warn(
            f"state left the physical region (worst spot check at t ~ {t_bad:.6g}: "
            f"purity {report.purity:.6g}, min eigenvalue {report.min_eigenvalue:.3g}); "
            "expected for single noisy realizations, ensemble averages stay physical",
            PhysicalityWarning,
            stacklevel=2,
        )

    max_purity = (1.0 + diag[0]) / 4.0
    if max_purity > 1.0 + physicality_tol:
        warnings.warn(
            f"purity reached {max_purity:.6g} > 1 + {physicality_tol} during integration",
            PhysicalityWarning,
            stacklevel=2,
        )

    times = np.arange(n_samples) * config.sample_spacing
    metadata = {
        "delta": params.delta1 if params.delta1 == params.delta2 else (params.delta1, params.delta2),
        "g": params.g,
        "gamma_phi": params.gamma_phi1 if params.gamma_phi1 == params.gamma_phi2 else (params.gamma_phi1, params.gamma_phi2),
        "gamma_r": params.gamma_r1 if params.gamma_r1 == params.gamma_r2 else (params.gamma_r1, params.gamma_r2),
        "zt": params.zt1 if params.zt1 == params.zt2 else (params.zt1, params.zt2),
        "amp_pump": drive.amp_pump,
        "omega_pump": drive.omega_pump,
        "amp_weak": drive.amp_weak,
        "omega_weak": drive.omega_weak,
        "noise_d": drive.noise_d,
        "dt": config.dt,
        "t_total": config.t_total,
        "t_transient": config.t_transient,
        "sample_stride": config.sample_stride,
        "method": config.method,
        "seed": config.seed,
        "realizations": config.n_realizations,
        "realization": realization,
        "channels": tuple(channels),
        "max_purity": max_purity,
    }
    out_channels = {name: rec[i] for i, name in enumerate(channels)}
    return TimeSeries(times=times, channels=out_channels, metadata=metadata)


def run_ensemble(params: QubitPairParams, drive: DriveParams, config: IntegratorConfig,
                 initial: BlochTensor | None = None, *,
                 channels: tuple[str, ...] = ("Z1", "X1"),
                 noise_refinement: int = 1) -> list[TimeSeries]:
    """Integrate n_realizations independent trajectories.

    Realization r draws its noise from the stream identified by
    (config.seed, r), so ensembles are reproducible and realizations
    mutually independent regardless of execution order. Without noise all
    members are identical. Realizations run on a thread pool sized to the
    host (the compiled kernels release the GIL).
    """

    def one(r: int) -> TimeSeries:
        stream = None
        if drive.has_noise:
            stream = NoiseStream(config.seed, r, noise_refinement)
        return integrate(
            params, drive, config, initial,
            channels=channels, noise_stream=stream, realization=r,
            noise_refinement=noise_refinement,
        )

    n = int(config.n_realizations)
    if n == 1:
        return [one(0)]
    with ThreadPoolExecutor(max_workers=min(n, os.cpu_count() or 1)) as pool:
        return list(pool.map(one, range(n)))
