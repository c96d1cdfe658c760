"""Scenario configuration: file format, validation, and named presets.

A scenario file is flat ``key = value`` text. Drive frequencies accept
either a number or a symbolic reference to one of the four transition
frequencies of the undriven pair ("omega1".."omega4"), optionally scaled,
e.g. ``omega_weak = 1.113*omega3``. Symbols resolve against the delta and
g of the same config.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .integrate import METHODS, IntegratorConfig
from .model import DriveParams, QubitPairParams, transition_frequencies
from .spectrum import WINDOWS

_OMEGA_NAMES = {"omega1": "upper", "omega2": "lower_minus", "omega3": "lower_plus", "omega4": "inner"}
_OMEGA_RE = re.compile(r"^(?:([-+0-9.eE]+)\s*\*\s*)?(omega[1-4])$")

_FLOAT_KEYS = ("delta", "g", "gamma_phi", "gamma_r", "zt", "amp_pump", "amp_weak",
               "noise_d", "dt", "t_total", "t_transient", "tol_match")
_INT_KEYS = ("sample_stride", "seed", "realizations", "k_max", "l_max")
_STR_KEYS = ("method", "window", "omega_pump", "omega_weak")
CONFIG_KEYS = ("delta", "g", "gamma_phi", "gamma_r", "zt",
               "amp_pump", "omega_pump", "amp_weak", "omega_weak", "noise_d",
               "dt", "t_total", "t_transient", "sample_stride", "method",
               "seed", "realizations", "window", "k_max", "l_max", "tol_match")


def resolve_omega(value, delta: float, g: float) -> float:
    """Turn a numeric or symbolic frequency setting into a number.

    Accepts a plain number, "omegaN" with N in 1..4, or "<scale>*omegaN".
    """
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower().replace(" ", "")
    m = _OMEGA_RE.match(text)
    if m:
        scale = float(m.group(1)) if m.group(1) else 1.0
        freqs = transition_frequencies(delta, g)
        return scale * getattr(freqs, _OMEGA_NAMES[m.group(2)])
    try:
        return float(text)
    except ValueError:
        raise ConfigError(
            f"cannot resolve frequency {value!r}; use a number, omega1..omega4, "
            "or scale*omegaN"
        ) from None


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation scenario.

    Physical fields assume identical qubits (shared delta, rates, and
    thermal polarization). realizations=None picks 1 for noiseless runs
    and 8 when noise_d > 0; tol_match=None defers to 3 grid bins at
    spectrum analysis time.
    """

    delta: float = 1.0
    g: float = 1.0
    gamma_phi: float = 0.0
    gamma_r: float = 0.0
    zt: float = 1.0
    amp_pump: float = 0.0
    omega_pump: str | float = "omega2"
    amp_weak: float = 0.0
    omega_weak: str | float = "omega3"
    noise_d: float = 0.0
    dt: float = 1e-4
    t_total: float = 1.05e5
    t_transient: float = 5000.0
    sample_stride: int = 1000
    method: str = "euler"
    seed: int = 1
    realizations: int | None = None
    window: str = "rect"
    k_max: int = 30
    l_max: int = 3
    tol_match: float | None = None
    name: str | None = None

    def __post_init__(self):
        for key in ("gamma_phi", "gamma_r", "noise_d"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0, got {getattr(self, key)}")
        if not -1.0 <= self.zt <= 1.0:
            raise ConfigError(f"zt must lie in [-1, 1], got {self.zt}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not 0 <= self.t_transient < self.t_total:
            raise ConfigError(
                f"need 0 <= t_transient < t_total, got {self.t_transient}, {self.t_total}"
            )
        if self.sample_stride < 1:
            raise ConfigError(f"sample_stride must be >= 1, got {self.sample_stride}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.window not in WINDOWS:
            raise ConfigError(f"window must be one of {WINDOWS}, got {self.window!r}")
        if self.noise_d > 0 and self.method != "euler":
            raise ConfigError("noise_d > 0 requires method = euler")
        if self.realizations is not None and self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")
        if self.k_max < 1 or self.l_max < 0:
            raise ConfigError("need k_max >= 1 and l_max >= 0")
        if self.tol_match is not None and self.tol_match <= 0:
            raise ConfigError(f"tol_match must be > 0, got {self.tol_match}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be a non-negative 64-bit integer, got {self.seed}")
        # resolve eagerly so bad symbols fail at load time
        for key in ("omega_pump", "omega_weak"):
            resolve_omega(getattr(self, key), self.delta, self.g)

    @property
    def omega_pump_value(self) -> float:
        return resolve_omega(self.omega_pump, self.delta, self.g)

    @property
    def omega_weak_value(self) -> float:
        return resolve_omega(self.omega_weak, self.delta, self.g)

    @property
    def effective_realizations(self) -> int:
        if self.realizations is not None:
            return int(self.realizations)
        return 8 if self.noise_d > 0 else 1

    def pair_params(self) -> QubitPairParams:
        return QubitPairParams.symmetric(
            delta=self.delta, g=self.g,
            gamma_phi=self.gamma_phi, gamma_r=self.gamma_r, zt=self.zt,
        )

    def drive_params(self) -> DriveParams:
        return DriveParams(
            amp_pump=self.amp_pump, omega_pump=self.omega_pump_value,
            amp_weak=self.amp_weak, omega_weak=self.omega_weak_value,
            noise_d=self.noise_d,
        )

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(
            dt=self.dt, t_total=self.t_total, t_transient=self.t_transient,
            sample_stride=self.sample_stride, method=self.method,
            seed=self.seed, n_realizations=self.effective_realizations,
        )

    def as_dict(self) -> dict:
        """The 21 config keys with current values (symbols unresolved)."""
        out = {}
        for key in CONFIG_KEYS:
            value = getattr(self, key)
            out[key] = value
        return out


def config_text(cfg: ScenarioConfig) -> str:
    """Render a config as reloadable key = value text."""
    lines = []
    if cfg.name:
        lines.append(f"# scenario: {cfg.name}")
    for key, value in cfg.as_dict().items():
        if value is None:
            continue
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario file.

    Raises:
        ConfigError: unreadable file, malformed line, unknown or duplicate
            key, or a value violating its constraint; messages carry the
            path and line number.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{path}:{lineno}: empty value for {key!r}")
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _INT_KEYS:
                values[key] = int(value)
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: cannot parse {key} = {value!r}"
            ) from None

    try:
        return ScenarioConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _deterministic_base(**overrides) -> ScenarioConfig:
    base = dict(
        delta=1.0, g=1.0, gamma_phi=1e-3, gamma_r=1e-3, zt=1.0,
        omega_pump="omega2", omega_weak="omega3",
        method="rk4", dt=1e-3, sample_stride=100,
        t_transient=5000.0, t_total=31214.3,
        seed=101, window="rect", k_max=80, l_max=3,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def _noise_base(**overrides) -> ScenarioConfig:
    base = dict(
        delta=1.0, g=1.0, gamma_phi=1e-3, gamma_r=1e-3, zt=1.0,
        amp_pump=15.0, omega_pump="omega2", amp_weak=0.1, omega_weak="omega3",
        method="euler", dt=1e-5, sample_stride=10_000,
        t_transient=3000.0, t_total=6276.7,
        seed=101, realizations=8, window="rect", k_max=80, l_max=3,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


# Named scenarios. Deterministic ones integrate with RK4 at dt=1e-3 (the
# plain Euler scheme needs dt <= 1e-5 for these drives before its
# phase-volume growth stops distorting peak heights; see README). The noisy
# ones are Euler-Maruyama by necessity, at dt=1e-5.
PRESETS = {
    # strong pump alone: even-harmonic comb in Z, odd in X
    "pump-only": _deterministic_base(name="pump-only", amp_pump=15.0, amp_weak=0.0),
    # weak tone alone: nearly invisible response
    "signal-only": _deterministic_base(name="signal-only", amp_pump=0.0, amp_weak=0.1),
    # pump + weak tone: combination peaks, the amplifier working point
    "mixed": _deterministic_base(name="mixed", amp_pump=15.0, amp_weak=0.1),
    # mixed drive plus white noise, sqrt(D)/eps = 0.066
    "noise-low": _noise_base(name="noise-low", noise_d=4.356e-5),
    # mixed drive plus white noise, sqrt(D)/eps = 0.2
    "noise-high": _noise_base(name="noise-high", noise_d=4e-4),
    # weak tone detuned off the third transition
    "off-resonance": _deterministic_base(
        name="off-resonance", amp_pump=15.0, amp_weak=0.1, omega_weak="1.113*omega3",
    ),
    # weakly coupled pair, larger signal
    "weak-coupling": _deterministic_base(
        name="weak-coupling", g=0.1, amp_pump=12.0, amp_weak=0.5,
    ),
}


def get_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None


def with_overrides(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Frozen-dataclass replace with key validation."""
    valid = {f.name for f in fields(ScenarioConfig)}
    bad = set(overrides) - valid
    if bad:
        raise ConfigError(f"unknown config fields: {sorted(bad)}")
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


__all__ = [
    "CONFIG_KEYS", "PRESETS", "ScenarioConfig", "config_text",
    "get_preset", "load_config", "resolve_omega", "with_overrides",
]
