"""Static model definitions for a pair of coupled, driven qubits.

The system is two two-level systems with individual level splittings,
a transverse exchange coupling, and a shared time-dependent transverse
drive made of a strong pump tone plus a weak signal tone. This module
holds the parameter containers, the Hamiltonian builder, and the
closed-form transition frequencies of the undriven system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

# Single-qubit Pauli matrices and identity.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

PAULI = {"0": IDENTITY_2, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@dataclass(frozen=True)
class QubitPairParams:
    """Time-independent parameters of the coupled pair.

    Attributes:
        delta1: level splitting of qubit 1 (angular frequency units).
        delta2: level splitting of qubit 2.
        g: transverse coupling strength between the qubits.
        gamma_phi1: pure dephasing rate of qubit 1.
        gamma_phi2: pure dephasing rate of qubit 2.
        gamma_r1: energy relaxation rate of qubit 1.
        gamma_r2: energy relaxation rate of qubit 2.
        zt1: thermal equilibrium value of the qubit-1 z polarization.
        zt2: thermal equilibrium value of the qubit-2 z polarization.
    """

    delta1: float = 1.0
    delta2: float = 1.0
    g: float = 1.0
    gamma_phi1: float = 0.0
    gamma_phi2: float = 0.0
    gamma_r1: float = 0.0
    gamma_r2: float = 0.0
    zt1: float = 1.0
    zt2: float = 1.0

    def __post_init__(self):
        for name in ("gamma_phi1", "gamma_phi2", "gamma_r1", "gamma_r2"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("zt1", "zt2"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [-1, 1], got {v}")

    @classmethod
    def symmetric(
        cls,
        delta: float = 1.0,
        g: float = 1.0,
        gamma_phi: float = 0.0,
        gamma_r: float = 0.0,
        zt: float = 1.0,
    ) -> "QubitPairParams":
        """Build parameters with both qubits identical."""
        return cls(
            delta1=delta,
            delta2=delta,
            g=g,
            gamma_phi1=gamma_phi,
            gamma_phi2=gamma_phi,
            gamma_r1=gamma_r,
            gamma_r2=gamma_r,
            zt1=zt,
            zt2=zt,
        )


@dataclass(frozen=True)
class DriveParams:
    """Transverse drive applied identically to both qubits.

    The deterministic part is ``amp_pump*sin(omega_pump*t) +
    amp_weak*sin(omega_weak*t)``. On top of that, each qubit sees its own
    independent white-noise channel of strength ``noise_d``: over a step
    of length dt the noise contributes ``sqrt(2*noise_d/dt) * n`` with
    ``n`` a standard normal draw, so its low-frequency spectral density
    is ``2*noise_d`` regardless of dt.

    Attributes:
        amp_pump: amplitude of the strong pump tone.
        omega_pump: angular frequency of the pump tone.
        amp_weak: amplitude of the weak signal tone.
        omega_weak: angular frequency of the signal tone.
        noise_d: diffusion coefficient of the white-noise channel.
    """

    amp_pump: float = 0.0
    omega_pump: float = 0.0
    amp_weak: float = 0.0
    omega_weak: float = 0.0
    noise_d: float = 0.0

    def __post_init__(self):
        if self.noise_d < 0.0:
            raise ParameterError(f"noise_d must be >= 0, got {self.noise_d}")
        if self.omega_pump < 0.0 or self.omega_weak < 0.0:
            raise ParameterError("drive frequencies must be >= 0")

    @property
    def has_noise(self) -> bool:
        return self.noise_d > 0.0

    def value(self, t):
        """Deterministic drive amplitude at time(s) ``t`` (noise excluded)."""
        t = np.asarray(t, dtype=float)
        out = self.amp_pump * np.sin(self.omega_pump * t) + self.amp_weak * np.sin(
            self.omega_weak * t
        )
        return out if out.ndim else float(out)


def drive_value(drive: DriveParams, t):
    """Functional alias for :meth:`DriveParams.value`."""
    return drive.value(t)


@dataclass(frozen=True)
class TransitionFrequencies:
    """The four allowed transition frequencies of the undriven pair.

    For equal splittings delta and coupling g the eigenvalues of the
    static Hamiltonian are ``{-r, -g, +g, +r}`` with
    ``r = sqrt(delta**2 + g**2)``, giving transitions:

        upper: 2*r          (outer pair)
        lower_minus: r - g  (adjacent, low)
        lower_plus: r + g   (adjacent, high)
        inner: 2*g          (inner pair)

    The identity ``upper == lower_minus + lower_plus`` holds exactly.
    """

    upper: float
    lower_minus: float
    lower_plus: float
    inner: float
    levels: tuple[float, float, float, float] = field(repr=False, default=())

    def as_dict(self) -> dict[str, float]:
        return {
            "upper": self.upper,
            "lower_minus": self.lower_minus,
            "lower_plus": self.lower_plus,
            "inner": self.inner,
        }


def transition_frequencies(delta: float, g: float) -> TransitionFrequencies:
    """Closed-form spectrum of the undriven, equally-split pair.

    Args:
        delta: common level splitting of both qubits.
        g: transverse coupling strength.

    Returns:
        TransitionFrequencies with the four transition values and the
        sorted energy levels attached.
    """
    r = math.hypot(delta, g)
    ga = abs(g)
    levels = (-r, -ga, ga, r)
    return TransitionFrequencies(
        upper=2.0 * r,
        lower_minus=r - ga,
        lower_plus=r + ga,
        inner=2.0 * ga,
        levels=levels,
    )


def hamiltonian_matrix(params: QubitPairParams, eps1: float = 0.0, eps2: float = 0.0) -> np.ndarray:
    """4x4 Hamiltonian of the pair at fixed drive values.

    H = -(1/2) * sum_j [delta_j sz_j + eps_j sx_j] + g sx_1 sx_2

    Args:
        params: static pair parameters.
        eps1: instantaneous transverse drive on qubit 1.
        eps2: instantaneous transverse drive on qubit 2.

    Returns:
        Hermitian complex matrix in the product basis |q1> x |q2>.
    """
    h = -0.5 * (
        params.delta1 * np.kron(SIGMA_Z, IDENTITY_2)
        + params.delta2 * np.kron(IDENTITY_2, SIGMA_Z)
        + eps1 * np.kron(SIGMA_X, IDENTITY_2)
        + eps2 * np.kron(IDENTITY_2, SIGMA_X)
    )
    h += params.g * np.kron(SIGMA_X, SIGMA_X)
    return h
