"""Pauli-product (Bloch tensor) state of the qubit pair and its equations of motion.

The two-qubit density matrix is expanded over products of Pauli operators,

    rho = (1/4) * sum_ab  P_ab  (sigma_a x sigma_b),   a, b in {I, x, y, z}

The identity-identity coefficient is fixed to 1 by normalization, so the
state is the remaining fifteen real coefficients. This module defines the
component ordering used everywhere else, the exact right-hand side of the
fifteen coupled equations of motion (coherent part plus phenomenological
dephasing and relaxation), and diagnostics that reconstruct the density
matrix to check physicality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import PAULI, QubitPairParams

# Component ordering. Each label names a two-qubit Pauli string; the first
# letter is the operator on the first slot of the tensor product, "I" is the
# identity. This ordering is load-bearing: the integrator kernels, the CSV
# writer, and every test index into it.
COMPONENTS = (
    "IX", "IY", "IZ",
    "XI", "YI", "ZI",
    "XX", "XY", "YX", "XZ", "ZX",
    "YY", "YZ", "ZY", "ZZ",
)

COMPONENT_INDEX = {name: i for i, name in enumerate(COMPONENTS)}

# Recorded observable channels. The readout convention treats the second
# operator slot as the measured qubit, so the channel called Z1 is the IZ
# component; in every supported scenario the two qubits have identical
# parameters and drives, so the choice of slot does not affect statistics.
CHANNEL_INDEX = {"Z1": COMPONENT_INDEX["IZ"], "X1": COMPONENT_INDEX["IX"]}

# Purity may exceed 1 by at most this much before a state is deemed invalid.
TOL_PURITY = 1e-6

_PAULI_STRINGS = tuple(
    np.kron(PAULI[name[0].lower().replace("i", "0")], PAULI[name[1].lower().replace("i", "0")])
    for name in COMPONENTS
)


def _as_values(state) -> np.ndarray:
    if isinstance(state, BlochTensor):
        return state.values
    arr = np.asarray(state, dtype=float)
    if arr.shape != (len(COMPONENTS),):
        raise ParameterError(f"state must have {len(COMPONENTS)} components, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class BlochTensor:
    """Immutable fifteen-component state vector.

    Attributes:
        values: float array of shape (15,) in the COMPONENTS ordering.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (len(COMPONENTS),):
            raise ParameterError(
                f"expected {len(COMPONENTS)} components, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ParameterError("state components must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __getitem__(self, key):
        if isinstance(key, str):
            return float(self.values[COMPONENT_INDEX[key.upper()]])
        return self.values[key]

    @classmethod
    def zero(cls) -> "BlochTensor":
        """Maximally mixed state (all correlators vanish)."""
        return cls(np.zeros(len(COMPONENTS)))

    @classmethod
    def from_components(cls, **components: float) -> "BlochTensor":
        """Build a state from named components; unnamed ones are zero."""
        arr = np.zeros(len(COMPONENTS))
        for name, value in components.items():
            key = name.upper()
            if key not in COMPONENT_INDEX:
                raise ParameterError(f"unknown component {name!r}")
            arr[COMPONENT_INDEX[key]] = value
        return cls(arr)

    @property
    def purity(self) -> float:
        return purity(self)


def thermal_product_state(params: QubitPairParams) -> BlochTensor:
    """Product of single-qubit thermal states.

    The z polarization of the first-slot qubit is ``zt1`` and sits in the
    ZI component; the second-slot value ``zt2`` sits in IZ; their product
    fills ZZ. With zero drive and zero coupling this state is an exact
    fixed point of :func:`rhs`.
    """
    arr = np.zeros(len(COMPONENTS))
    arr[COMPONENT_INDEX["IZ"]] = params.zt2
    arr[COMPONENT_INDEX["ZI"]] = params.zt1
    arr[COMPONENT_INDEX["ZZ"]] = params.zt1 * params.zt2
    return BlochTensor(arr)


def rhs(state, eps1: float, eps2: float, params: QubitPairParams) -> np.ndarray:
    """Time derivative of the fifteen components.

    Coherent evolution under the pair Hamiltonian at instantaneous drive
    values (eps1, eps2), plus linear dephasing at rates gamma_phi and
    relaxation at rates gamma_r toward the thermal polarizations.

    Args:
        state: BlochTensor or length-15 array in COMPONENTS order.
        eps1: transverse drive on the first-slot qubit.
        eps2: transverse drive on the second-slot qubit.
        params: static pair parameters.

    Returns:
        Length-15 float array of derivatives.
    """
    s = _as_values(state)
    (ix, iy, iz, xi, yi, zi, xx, xy, yx, xz, zx, yy, yz, zy, zz) = s
    d1, d2, g = params.delta1, params.delta2, params.g
    gp1, gp2 = params.gamma_phi1, params.gamma_phi2
    gr1, gr2 = params.gamma_r1, params.gamma_r2
    zt1, zt2 = params.zt1, params.zt2
    tg = 2.0 * g

    out = np.empty(len(COMPONENTS))
    out[0] = d2 * iy - gp2 * ix
    out[1] = -d2 * ix + eps2 * iz - tg * xz - gp2 * iy
    out[2] = -eps2 * iy + tg * xy - gr2 * (iz - zt2)
    out[3] = d1 * yi - gp1 * xi
    out[4] = -d1 * xi + eps1 * zi - tg * zx - gp1 * yi
    out[5] = -eps1 * yi + tg * yx - gr1 * (zi - zt1)
    out[6] = d2 * xy + d1 * yx - (gp1 + gp2) * xx
    out[7] = -tg * iz - d2 * xx + d1 * yy + eps2 * xz - (gp1 + gp2) * xy
    out[8] = -tg * zi - d1 * xx + d2 * yy + eps1 * zx - (gp1 + gp2) * yx
    out[9] = tg * iy - eps2 * xy + d1 * yz - (gp1 + gr2) * xz
    out[10] = tg * yi - eps1 * yx + d2 * zy - (gr1 + gp2) * zx
    out[11] = -d1 * xy - d2 * yx + eps2 * yz + eps1 * zy - (gp1 + gp2) * yy
    out[12] = -d1 * xz - eps2 * yy + eps1 * zz - (gp1 + gr2) * yz
    out[13] = -d2 * zx - eps1 * yy + eps2 * zz - (gr1 + gp2) * zy
    out[14] = -eps1 * yz - eps2 * zy - (gr1 + gr2) * (zz - zt1 * zt2)
    return out


def to_density_matrix(state) -> np.ndarray:
    """Reconstruct the 4x4 density matrix from the component vector."""
    s = _as_values(state)
    rho = np.eye(4, dtype=complex)
    for value, pauli_string in zip(s, _PAULI_STRINGS):
        rho += value * pauli_string
    return rho / 4.0


def from_density_matrix(rho: np.ndarray) -> BlochTensor:
    """Project a density matrix onto the Pauli-product components."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ParameterError(f"density matrix must be 4x4, got {rho.shape}")
    arr = np.array([np.trace(rho @ p).real for p in _PAULI_STRINGS])
    return BlochTensor(arr)


def purity(state) -> float:
    """Tr(rho^2) computed directly from the components: (1 + sum P^2)/4."""
    s = _as_values(state)
    return (1.0 + float(np.dot(s, s))) / 4.0


@dataclass(frozen=True)
class PhysicalityReport:
    """Diagnostic snapshot of how physical a state is.

    The damping model is phenomenological and not guaranteed to keep the
    density matrix positive, so integration monitors rather than enforces
    these bounds.
    """

    purity: float
    min_eigenvalue: float
    passed: bool
    tol: float


def physicality_check(state, tol: float = 1e-3) -> PhysicalityReport:
    """Check that the reconstructed density matrix is close to physical.

    Args:
        state: BlochTensor or length-15 array.
        tol: tolerance; must be positive.

    Returns:
        PhysicalityReport; passes when the smallest eigenvalue of rho is
        at least -tol and the purity is at most 1 + tol.
    """
    if tol <= 0.0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    p = purity(state)
    eigs = np.linalg.eigvalsh(to_density_matrix(state))
    min_eig = float(eigs[0])
    return PhysicalityReport(
        purity=p,
        min_eigenvalue=min_eig,
        passed=(min_eig >= -tol) and (p <= 1.0 + tol),
        tol=tol,
    )
