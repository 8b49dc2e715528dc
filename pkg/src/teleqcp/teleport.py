"""Teleportation protocol, simulated and in closed form.

The protocol is implemented twice on purpose: once as an explicit
density-matrix simulation (projectors, partial traces, Pauli
corrections) and once through closed-form fidelity expressions that only
involve the resource's correlators.  The two routes must agree to
machine precision, which is the package's main self-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .correlators import CorrelatorSet, TwoQubitState
from .errors import ZeroProbabilityOutcome


class BellOutcome(Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS = "psi+"
    PHI_MINUS = "phi-"
    PHI_PLUS = "phi+"


class UnitarySetId(Enum):
    """Which Bell state the correction set is tailored to."""

    S_PHI_PLUS = "phi+"
    S_PHI_MINUS = "phi-"
    S_PSI_PLUS = "psi+"
    S_PSI_MINUS = "psi-"


_SQ2 = 1.0 / math.sqrt(2.0)

BELL_VECTORS = {
    BellOutcome.PSI_MINUS: np.array([0.0, _SQ2, -_SQ2, 0.0]),
    BellOutcome.PSI_PLUS: np.array([0.0, _SQ2, _SQ2, 0.0]),
    BellOutcome.PHI_MINUS: np.array([_SQ2, 0.0, 0.0, -_SQ2]),
    BellOutcome.PHI_PLUS: np.array([_SQ2, 0.0, 0.0, _SQ2]),
}

_ID = np.eye(2)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_SZX = _SZ @ _SX

#: Outcome-indexed Pauli corrections, one row per correction set.
CORRECTIONS = {
    UnitarySetId.S_PHI_PLUS: {
        BellOutcome.PHI_PLUS: _ID,
        BellOutcome.PHI_MINUS: _SZ,
        BellOutcome.PSI_PLUS: _SX,
        BellOutcome.PSI_MINUS: _SZX,
    },
    UnitarySetId.S_PHI_MINUS: {
        BellOutcome.PHI_PLUS: _SZ,
        BellOutcome.PHI_MINUS: _ID,
        BellOutcome.PSI_PLUS: _SZX,
        BellOutcome.PSI_MINUS: _SX,
    },
    UnitarySetId.S_PSI_PLUS: {
        BellOutcome.PHI_PLUS: _SX,
        BellOutcome.PHI_MINUS: _SZX,
        BellOutcome.PSI_PLUS: _ID,
        BellOutcome.PSI_MINUS: _SZ,
    },
    UnitarySetId.S_PSI_MINUS: {
        BellOutcome.PHI_PLUS: _SZX,
        BellOutcome.PHI_MINUS: _SX,
        BellOutcome.PSI_PLUS: _SZ,
        BellOutcome.PSI_MINUS: _ID,
    },
}

#: Signs (sx, sy, sz) applied to (xx, yy, zz) in the closed-form kernel.
CLOSED_FORM_SIGNS = {
    UnitarySetId.S_PSI_MINUS: (-1.0, -1.0, 1.0),
    UnitarySetId.S_PSI_PLUS: (1.0, 1.0, 1.0),
    UnitarySetId.S_PHI_MINUS: (-1.0, 1.0, -1.0),
    UnitarySetId.S_PHI_PLUS: (1.0, -1.0, -1.0),
}

#: Fixed order used whenever a deterministic scan over sets is needed.
SET_ORDER = (
    UnitarySetId.S_PHI_PLUS,
    UnitarySetId.S_PHI_MINUS,
    UnitarySetId.S_PSI_PLUS,
    UnitarySetId.S_PSI_MINUS,
)


@dataclass(frozen=True)
class PureQubit:
    """Input qubit r|0> + sqrt(1-r^2) e^{i chi} |1>."""

    r: float
    chi: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")

    def ket(self) -> np.ndarray:
        return np.array([self.r, math.sqrt(1.0 - self.r**2) * np.exp(1j * self.chi)])

    @property
    def cos_theta(self) -> float:
        return 2.0 * self.r**2 - 1.0


@dataclass(frozen=True)
class FidelityReport:
    """A maximized fidelity plus which branch achieved the maximum."""

    value: float
    branch: str
    argmax_set: UnitarySetId | None = None
    argmax_state: str | None = None


# ---------------------------------------------------------------------------
# Explicit protocol simulation
# ---------------------------------------------------------------------------


def _conditional_blocks(kets: np.ndarray, rho23: np.ndarray, j: BellOutcome) -> np.ndarray:
    """Unnormalized post-measurement states Tr_12[P_j rho P_j] for a batch of inputs.

    ``kets`` has shape (N, 2); the result has shape (N, 2, 2).
    """
    rho1 = np.einsum("ni,nj->nij", kets, kets.conj())
    bell = BELL_VECTORS[j].reshape(2, 2)
    r23 = rho23.reshape(2, 2, 2, 2)  # (qubit2 row, qubit3 row, qubit2 col, qubit3 col)
    return np.einsum("ab,nad,bcef,de->ncf", bell.conj(), rho1, r23, bell)


def outcome_probability(psi: PureQubit, rho23: TwoQubitState, j: BellOutcome) -> float:
    """Probability that Alice's Bell measurement yields outcome ``j``."""
    block = _conditional_blocks(psi.ket()[None, :], rho23.matrix, j)[0]
    return float(np.trace(block).real)


def bob_state(
    psi: PureQubit, rho23: TwoQubitState, j: BellOutcome, k: UnitarySetId
) -> np.ndarray:
    """Bob's qubit after outcome ``j`` and the set-``k`` correction."""
    block = _conditional_blocks(psi.ket()[None, :], rho23.matrix, j)[0]
    q = np.trace(block).real
    if q <= 1e-14:
        raise ZeroProbabilityOutcome(f"outcome {j.value} has probability {q}")
    u = CORRECTIONS[k][j]
    return u @ block @ u.conj().T / q


def run_fidelity(
    psi: PureQubit, rho23: TwoQubitState, j: BellOutcome, k: UnitarySetId
) -> float:
    """Fidelity of one protocol run conditioned on outcome ``j``."""
    ket = psi.ket()
    return float((ket.conj() @ bob_state(psi, rho23, j, k) @ ket).real)


def _mean_fidelity_sim_batch(
    kets: np.ndarray, rho23: np.ndarray, k: UnitarySetId
) -> np.ndarray:
    """Outcome-probability-weighted fidelity for a batch of input kets."""
    total = np.zeros(kets.shape[0])
    for j in BellOutcome:
        u = CORRECTIONS[k][j]
        blocks = _conditional_blocks(kets, rho23, j)
        # Q_j * F_j: zero-probability outcomes contribute zero automatically.
        corrected = np.einsum("ij,njk,lk->nil", u, blocks, u.conj())
        total += np.einsum("ni,nij,nj->n", kets.conj(), corrected, kets).real
    return total


def mean_fidelity_sim(psi: PureQubit, rho23: TwoQubitState, k: UnitarySetId) -> float:
    """Mean (efficiency) fidelity by explicit simulation of all four outcomes."""
    return float(_mean_fidelity_sim_batch(psi.ket()[None, :], rho23.matrix, k)[0])


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _closed_form_kernel(u: float, chi: float, xx: float, yy: float, zz: float) -> float:
    """Mean fidelity for signed correlators; ``u = r^2``."""
    uu = 2.0 * u * (1.0 - u)
    return (
        1.0
        + uu * (xx + yy + 2.0 * zz)
        - zz
        + uu * (xx - yy) * math.cos(2.0 * chi)
    ) / 2.0


def mean_fidelity_closed(psi: PureQubit, c: CorrelatorSet, k: UnitarySetId) -> float:
    """Closed-form mean fidelity for an X-form resource with correlators ``c``."""
    sx, sy, sz = CLOSED_FORM_SIGNS[k]
    return _closed_form_kernel(psi.r**2, psi.chi, sx * c.xx, sy * c.yy, sz * c.zz)


def per_set_max_fidelity(c: CorrelatorSet, k: UnitarySetId) -> FidelityReport:
    """Mean fidelity maximized over input states for one correction set.

    The extremal inputs are |0>, |1>, and the equatorial state with its
    analytically optimal phase; ties are broken Zero < One < Equator.
    """
    sx, sy, sz = CLOSED_FORM_SIGNS[k]
    xx, yy, zz = sx * c.xx, sy * c.yy, sz * c.zz
    pole = (1.0 - zz) / 2.0
    equator = (1.0 + max(xx, yy)) / 2.0
    candidates = [
        ("Zero", pole, "zz"),
        ("One", pole, "zz"),
        ("Equator", equator, "xx" if xx >= yy else "yy"),
    ]
    best = candidates[0]
    for cand in candidates[1:]:
        if cand[1] > best[1]:
            best = cand
    return FidelityReport(value=best[1], branch=best[2], argmax_set=k, argmax_state=best[0])


def max_mean_fidelity(c: CorrelatorSet) -> FidelityReport:
    """Mean fidelity maximized over input states and correction sets.

    Equals max[(1+|zz|)/2, (1+|xx|)/2, (1+|yy|)/2]; ties are broken in
    the fixed branch order zz < xx < yy so that sweeps are reproducible
    at cusp points.
    """
    branches = [("zz", c.zz), ("xx", c.xx), ("yy", c.yy)]
    name, value = branches[0][0], (1.0 + abs(branches[0][1])) / 2.0
    for bname, corr in branches[1:]:
        v = (1.0 + abs(corr)) / 2.0
        if v > value:
            name, value = bname, v
    argmax_set = None
    argmax_state = None
    for k in SET_ORDER:
        report = per_set_max_fidelity(c, k)
        if report.value == value:
            argmax_set = k
            argmax_state = report.argmax_state
            break
    return FidelityReport(value=value, branch=name, argmax_set=argmax_set, argmax_state=argmax_state)


def avg_fidelity_closed(c: CorrelatorSet, k: UnitarySetId) -> float:
    """Bloch-sphere-averaged mean fidelity, closed form, for one set."""
    sx, sy, sz = CLOSED_FORM_SIGNS[k]
    return (3.0 + sx * c.xx + sy * c.yy - sz * c.zz) / 6.0


def max_avg_fidelity(c: CorrelatorSet) -> FidelityReport:
    """Average fidelity maximized over the four correction sets.

    Equals max[(3+|xx+yy|-zz)/6, (3+|xx-yy|+zz)/6]; with xx == yy this
    reduces to the XXZ form max[(3+2|xx|-zz)/6, (3+zz)/6].
    """
    psi_val = (3.0 + abs(c.xx + c.yy) - c.zz) / 6.0
    phi_val = (3.0 + abs(c.xx - c.yy) + c.zz) / 6.0
    if phi_val > psi_val:
        argmax = (
            UnitarySetId.S_PHI_PLUS if c.xx - c.yy >= 0 else UnitarySetId.S_PHI_MINUS
        )
        return FidelityReport(value=phi_val, branch="phi", argmax_set=argmax)
    argmax = UnitarySetId.S_PSI_PLUS if c.xx + c.yy >= 0 else UnitarySetId.S_PSI_MINUS
    return FidelityReport(value=psi_val, branch="psi", argmax_set=argmax)


# ---------------------------------------------------------------------------
# Bloch-sphere quadrature oracle
# ---------------------------------------------------------------------------


def _bloch_nodes(nodes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Product Gauss-Legendre grid over u = r^2 in [0,1] and chi in [0,2pi)."""
    xu, wu = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (xu + 1.0)
    wu = 0.5 * wu
    xc, wc = np.polynomial.legendre.leggauss(nodes)
    chi = np.pi * (xc + 1.0)
    wc = np.pi * wc / (2.0 * np.pi)  # uniform measure over the phase
    uu, cc = np.meshgrid(u, chi, indexing="ij")
    ww = np.outer(wu, wc)
    return uu.ravel(), cc.ravel(), ww.ravel()


def avg_fidelity_quadrature(rho23: TwoQubitState, k: UnitarySetId, nodes: int = 32) -> float:
    """Bloch-sphere average of the simulated mean fidelity.

    Independent oracle for avg_fidelity_closed: integrates the explicit
    simulation over the uniform (u = r^2, chi) measure with an
    ``nodes`` x ``nodes`` product Gauss rule.
    """
    if nodes < 32:
        raise ValueError("at least 32 nodes per axis are required")
    u, chi, w = _bloch_nodes(nodes)
    kets = np.stack([np.sqrt(u), np.sqrt(1.0 - u) * np.exp(1j * chi)], axis=1)
    values = _mean_fidelity_sim_batch(kets, rho23.matrix, k)
    return float(w @ values)


def avg_outcome_probability(rho23: TwoQubitState, j: BellOutcome, nodes: int = 32) -> float:
    """Bloch-sphere average of the outcome probability (should be 1/4)."""
    if nodes < 32:
        raise ValueError("at least 32 nodes per axis are required")
    u, chi, w = _bloch_nodes(nodes)
    kets = np.stack([np.sqrt(u), np.sqrt(1.0 - u) * np.exp(1j * chi)], axis=1)
    blocks = _conditional_blocks(kets, rho23.matrix, j)
    probs = np.einsum("ncc->n", blocks).real
    return float(w @ probs)
