"""Spin-1/2 chain Hamiltonians and their exact critical-point equations.

Two families are supported, both with periodic boundary conditions:

* XXZ chain in a longitudinal field, tuned by the anisotropy ``delta``
  at fixed field ``h``.  Its two critical points are ``delta1 = h/4 - 1``
  (ferromagnetic level crossing) and ``delta2 = cosh(eta)`` with ``eta``
  solving ``h = 4 sinh(eta) sum_j (-1)^j / cosh(j eta)``.
* Anisotropic XY chain in a transverse field, parametrized by the inverse
  field strength ``lam`` and the anisotropy ``gamma``.  The Ising
  transition sits at ``lam = 1`` and the anisotropy transition at
  ``gamma = 0`` (for ``lam > 1``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionOverflow, NoBracket, NonConvergence, UnsupportedRegime

#: Largest chain length accepted by build_hamiltonian (dense matrices).
MAX_SITES = 14

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass(frozen=True)
class ModelSpec:
    """Which chain to study and where in its parameter space.

    ``family`` is ``"xxz"`` (fields ``delta``, ``h``) or ``"xy"``
    (fields ``lam``, ``gamma``).  Unused fields stay at 0.
    """

    family: str
    delta: float = 0.0
    h: float = 0.0
    lam: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.family not in ("xxz", "xy"):
            raise ValueError(f"unknown model family: {self.family!r}")
        for name in ("delta", "h", "lam", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.family == "xy":
            if not -1.0 <= self.gamma <= 1.0:
                raise ValueError(f"gamma must lie in [-1, 1], got {self.gamma}")
            if self.lam < 0.0:
                raise ValueError(f"lam must be >= 0, got {self.lam}")

    @staticmethod
    def xxz(delta: float, h: float) -> "ModelSpec":
        return ModelSpec(family="xxz", delta=float(delta), h=float(h))

    @staticmethod
    def xy(lam: float, gamma: float) -> "ModelSpec":
        return ModelSpec(family="xy", lam=float(lam), gamma=float(gamma))


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense real-symmetric matrix representation of a periodic chain."""

    matrix: np.ndarray
    sites: int
    boundary: str = "periodic"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class CriticalPoint:
    parameter: str
    value: float
    provenance: str


def xxz_delta1(h: float) -> float:
    """Ferromagnetic critical anisotropy of the XXZ chain in field ``h``.

    Solves ``h = 4 J (1 + delta1)`` with the coupling fixed at J = 1,
    i.e. ``delta1 = h/4 - 1``.
    """
    if not math.isfinite(h):
        raise ValueError("h must be finite")
    return h / 4.0 - 1.0


def _delta2_field(eta: float, tol: float) -> float:
    """Field strength whose Ising-like critical point has rapidity ``eta``.

    Evaluates ``4 sinh(eta) sum_{j=-inf}^{inf} (-1)^j / cosh(j eta)``,
    truncating once terms fall below ``tol / 10``.
    """
    # Terms decay like exp(-j*eta); sum symmetric pairs j and -j.
    total = 1.0
    term_floor = tol / 10.0
    block = 4096
    j0 = 1
    while True:
        j = np.arange(j0, j0 + block, dtype=float)
        with np.errstate(over="ignore"):
            # cosh overflows to inf for large j*eta; 1/inf -> 0 is what we want.
            terms = 2.0 * (-1.0) ** j / np.cosh(j * eta)
        total += terms.sum()
        if abs(terms[-1]) < term_floor:
            break
        j0 += block
        if j0 > 50_000_000:
            raise NonConvergence(f"series for eta={eta} did not truncate")
    return 4.0 * math.sinh(eta) * total


def xxz_delta2(h: float, tol: float = 1e-6) -> float:
    """Ising-like critical anisotropy of the XXZ chain in field ``h > 0``.

    Root-found by geometric bracket expansion plus bisection on the
    rapidity ``eta``; returns ``cosh(eta)``.  For ``h = 0`` the limit
    ``eta -> 0`` gives exactly 1.
    """
    if not math.isfinite(h):
        raise ValueError("h must be finite")
    if h <= 0.0:
        return 1.0

    def residual(eta: float) -> float:
        return _delta2_field(eta, tol) - h

    lo, hi = 0.5, 2.0
    while residual(lo) > 0.0:
        lo *= 0.5
        if lo < 1e-6:
            raise NoBracket(f"no lower bracket for h={h} down to eta=1e-6")
    while residual(hi) < 0.0:
        hi *= 2.0
        if hi > 50.0:
            raise NoBracket(f"no upper bracket for h={h} up to eta=50")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) < tol:
            return math.cosh(mid)
        if r < 0.0:
            lo = mid
        else:
            hi = mid
    raise NonConvergence(f"bisection for h={h} did not reach |residual| < {tol}")


def known_qcps(spec: ModelSpec, sweep_param: str | None = None) -> list[CriticalPoint]:
    """Exact critical points of the swept parameter for ``spec``.

    For XXZ the swept parameter is always ``delta``; for XY it is
    ``sweep_param`` (``"lam"``, the default, or ``"gamma"``).  The
    anisotropy transition only exists for ``lam > 1``.
    """
    if spec.family == "xxz":
        return [
            CriticalPoint("delta", xxz_delta1(spec.h), "ferromagnetic level crossing"),
            CriticalPoint("delta", xxz_delta2(spec.h), "Ising-like transition"),
        ]
    param = sweep_param or "lam"
    if param == "lam":
        return [CriticalPoint("lam", 1.0, "Ising transition")]
    if param == "gamma":
        if spec.lam <= 1.0:
            raise UnsupportedRegime(
                f"anisotropy transition requires lam > 1, got lam={spec.lam}"
            )
        return [CriticalPoint("gamma", 0.0, "anisotropy transition")]
    raise ValueError(f"unknown sweep parameter {param!r}")


def _bond_indices(L: int) -> list[tuple[int, int]]:
    return [(j, (j + 1) % L) for j in range(L)]


def _two_site_term(op_a: np.ndarray, op_b: np.ndarray, i: int, j: int, L: int) -> sp.spmatrix:
    """Sparse embedding of op_a on site i times op_b on site j (i != j)."""
    ops = [sp.identity(2, format="csr", dtype=complex)] * L
    ops[i] = sp.csr_matrix(op_a.astype(complex))
    ops[j] = sp.csr_matrix(op_b.astype(complex))
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return out


def _one_site_term(op: np.ndarray, i: int, L: int) -> sp.spmatrix:
    left = sp.identity(2**i, format="csr", dtype=complex)
    right = sp.identity(2 ** (L - i - 1), format="csr", dtype=complex)
    return sp.kron(sp.kron(left, sp.csr_matrix(op.astype(complex))), right, format="csr")


def build_hamiltonian(spec: ModelSpec, L: int, max_sites: int = MAX_SITES) -> HamiltonianMatrix:
    """Dense periodic-chain Hamiltonian for ``spec`` on ``L`` sites.

    Site 0 is the most significant qubit of the computational-basis
    index.  Both families are real in that basis; the returned matrix
    is real symmetric.
    """
    if L < 2:
        raise ValueError(f"need at least 2 sites, got L={L}")
    if L > max_sites:
        raise DimensionOverflow(f"L={L} exceeds the configured maximum of {max_sites}")
    if L == 2:
        warnings.warn(
            "L=2 periodic chain double-counts its single bond", stacklevel=2
        )

    dim = 2**L
    H = sp.csr_matrix((dim, dim), dtype=complex)
    if spec.family == "xxz":
        for i, j in _bond_indices(L):
            H = H + _two_site_term(PAULI_X, PAULI_X, i, j, L)
            H = H + _two_site_term(PAULI_Y, PAULI_Y, i, j, L)
            H = H + spec.delta * _two_site_term(PAULI_Z, PAULI_Z, i, j, L)
        for i in range(L):
            H = H - (spec.h / 2.0) * _one_site_term(PAULI_Z, i, L)
    else:
        for i, j in _bond_indices(L):
            H = H - (spec.lam / 4.0) * (1.0 + spec.gamma) * _two_site_term(
                PAULI_X, PAULI_X, i, j, L
            )
            H = H - (spec.lam / 4.0) * (1.0 - spec.gamma) * _two_site_term(
                PAULI_Y, PAULI_Y, i, j, L
            )
        for i in range(L):
            H = H - 0.5 * _one_site_term(PAULI_Z, i, L)

    dense = H.toarray()
    assert np.abs(dense.imag).max() < 1e-12
    return HamiltonianMatrix(matrix=np.ascontiguousarray(dense.real), sites=L)
