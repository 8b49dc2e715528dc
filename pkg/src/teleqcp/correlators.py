"""Thermal correlation functions and two-qubit reduced density matrices.

Two backends produce the nearest-neighbor correlators ``z``, ``xx``,
``yy``, ``zz``:

* finite-chain exact diagonalization (any model family), with an
  Sz-sector-blocked fast path for the XXZ chain;
* thermodynamic-limit free-fermion momentum integrals (XY family only).

The free-fermion sign convention was locked by matching the finite-chain
backend at several probe points rather than taken on faith; the locking
check lives in the test suite.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .chainmodels import ModelSpec, build_hamiltonian, _bond_indices
from .errors import (
    DimensionOverflow,
    InvalidForModel,
    NotPositive,
    QuadratureNonConvergence,
)

#: Largest chain the dense thermal-state machinery will touch.
ED_MAX_SITES = 12
#: Largest XXZ chain for the sector-blocked correlator path.
ED_MAX_SITES_XXZ = 16

_DEGENERACY_RTOL = 1e-10
_WEIGHT_CUTOFF = 1e-16
_QUAD_TOL = 1e-10


@dataclass(frozen=True)
class CorrelatorSet:
    """One- and two-point thermal correlators of a nearest-neighbor pair."""

    z: float
    xx: float
    yy: float
    zz: float
    kT: float
    source: str

    def __post_init__(self):
        for name in ("z", "xx", "yy", "zz"):
            v = getattr(self, name)
            if abs(v) > 1.0 + 1e-9:
                raise ValueError(f"correlator {name}={v} outside [-1, 1]")


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """4x4 density matrix in the basis |00>, |01>, |10>, |11>."""

    matrix: np.ndarray
    degenerate_ground: bool = False

    @staticmethod
    def from_x_form(a: float, b: float, c: float, d: float, e: float = 0.0) -> "TwoQubitState":
        m = np.array(
            [
                [a, 0.0, 0.0, e],
                [0.0, b, c, 0.0],
                [0.0, c, b, 0.0],
                [e, 0.0, 0.0, d],
            ],
            dtype=complex,
        )
        return TwoQubitState(matrix=m)

    def validate(self, psd_tol: float = 1e-10) -> "TwoQubitState":
        m = self.matrix
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise NotPositive(f"trace {np.trace(m).real} != 1")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise NotPositive("matrix is not Hermitian")
        lo = np.linalg.eigvalsh(m).min()
        if lo < -psd_tol:
            raise NotPositive(f"negative eigenvalue {lo}")
        return self


# ---------------------------------------------------------------------------
# Exact diagonalization backend
# ---------------------------------------------------------------------------


def _thermal_weights(energies: np.ndarray, kT: float) -> tuple[np.ndarray, bool]:
    """Canonical weights over the eigenbasis; equal-weight ground manifold at kT=0."""
    e0 = energies.min()
    if kT == 0.0:
        tol = _DEGENERACY_RTOL * max(1.0, abs(e0))
        mask = energies - e0 <= tol
        w = mask / mask.sum()
        return w, int(mask.sum()) > 1
    w = np.exp(-(energies - e0) / kT)
    w /= w.sum()
    return w, False


class _XXZSectors:
    """Spectra of one XXZ chain, block diagonalized by total Sz."""

    def __init__(self, delta: float, h: float, L: int):
        self.L = L
        states = np.arange(2**L, dtype=np.int64)
        bits = (states[:, None] >> (L - 1 - np.arange(L))) & 1
        zvals = 1 - 2 * bits  # sigma^z eigenvalue per site
        n_down = bits.sum(axis=1)

        bonds = _bond_indices(L)
        zz_diag = np.zeros(2**L)
        for i, j in bonds:
            zz_diag += zvals[:, i] * zvals[:, j]
        z_diag = zvals.sum(axis=1)
        diag = delta * zz_diag - (h / 2.0) * z_diag

        self.sectors = []
        for m in range(L + 1):
            idx = np.flatnonzero(n_down == m)
            pos = {int(s): p for p, s in enumerate(idx)}
            n = len(idx)
            H = np.zeros((n, n))
            H[np.arange(n), np.arange(n)] = diag[idx]
            flip = np.zeros((n, n))
            for i, j in bonds:
                mask = (1 << (L - 1 - i)) | (1 << (L - 1 - j))
                for p, s in enumerate(idx):
                    bi = (s >> (L - 1 - i)) & 1
                    bj = (s >> (L - 1 - j)) & 1
                    if bi != bj:
                        q = pos[int(s ^ mask)]
                        H[p, q] += 2.0  # sigma^x sigma^x + sigma^y sigma^y
                        flip[p, q] += 1.0 / L  # bond-averaged hop operator
            evals, evecs = np.linalg.eigh(H)
            self.sectors.append(
                {
                    "idx": idx,
                    "m": m,
                    "energies": evals,
                    "vectors": evecs,
                    "zz_diag": zz_diag[idx] / L,
                    "flip": flip,
                }
            )
        self.energies = np.concatenate([s["energies"] for s in self.sectors])

    def correlators(self, kT: float) -> tuple[CorrelatorSet, bool]:
        w, degen = _thermal_weights(self.energies, kT)
        L = self.L
        z = xx = zz = 0.0
        off = 0
        for s in self.sectors:
            n = len(s["energies"])
            ws = w[off : off + n]
            off += n
            keep = np.flatnonzero(ws > _WEIGHT_CUTOFF)
            if keep.size == 0:
                continue
            V = s["vectors"][:, keep]
            wk = ws[keep]
            z += wk.sum() * (L - 2 * s["m"]) / L
            zz += float(wk @ ((V**2).T @ s["zz_diag"]))
            xx += float(wk @ np.einsum("in,in->n", V, s["flip"] @ V))
        cset = CorrelatorSet(z=z, xx=xx, yy=xx, zz=zz, kT=kT, source=f"ed:L={L}")
        return cset, degen

    def full_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Energies and eigenvectors scattered back into the full 2^L basis."""
        dim = 2**self.L
        V = np.zeros((dim, dim))
        col = 0
        for s in self.sectors:
            n = len(s["energies"])
            V[np.ix_(s["idx"], np.arange(col, col + n))] = s["vectors"]
            col += n
        return self.energies, V


def _parity_blocked_eigh(H: np.ndarray, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition exploiting spin-flip parity conservation.

    The XY Hamiltonian only flips spins in pairs, so it is block
    diagonal over the even and odd magnetization-parity subspaces;
    diagonalizing the two half-size blocks is about four times cheaper
    than the full problem.
    """
    dim = H.shape[0]
    parity = np.zeros(dim, dtype=int)
    for bit in range(L):
        parity ^= (np.arange(dim) >> bit) & 1
    evals = np.empty(dim)
    V = np.zeros((dim, dim))
    pos = 0
    for p in (0, 1):
        idx = np.flatnonzero(parity == p)
        e, v = np.linalg.eigh(H[np.ix_(idx, idx)])
        evals[pos:pos + idx.size] = e
        V[np.ix_(idx, np.arange(pos, pos + idx.size))] = v
        pos += idx.size
    order = np.argsort(evals, kind="stable")
    return evals[order], V[:, order]


class SpectralCache:
    """Immutable eigendecomposition of one finite chain, reusable across kT."""

    def __init__(self, spec: ModelSpec, L: int):
        self.spec = spec
        self.L = L
        if spec.family == "xxz":
            self._sectors = _XXZSectors(spec.delta, spec.h, L)
            self._full = None
        else:
            H = build_hamiltonian(spec, L).matrix
            self._sectors = None
            self._full = _parity_blocked_eigh(H, L)

    def _full_basis(self) -> tuple[np.ndarray, np.ndarray]:
        if self._full is None:
            if self.L > ED_MAX_SITES:
                raise DimensionOverflow(
                    f"full-basis thermal state needs L <= {ED_MAX_SITES}, got {self.L}"
                )
            self._full = self._sectors.full_basis()
        return self._full

    def correlators(self, kT: float) -> tuple[CorrelatorSet, bool]:
        if self._sectors is not None:
            return self._sectors.correlators(kT)
        # Read the bond-averaged correlators off the reduced two-qubit
        # state; much cheaper than per-operator expectations because it
        # reuses one reshape-based contraction for all of them.
        rho = self.reduced_two_qubit(kT)
        m = rho.matrix.real
        cset = CorrelatorSet(
            z=m[0, 0] - m[3, 3],
            xx=2.0 * (m[0, 3] + m[1, 2]),
            yy=2.0 * (m[1, 2] - m[0, 3]),
            zz=m[0, 0] - m[1, 1] - m[2, 2] + m[3, 3],
            kT=kT,
            source=f"ed:L={self.L}",
        )
        return cset, rho.degenerate_ground

    def reduced_two_qubit(self, kT: float) -> TwoQubitState:
        """Bond-averaged partial trace of the thermal state onto two neighbors."""
        energies, V = self._full_basis()
        w, degen = _thermal_weights(energies, kT)
        keep = np.flatnonzero(w > _WEIGHT_CUTOFF)
        W = V[:, keep] * np.sqrt(w[keep])
        L, K = self.L, keep.size
        rho2 = np.zeros((4, 4))
        for i, j in _bond_indices(L):
            A = W.reshape((2,) * L + (K,))
            A = np.moveaxis(A, (i, j), (0, 1)).reshape(4, -1)
            rho2 += (A @ A.T) / L
        return TwoQubitState(matrix=rho2.astype(complex), degenerate_ground=degen)


@functools.lru_cache(maxsize=4)
def _spectral_cache(spec: ModelSpec, L: int) -> SpectralCache:
    return SpectralCache(spec, L)


def _check_ed_size(spec: ModelSpec, L: int) -> None:
    limit = ED_MAX_SITES_XXZ if spec.family == "xxz" else ED_MAX_SITES
    if L > limit:
        raise DimensionOverflow(f"L={L} exceeds ED limit of {limit} for {spec.family}")
    if L < 2:
        raise ValueError(f"need at least 2 sites, got L={L}")


def ed_thermal_correlators(spec: ModelSpec, L: int, kT: float) -> CorrelatorSet:
    """Bond-averaged thermal correlators from exact diagonalization."""
    if kT < 0.0:
        raise ValueError(f"kT must be >= 0, got {kT}")
    _check_ed_size(spec, L)
    cset, _ = _spectral_cache(spec, L).correlators(kT)
    return cset


def ed_reduced_two_qubit(spec: ModelSpec, L: int, kT: float) -> TwoQubitState:
    """Thermal two-qubit state of a nearest-neighbor pair, by partial trace.

    Independent of the correlator-assembly route; the two must agree to
    high precision, which the test suite uses as a structural check.
    """
    if kT < 0.0:
        raise ValueError(f"kT must be >= 0, got {kT}")
    _check_ed_size(spec, L)
    if L > ED_MAX_SITES:
        raise DimensionOverflow(f"partial-trace route needs L <= {ED_MAX_SITES}")
    return _spectral_cache(spec, L).reduced_two_qubit(kT)


# ---------------------------------------------------------------------------
# Thermodynamic-limit XY backend (free fermions)
# ---------------------------------------------------------------------------


def _xy_mode_energy(k: np.ndarray, lam: float, gamma: float) -> np.ndarray:
    return np.sqrt((1.0 - lam * np.cos(k)) ** 2 + (lam * gamma * np.sin(k)) ** 2)


def _fermion_contraction(n: int, lam: float, gamma: float, kT: float) -> float:
    """Momentum integral G(n) of the free-fermion solution on [0, pi]."""

    def integrand(k: float) -> float:
        eps = lam * np.cos(k) - 1.0
        pair = lam * gamma * np.sin(k)
        omega = np.hypot(eps, pair)
        if kT > 0.0:
            factor = np.tanh(omega / (2.0 * kT)) / omega if omega > 1e-14 else 1.0 / (2.0 * kT)
        else:
            factor = 1.0 / max(omega, 1e-300)
        return factor * (np.cos(n * k) * eps - np.sin(n * k) * pair)

    breakpoints = None
    if gamma == 0.0 and lam > 1.0:
        breakpoints = [float(np.arccos(1.0 / lam))]
    value, abserr, *rest = scipy.integrate.quad(
        integrand,
        0.0,
        np.pi,
        epsabs=_QUAD_TOL / 10.0,
        epsrel=0.0,
        limit=400,
        points=breakpoints,
        full_output=True,
    )
    if len(rest) > 1 or abserr > _QUAD_TOL:
        raise QuadratureNonConvergence(
            f"G({n}) at lam={lam}, gamma={gamma}, kT={kT}: abserr={abserr}"
        )
    return value / np.pi


def xy_correlators_tl(lam: float, gamma: float, kT: float) -> CorrelatorSet:
    """Thermodynamic-limit correlators of the XY chain in a transverse field.

    ``z = -G(0)``, ``xx = G(-1)``, ``yy = G(1)``, and
    ``zz = G(0)^2 - G(1) G(-1)`` by Wick's theorem, with ``G(n)`` the
    momentum integral above.  The signs were locked against the
    finite-chain backend, not assumed.
    """
    if kT < 0.0:
        raise ValueError(f"kT must be >= 0, got {kT}")
    if lam < 0.0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    g0 = _fermion_contraction(0, lam, gamma, kT)
    gp = _fermion_contraction(1, lam, gamma, kT)
    gm = _fermion_contraction(-1, lam, gamma, kT)
    return CorrelatorSet(
        z=-g0,
        xx=gm,
        yy=gp,
        zz=g0 * g0 - gp * gm,
        kT=kT,
        source="xy-integral",
    )


# ---------------------------------------------------------------------------
# X-form assembly
# ---------------------------------------------------------------------------


def assemble_xxz_rho(c: CorrelatorSet) -> TwoQubitState:
    """Two-qubit X-form state of the XXZ chain from its correlators."""
    if abs(c.xx - c.yy) > 1e-12:
        raise InvalidForModel(f"XXZ requires xx == yy, got xx={c.xx}, yy={c.yy}")
    a = (1.0 + 2.0 * c.z + c.zz) / 4.0
    b = (1.0 - c.zz) / 4.0
    cc = c.xx / 2.0
    d = (1.0 - 2.0 * c.z + c.zz) / 4.0
    return TwoQubitState.from_x_form(a, b, cc, d).validate()


def assemble_xy_rho(c: CorrelatorSet) -> TwoQubitState:
    """Two-qubit X-form state of the XY chain from its correlators."""
    a = (1.0 + 2.0 * c.z + c.zz) / 4.0
    b = (1.0 - c.zz) / 4.0
    cc = (c.xx + c.yy) / 4.0
    d = (1.0 - 2.0 * c.z + c.zz) / 4.0
    e = (c.xx - c.yy) / 4.0
    return TwoQubitState.from_x_form(a, b, cc, d, e).validate()
