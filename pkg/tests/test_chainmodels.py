import numpy as np
import pytest

from teleqcp.chainmodels import (
    MAX_SITES,
    ModelSpec,
    build_hamiltonian,
    known_qcps,
    xxz_delta1,
    xxz_delta2,
)
from teleqcp.errors import DimensionOverflow, UnsupportedRegime

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


def kron_chain(ops):
    out = np.array([[1.0 + 0.0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def site_op(op, i, L):
    ops = [np.eye(2)] * L
    ops[i] = op
    return kron_chain(ops)


def dense_xxz(delta, h, L):
    H = np.zeros((2**L, 2**L), dtype=complex)
    for i in range(L):
        j = (i + 1) % L
        H += site_op(SX, i, L) @ site_op(SX, j, L)
        H += site_op(SY, i, L) @ site_op(SY, j, L)
        H += delta * site_op(SZ, i, L) @ site_op(SZ, j, L)
        H -= 0.5 * h * site_op(SZ, i, L)
    return H


def dense_xy(lam, gamma, L):
    H = np.zeros((2**L, 2**L), dtype=complex)
    for i in range(L):
        j = (i + 1) % L
        H -= 0.25 * lam * (1.0 + gamma) * site_op(SX, i, L) @ site_op(SX, j, L)
        H -= 0.25 * lam * (1.0 - gamma) * site_op(SY, i, L) @ site_op(SY, j, L)
        H -= 0.5 * site_op(SZ, i, L)
    return H


def test_delta1_values():
    assert xxz_delta1(0.0) == -1.0
    assert xxz_delta1(6.0) == 0.5
    assert xxz_delta1(12.0) == 2.0


def test_delta2_values():
    assert xxz_delta2(0.0) == 1.0
    assert abs(xxz_delta2(6.0) - 3.299) < 1e-3
    assert abs(xxz_delta2(12.0) - 4.875) < 1e-3


def test_delta2_monotone_in_field():
    hs = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    vals = [xxz_delta2(h) for h in hs]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(v > 1.0 for v in vals)


def test_known_qcps_xxz():
    pts = known_qcps(ModelSpec.xxz(delta=0.0, h=6.0))
    assert [p.parameter for p in pts] == ["delta", "delta"]
    assert pts[0].value == 0.5
    assert abs(pts[1].value - 3.299) < 1e-3


def test_known_qcps_xy():
    pts = known_qcps(ModelSpec.xy(lam=0.5, gamma=0.5))
    assert pts[0].parameter == "lam"
    assert pts[0].value == 1.0

    pts = known_qcps(ModelSpec.xy(lam=1.5, gamma=0.5), sweep_param="gamma")
    assert pts[0].parameter == "gamma"
    assert pts[0].value == 0.0

    with pytest.raises(UnsupportedRegime):
        known_qcps(ModelSpec.xy(lam=0.5, gamma=0.5), sweep_param="gamma")


def test_modelspec_validation():
    with pytest.raises(ValueError):
        ModelSpec.xy(lam=-0.1, gamma=0.0)
    with pytest.raises(ValueError):
        ModelSpec.xy(lam=1.0, gamma=1.5)
    with pytest.raises(ValueError):
        ModelSpec.xxz(delta=np.inf, h=0.0)


@pytest.mark.parametrize("delta,h", [(0.3, 0.0), (-0.7, 2.0), (1.5, 6.0)])
def test_xxz_hamiltonian_matches_dense_oracle(delta, h):
    L = 4
    built = build_hamiltonian(ModelSpec.xxz(delta=delta, h=h), L)
    ref = dense_xxz(delta, h, L)
    assert np.abs(built.matrix - ref).max() < 1e-12


@pytest.mark.parametrize("lam,gamma", [(0.5, 1.0), (1.5, 0.5), (0.8, 0.0)])
def test_xy_hamiltonian_matches_dense_oracle(lam, gamma):
    L = 4
    built = build_hamiltonian(ModelSpec.xy(lam=lam, gamma=gamma), L)
    ref = dense_xy(lam, gamma, L)
    assert np.abs(built.matrix - ref).max() < 1e-12


def test_hamiltonian_is_real_symmetric():
    for spec in (ModelSpec.xxz(delta=0.5, h=6.0), ModelSpec.xy(lam=1.2, gamma=0.7)):
        H = build_hamiltonian(spec, 6).matrix
        assert np.isrealobj(H)
        assert np.abs(H - H.T).max() == 0.0


def test_xxz_conserves_total_sz():
    L = 6
    H = build_hamiltonian(ModelSpec.xxz(delta=0.5, h=6.0), L).matrix
    sz_total = sum(site_op(SZ, i, L).real for i in range(L))
    assert np.abs(H @ sz_total - sz_total @ H).max() < 1e-12


def test_size_limits():
    with pytest.raises(ValueError):
        build_hamiltonian(ModelSpec.xy(lam=1.0, gamma=0.0), 1)
    with pytest.raises(DimensionOverflow):
        build_hamiltonian(ModelSpec.xy(lam=1.0, gamma=0.0), MAX_SITES + 2)
