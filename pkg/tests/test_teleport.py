import numpy as np
import pytest

from teleqcp.correlators import CorrelatorSet, TwoQubitState
from teleqcp.errors import ZeroProbabilityOutcome
from teleqcp.teleport import (
    SET_ORDER,
    BellOutcome,
    PureQubit,
    UnitarySetId,
    avg_fidelity_closed,
    avg_fidelity_quadrature,
    avg_outcome_probability,
    max_avg_fidelity,
    max_mean_fidelity,
    mean_fidelity_closed,
    mean_fidelity_sim,
    outcome_probability,
    per_set_max_fidelity,
    run_fidelity,
)

from conftest import random_x_form


def random_input(rng):
    return PureQubit(r=np.sqrt(rng.random()), chi=2.0 * np.pi * rng.random())


BELL_RESOURCES = {
    UnitarySetId.S_PHI_PLUS: TwoQubitState.from_x_form(0.5, 0.0, 0.0, 0.5, 0.5),
    UnitarySetId.S_PHI_MINUS: TwoQubitState.from_x_form(0.5, 0.0, 0.0, 0.5, -0.5),
    UnitarySetId.S_PSI_PLUS: TwoQubitState.from_x_form(0.0, 0.5, 0.5, 0.0),
    UnitarySetId.S_PSI_MINUS: TwoQubitState.from_x_form(0.0, 0.5, -0.5, 0.0),
}


@pytest.mark.parametrize("k", list(UnitarySetId))
def test_bell_resource_with_matching_set_is_perfect(k):
    rng = np.random.default_rng(11)
    resource = BELL_RESOURCES[k]
    for _ in range(10):
        psi = random_input(rng)
        for j in BellOutcome:
            assert abs(run_fidelity(psi, resource, j, k) - 1.0) < 1e-12
        assert abs(mean_fidelity_sim(psi, resource, k) - 1.0) < 1e-12


def test_outcome_probabilities_sum_to_one():
    rng = np.random.default_rng(7)
    for _ in range(20):
        state, _ = random_x_form(rng)
        psi = random_input(rng)
        total = sum(outcome_probability(psi, state, j) for j in BellOutcome)
        assert abs(total - 1.0) < 1e-12


def test_bell_resource_outcomes_are_uniform():
    rng = np.random.default_rng(3)
    resource = BELL_RESOURCES[UnitarySetId.S_PSI_MINUS]
    for _ in range(5):
        psi = random_input(rng)
        for j in BellOutcome:
            assert abs(outcome_probability(psi, resource, j) - 0.25) < 1e-12


def test_zero_probability_outcome_raises():
    resource = TwoQubitState.from_x_form(1.0, 0.0, 0.0, 0.0)
    psi = PureQubit(r=1.0, chi=0.0)
    with pytest.raises(ZeroProbabilityOutcome):
        run_fidelity(psi, resource, BellOutcome.PSI_PLUS, UnitarySetId.S_PSI_PLUS)


def test_sim_matches_closed_form():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(200):
        state, cors = random_x_form(rng)
        psi = random_input(rng)
        for k in UnitarySetId:
            diff = abs(mean_fidelity_sim(psi, state, k) - mean_fidelity_closed(psi, cors, k))
            worst = max(worst, diff)
    assert worst < 1e-12


def test_quadrature_matches_closed_average():
    rng = np.random.default_rng(43)
    for _ in range(20):
        state, cors = random_x_form(rng)
        for k in UnitarySetId:
            diff = abs(avg_fidelity_quadrature(state, k) - avg_fidelity_closed(cors, k))
            assert diff < 1e-8
        for j in BellOutcome:
            assert abs(avg_outcome_probability(state, j) - 0.25) < 1e-8


def test_per_set_max_dominates_random_inputs():
    rng = np.random.default_rng(44)
    for _ in range(20):
        _, cors = random_x_form(rng)
        for k in UnitarySetId:
            bound = per_set_max_fidelity(cors, k).value
            for _ in range(30):
                psi = random_input(rng)
                assert mean_fidelity_closed(psi, cors, k) <= bound + 1e-12


def test_max_mean_fidelity_formula():
    rng = np.random.default_rng(45)
    for _ in range(50):
        _, cors = random_x_form(rng)
        report = max_mean_fidelity(cors)
        expected = max(
            (1.0 + abs(cors.xx)) / 2.0,
            (1.0 + abs(cors.yy)) / 2.0,
            (1.0 + abs(cors.zz)) / 2.0,
        )
        assert abs(report.value - expected) < 1e-14
        assert report.value == max(per_set_max_fidelity(cors, k).value for k in SET_ORDER)


def test_max_avg_fidelity_is_max_over_sets():
    rng = np.random.default_rng(46)
    for _ in range(50):
        _, cors = random_x_form(rng)
        report = max_avg_fidelity(cors)
        best = max(avg_fidelity_closed(cors, k) for k in SET_ORDER)
        assert abs(report.value - best) < 1e-14
        assert abs(avg_fidelity_closed(cors, report.argmax_set) - best) < 1e-14


def test_branch_labels():
    cors = CorrelatorSet(z=0.0, xx=0.2, yy=0.1, zz=0.8, kT=0.0, source="synthetic")
    assert max_mean_fidelity(cors).branch == "zz"
    cors = CorrelatorSet(z=0.0, xx=-0.9, yy=0.1, zz=0.3, kT=0.0, source="synthetic")
    assert max_mean_fidelity(cors).branch == "xx"


def test_classical_resource_average_bound():
    # A product (fully classical) resource cannot beat the 2/3 average
    # fidelity bound.
    cors = CorrelatorSet(z=0.0, xx=0.0, yy=0.0, zz=1.0, kT=0.0, source="synthetic")
    assert max_avg_fidelity(cors).value <= 2.0 / 3.0 + 1e-14


def test_quadrature_rejects_coarse_grids():
    rng = np.random.default_rng(47)
    state, _ = random_x_form(rng)
    with pytest.raises(ValueError):
        avg_fidelity_quadrature(state, UnitarySetId.S_PSI_MINUS, nodes=8)
