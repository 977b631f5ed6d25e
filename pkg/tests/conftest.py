"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", derandomize=True)
settings.load_profile("ci")

from chainflux import (
    MarkovEstimate,
    StateSpace,
    Trajectory,
    TreatmentDataset,
    square_2x2,
    triangle_3,
)

RING_TRANSITION = np.array(
    [
        [0.25, 0.50, 0.25],
        [0.25, 0.25, 0.50],
        [0.50, 0.25, 0.25],
    ]
)

# forward 0.25*log_3(2), the closed-form EPR of the ring above
RING_EPR = 0.25 * np.log(2.0) / np.log(3.0)

SQUARE_CYCLE_ORDER = (0, 2, 3, 1)


def make_dataset(sessions, space=None, treatment_id="t") -> TreatmentDataset:
    """Dataset from plain python lists of state indices."""
    if space is None:
        space = square_2x2()
    trajs = tuple(
        Trajectory(session_id=f"s{i + 1}", states=np.asarray(s, dtype=np.int64))
        for i, s in enumerate(sessions)
    )
    return TreatmentDataset(treatment_id=treatment_id, space=space, sessions=trajs)


def ring_estimate() -> MarkovEstimate:
    """Exact 3-state ring: forward 0.5, backward 0.25, stay 0.25, uniform DOS."""
    return MarkovEstimate.from_exact(
        triangle_3(), np.full(3, 1.0 / 3.0), RING_TRANSITION
    )


def square_cycle_estimate(forward=1.0, backward=0.0) -> MarkovEstimate:
    """Exact driven cycle 0 -> 2 -> 3 -> 1 -> 0 on the unit square, uniform DOS."""
    stay = 1.0 - forward - backward
    transition = np.zeros((4, 4))
    k = len(SQUARE_CYCLE_ORDER)
    for pos, state in enumerate(SQUARE_CYCLE_ORDER):
        transition[state, SQUARE_CYCLE_ORDER[(pos + 1) % k]] += forward
        transition[state, SQUARE_CYCLE_ORDER[(pos - 1) % k]] += backward
        transition[state, state] += stay
    return MarkovEstimate.from_exact(square_2x2(), np.full(4, 0.25), transition)


def reversible_estimate(rng: np.random.Generator, r: int) -> MarkovEstimate:
    """Random chain satisfying detailed balance exactly: build a symmetric
    flux matrix S, set P_i proportional to its row sums and w_ij = S_ij / W_i."""
    raw = rng.random((r, r)) + 0.05
    flux = (raw + raw.T) / 2.0
    row = flux.sum(axis=1)
    dos = row / row.sum()
    transition = flux / row[:, None]
    space = StateSpace(
        labels=tuple(str(i) for i in range(r)),
        coordinates=rng.random((r, 2)),
    )
    return MarkovEstimate.from_exact(space, dos, transition)


@pytest.fixture
def square_space() -> StateSpace:
    return square_2x2()


@pytest.fixture
def triangle_space() -> StateSpace:
    return triangle_3()
