"""Monte-Carlo null models and the synthetic-chain simulator.

Two nulls: independent mixed-strategy play with fixed marginals (the
randomization prediction for 2x2 games), and i.i.d. redraws from an
empirical DOS (the finite-sample baseline for cycle detection). Replicate k
of any run draws from a counter-based stream derived only from (root seed,
k), so results are identical under any execution order, chunking, or number
of worker processes.
"""

from __future__ import annotations

from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    StateSpace,
    Trajectory,
    TreatmentDataset,
    estimate_markov,
    square_2x2,
)
from .errors import InvalidDistributionError
from .observables import ZeroFluxPolicy, entropy, epr

__all__ = [
    "Seed",
    "VnmParams",
    "BaselineDistribution",
    "simulate_chain",
    "simulate_vnm",
    "vnm_null_distribution",
    "dos_baseline",
]

_MASK64 = (1 << 64) - 1
_NORM_TOL = 1e-9


def _splitmix64(z: int) -> int:
    """splitmix64 finalizer: the counter-to-stream mixing function."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Seed:
    """Root of a deterministic, splittable random stream.

    split(k) derives an independent child stream from (root, k) alone;
    the extra mixing pass keeps split(a).split(b) distinct from
    split(b).split(a). Streams are realized with the Philox counter-based
    bit generator.
    """

    root: int

    def __post_init__(self):
        if not (0 <= int(self.root) <= _MASK64):
            raise ValueError("seed root must be a 64-bit unsigned integer")
        object.__setattr__(self, "root", int(self.root))

    def split(self, k: int) -> "Seed":
        if k < 0:
            raise ValueError("split counter must be >= 0")
        return Seed(_splitmix64(self.root ^ _splitmix64(k)))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.root))


@dataclass(frozen=True)
class VnmParams:
    """Independent-play parameters: per-round action-1 probabilities for the
    row player (p) and column player (q), and the sample size to hold fixed."""

    p: float
    q: float
    sessions: int
    rounds_per_session: int

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError("p and q must lie in [0, 1]")
        if self.sessions < 1:
            raise ValueError("sessions must be >= 1")
        if self.rounds_per_session < 2:
            raise ValueError("rounds_per_session must be >= 2")


@dataclass(frozen=True)
class BaselineDistribution:
    """Monte-Carlo sample set of one observable under a null model."""

    observable_name: str
    samples: np.ndarray
    seed: int
    policy: ZeroFluxPolicy
    constraint_summary: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.size == 0:
            raise ValueError("a baseline needs at least one sample")
        samples = np.ascontiguousarray(samples)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def reps(self) -> int:
        return int(self.samples.size)

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def std(self) -> float:
        return float(self.samples.std(ddof=1)) if self.reps > 1 else 0.0

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))


def _check_distribution(vec: np.ndarray, what: str) -> None:
    if vec.min() < 0.0 or abs(float(vec.sum()) - 1.0) > _NORM_TOL:
        raise InvalidDistributionError(
            f"{what} must be nonnegative and sum to 1 within {_NORM_TOL}; "
            f"got sum {float(vec.sum())!r}"
        )


def simulate_chain(
    dos0, transition, n: int, seed: Seed, session_id: str = "sim"
) -> Trajectory:
    """Sample an n-step trajectory: s_0 ~ dos0, s_{t+1} ~ transition[s_t].

    Raises:
        InvalidDistributionError: dos0 or a transition row fails
            normalization beyond 1e-9.
    """
    dos0 = np.asarray(dos0, dtype=float)
    transition = np.asarray(transition, dtype=float)
    r = dos0.size
    if transition.shape != (r, r):
        raise ValueError(f"transition shape {transition.shape} does not match r={r}")
    if n < 2:
        raise ValueError("n must be >= 2")
    _check_distribution(dos0, "dos0")
    for i in range(r):
        _check_distribution(transition[i], f"transition row {i}")

    u = seed.generator().random(n)
    cum0 = np.cumsum(dos0).tolist()
    cum_rows = [row.tolist() for row in np.cumsum(transition, axis=1)]
    last = r - 1
    states = np.empty(n, dtype=np.int64)
    s = min(bisect_right(cum0, u[0]), last)
    states[0] = s
    for t in range(1, n):
        s = min(bisect_right(cum_rows[s], u[t]), last)
        states[t] = s
    return Trajectory(session_id=session_id, states=states)


_SQUARE_COORDS = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])


def simulate_vnm(
    params: VnmParams,
    space: StateSpace,
    seed: Seed,
    treatment_id: str = "vnm",
) -> TreatmentDataset:
    """Generate independent mixed-strategy play on the 4-state square space.

    Every round draws row_action ~ Bernoulli(p) and col_action ~ Bernoulli(q)
    independently; the joint state index is 2*row_action + col_action. Session
    count and rounds per session come from params, so the sample size matches
    the treatment the null is built for.
    """
    if space.size != 4 or not np.array_equal(space.coordinates, _SQUARE_COORDS):
        raise ValueError(
            "simulate_vnm needs the canonical 4-state square space "
            "(index = 2*row_action + col_action)"
        )
    rng = seed.generator()
    sessions = []
    for k in range(params.sessions):
        rows = rng.random(params.rounds_per_session) < params.p
        cols = rng.random(params.rounds_per_session) < params.q
        states = 2 * rows.astype(np.int64) + cols.astype(np.int64)
        sessions.append(Trajectory(session_id=f"s{k + 1}", states=states))
    return TreatmentDataset(
        treatment_id=treatment_id,
        space=space,
        sessions=tuple(sessions),
        meta={"model": "vnm", "p": params.p, "q": params.q},
    )


def _vnm_chunk(
    params: VnmParams,
    space: StateSpace,
    policy: ZeroFluxPolicy,
    seed: Seed,
    lo: int,
    hi: int,
) -> tuple[np.ndarray, np.ndarray]:
    ent = np.empty(hi - lo)
    pro = np.empty(hi - lo)
    for k in range(lo, hi):
        data = simulate_vnm(params, space, seed.split(k))
        est = estimate_markov(data)
        ent[k - lo] = entropy(est)
        pro[k - lo], _ = epr(est, policy)
    return ent, pro


def _iid_sequence(cum: list[float], r: int, n: int, seed: Seed) -> np.ndarray:
    u = seed.generator().random(n)
    return np.minimum(np.searchsorted(cum, u, side="right"), r - 1).astype(np.int64)


def _dos_chunk(
    dos: np.ndarray,
    space: StateSpace,
    n_rounds: int,
    policy: ZeroFluxPolicy,
    seed: Seed,
    lo: int,
    hi: int,
) -> np.ndarray:
    cum = np.cumsum(dos).tolist()
    r = space.size
    out = np.empty(hi - lo)
    for k in range(lo, hi):
        states = _iid_sequence(cum, r, n_rounds, seed.split(k))
        data = TreatmentDataset(
            treatment_id="baseline",
            space=space,
            sessions=(Trajectory(session_id="s1", states=states),),
        )
        out[k - lo], _ = epr(estimate_markov(data), policy)
    return out


def _chunk_ranges(reps: int, workers: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(reps, workers * 4)) if workers > 1 else 1
    step = (reps + n_chunks - 1) // n_chunks
    return [(lo, min(lo + step, reps)) for lo in range(0, reps, step)]


def _run_chunks(fn, common_args: tuple, reps: int, workers: int) -> list:
    ranges = _chunk_ranges(reps, workers)
    if workers <= 1 or len(ranges) == 1:
        return [fn(*common_args, lo, hi) for lo, hi in ranges]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *common_args, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]


def vnm_null_distribution(
    params: VnmParams,
    reps: int,
    policy: ZeroFluxPolicy,
    seed: Seed,
    *,
    space: StateSpace | None = None,
    workers: int = 1,
) -> tuple[BaselineDistribution, BaselineDistribution]:
    """Sample the independent-play null: each replicate simulates a dataset
    under params, estimates its chain, and records entropy and EPR.

    Returns (entropy baseline, EPR baseline) with `reps` samples each, in
    replicate order.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")
    if space is None:
        space = square_2x2()
    results = _run_chunks(_vnm_chunk, (params, space, policy, seed), reps, workers)
    ent = np.concatenate([r[0] for r in results])
    pro = np.concatenate([r[1] for r in results])
    constraint = {
        "p": params.p,
        "q": params.q,
        "sessions": params.sessions,
        "rounds_per_session": params.rounds_per_session,
    }
    return (
        BaselineDistribution("entropy", ent, seed.root, policy, constraint),
        BaselineDistribution("epr", pro, seed.root, policy, constraint),
    )


def dos_baseline(
    dos,
    n_rounds: int,
    reps: int,
    policy: ZeroFluxPolicy,
    seed: Seed,
    *,
    workers: int = 1,
) -> BaselineDistribution:
    """Finite-sample EPR baseline: replicates draw an i.i.d. sequence of
    length n_rounds from `dos`, estimate a chain, and record its EPR.

    The sample set is the corrected zero for a treatment with that DOS and
    record count; temporal order is destroyed while occupancy is preserved.
    """
    dos = np.asarray(dos, dtype=float)
    _check_distribution(dos, "dos")
    if n_rounds < 2:
        raise ValueError("n_rounds must be >= 2")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    r = dos.size
    space = StateSpace(
        labels=tuple(str(i) for i in range(r)),
        coordinates=np.arange(r, dtype=float)[:, None],
    )
    results = _run_chunks(
        _dos_chunk, (dos, space, n_rounds, policy, seed), reps, workers
    )
    samples = np.concatenate(results)
    return BaselineDistribution(
        "epr",
        samples,
        seed.root,
        policy,
        {"dos": [float(x) for x in dos], "n_rounds": int(n_rounds)},
    )
