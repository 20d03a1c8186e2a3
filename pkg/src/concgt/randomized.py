"""Randomized two-set schemes: single-stage, two-stage, three-stage, and a
zero-error repeat-until-success variant.

All four share one sampling idea: rows of floor(n/s) items drawn uniformly
(s being the combined hidden-set size) are likely to contain an item from
exactly one hidden set, and such a row turns the problem into standard group
testing by acting as a background.  The trial counts come from an explicit
hypergeometric bound, so each scheme's failure probability is capped by its
epsilon budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BackgroundedDesign,
    ConcGTError,
    CrossUnionPools,
    PoolMatrix,
    RecoveryResult,
    Session,
    SetPools,
    finalize_result,
)
from .standard_gt import (
    DEFAULT_C0,
    BitMatrix,
    DecodeTask,
    build_oneshot_design,
    decode_oneshot,
    run_decode_tasks,
)

# e^5 / (4 pi^2): the reciprocal of the worst-case probability that a
# floor(n/s)-subset holds exactly one marked item.
SAMPLING_CONSTANT = math.exp(5.0) / (4.0 * math.pi**2)


class AttemptLimitError(ConcGTError):
    """The repeat-until-success loop hit its attempt cap."""


def trial_count(epsilon_i: float, s: int, s_i: int) -> int:
    """Rows needed so some row hits exactly one item of S_i and none of the
    other set, except with probability at most epsilon_i.

    ceil((e^5 / 4pi^2) * ln(1/epsilon_i) * s / s_i), floored at one trial.
    """
    if not 0 < epsilon_i < 1:
        raise ConcGTError("epsilon_i must be in (0, 1)")
    if not 1 <= s_i <= s:
        raise ConcGTError("need 1 <= s_i <= s")
    return max(1, math.ceil(SAMPLING_CONSTANT * math.log(1.0 / epsilon_i) * s / s_i))


@dataclass(frozen=True)
class SamplerConfig:
    """Row sampler settings.

    Without replacement each row is a uniform floor(n/s)-subset.  The
    replacement variant draws ceil(c_factor * n / s) items independently and
    keeps the support; it backs the relaxation where set sizes are only
    known up to the constant factor c_factor.
    """

    n: int
    s: int
    replacement: bool = False
    c_factor: float = 1.0

    def __post_init__(self) -> None:
        if not 1 <= self.s <= self.n:
            raise ConcGTError("need 1 <= s <= n")
        if self.c_factor < 1.0:
            raise ConcGTError("c_factor must be at least 1")

    @property
    def draw(self) -> int:
        if self.replacement:
            return max(1, math.ceil(self.c_factor * self.n / self.s))
        return max(1, self.n // self.s)


def _sample_row_matrix(
    config: SamplerConfig, t: int, rng: np.random.Generator
) -> np.ndarray:
    """(t, n) boolean matrix of independently sampled rows."""
    rows = np.zeros((t, config.n), dtype=bool)
    if config.replacement:
        draws = rng.integers(0, config.n, size=(t, config.draw))
        rows[np.arange(t)[:, None], draws] = True
    else:
        idx = np.argsort(rng.random((t, config.n)), axis=1)[:, : config.draw]
        rows[np.arange(t)[:, None], idx] = True
    return rows


def sample_row(config: SamplerConfig, rng: np.random.Generator) -> frozenset[int]:
    row = _sample_row_matrix(config, 1, rng)[0]
    return frozenset(int(x) for x in np.flatnonzero(row) + 1)


def plan_total_tests(t_a: int, t_b: int, t_m: int) -> int:
    """Single-stage plan size: (t_A + t_A t_B + t_A t_M) + (t_B + t_B t_M)."""
    return t_a + t_a * t_b + t_a * t_m + t_b + t_b * t_m


@dataclass(frozen=True, eq=False)
class SingleStageDesign:
    """Everything the single-stage scheme commits to before testing.

    The one stage contains, in order: the rows of A (indicator outcomes),
    the rows of B, all cross unions A_i | B_j, the identification block
    test(M, A_i) for every i, and test(M, B_j) for every j.
    """

    n: int
    s1: int
    s2: int
    epsilon: float
    eps0: float
    eps1: float
    eps2: float
    a_rows: BitMatrix
    b_rows: BitMatrix
    m_rows: BitMatrix

    @property
    def t_a(self) -> int:
        return self.a_rows.t

    @property
    def t_b(self) -> int:
        return self.b_rows.t

    @property
    def t_m(self) -> int:
        return self.m_rows.t

    @property
    def total_tests(self) -> int:
        return plan_total_tests(self.t_a, self.t_b, self.t_m)

    def blocks(self) -> list:
        a = PoolMatrix(self.a_rows.array)
        b = PoolMatrix(self.b_rows.array)
        m = PoolMatrix(self.m_rows.array)
        return [
            a,
            b,
            CrossUnionPools(a, b),
            BackgroundedDesign(m, a),
            BackgroundedDesign(m, b),
        ]


def encode_single_stage(
    n: int,
    s1: int,
    s2: int,
    epsilon: float,
    seed: int,
    replacement: bool = False,
    c_factor: float = 1.0,
    c0: float = DEFAULT_C0,
) -> SingleStageDesign:
    """Draw the three matrices and fix the complete one-stage test plan.

    The error budget is split evenly: eps0 = eps1 = eps2 = epsilon / 4, so
    the overall failure probability 2*eps0 + eps1 + eps2 stays below
    epsilon.  Deterministic in the seed.
    """
    if s1 + s2 > n:
        raise ConcGTError("hidden sets cannot exceed the population")
    if not 0 < epsilon < 1:
        raise ConcGTError("epsilon must be in (0, 1)")
    eps = epsilon / 4.0
    s = s1 + s2
    rng = np.random.default_rng(seed)
    config = SamplerConfig(n=n, s=s, replacement=replacement, c_factor=c_factor)
    a_rows = BitMatrix(_sample_row_matrix(config, trial_count(eps, s, s1), rng))
    b_rows = BitMatrix(_sample_row_matrix(config, trial_count(eps, s, s2), rng))
    m_rows = build_oneshot_design(
        n, max(s1, s2), eps, int(rng.integers(2**63)), c0=c0
    )
    return SingleStageDesign(
        n=n, s1=s1, s2=s2, epsilon=epsilon, eps0=eps, eps1=eps, eps2=eps,
        a_rows=a_rows, b_rows=b_rows, m_rows=m_rows,
    )


def decode_single_stage(
    outcomes: np.ndarray, design: SingleStageDesign
) -> tuple[frozenset[int], frozenset[int]] | None:
    """Recover the two hidden sets from the concatenated outcome vector.

    Scans the rows of A in order, skipping rows that tested positive and
    rows whose cross outcomes match the B indicators; the first remaining
    row pins down a usable (i, j), and both sets fall out of the
    identification blocks.  Returns None when no usable row exists or the
    decoded pair fails validation (wrong sizes, overlap, or emptiness).
    """
    outcomes = np.asarray(outcomes, dtype=bool)
    t_a, t_b, t_m = design.t_a, design.t_b, design.t_m
    if outcomes.shape != (design.total_tests,):
        raise ConcGTError(f"expected {design.total_tests} outcomes")
    y_a = outcomes[:t_a]
    y_b = outcomes[t_a : t_a + t_b]
    off = t_a + t_b
    cross = outcomes[off : off + t_a * t_b].reshape(t_a, t_b)
    off += t_a * t_b
    f_a = outcomes[off : off + t_a * t_m].reshape(t_a, t_m)
    off += t_a * t_m
    f_b = outcomes[off :].reshape(t_b, t_m)

    s_max = max(design.s1, design.s2)
    for i in range(t_a):
        if y_a[i]:
            continue
        if (cross[i] == y_b).all():
            continue
        j = int(np.flatnonzero(~y_b & cross[i])[0])
        first = decode_oneshot(f_a[i], design.m_rows, s_max)
        second = decode_oneshot(f_b[j], design.m_rows, s_max)
        if not first or not second or first & second:
            return None
        if sorted((len(first), len(second))) != sorted((design.s1, design.s2)):
            return None
        return first, second
    return None


def run_single_stage(
    session: Session,
    s1: int,
    s2: int,
    epsilon: float,
    seed: int,
    replacement: bool = False,
    c_factor: float = 1.0,
) -> RecoveryResult:
    """Non-adaptive scheme: one stage, recovery probability at least 1 - epsilon."""
    design = encode_single_stage(
        session.n, s1, s2, epsilon, seed, replacement=replacement, c_factor=c_factor
    )
    session.begin_stage()
    parts = [session.submit(block) for block in design.blocks()]
    session.end_stage()
    recovered = decode_single_stage(np.concatenate(parts), design)
    return finalize_result(session, recovered)


def _indicator_stage(
    session: Session,
    s1: int,
    s2: int,
    eps1: float,
    eps2: float,
    rng: np.random.Generator,
    replacement: bool,
    c_factor: float,
) -> tuple[tuple[int, int] | None, np.ndarray, np.ndarray]:
    """One stage of row tests plus all cross unions.

    Returns the lexicographically first (i, j) with row A_i negative, row
    B_j negative, and their union positive, together with both row
    matrices.  Such a pair certifies that A_i meets exactly one hidden set
    and B_j exactly the other.
    """
    n = session.n
    s = s1 + s2
    config = SamplerConfig(n=n, s=s, replacement=replacement, c_factor=c_factor)
    a_rows = _sample_row_matrix(config, trial_count(eps1, s, s1), rng)
    b_rows = _sample_row_matrix(config, trial_count(eps2, s, s2), rng)
    a_block, b_block = PoolMatrix(a_rows), PoolMatrix(b_rows)
    session.begin_stage()
    y_a = session.submit(a_block)
    y_b = session.submit(b_block)
    cross = session.submit(CrossUnionPools(a_block, b_block)).reshape(
        a_rows.shape[0], b_rows.shape[0]
    )
    session.end_stage()
    usable = ~y_a[:, None] & ~y_b[None, :] & cross
    hits = np.argwhere(usable)
    found = (int(hits[0, 0]), int(hits[0, 1])) if hits.size else None
    return found, a_rows, b_rows


def run_two_stage(
    session: Session,
    s1: int,
    s2: int,
    epsilon: float,
    seed: int,
    replacement: bool = False,
    c_factor: float = 1.0,
    c0: float = DEFAULT_C0,
) -> RecoveryResult:
    """Two stages: find a usable row pair, then decode two one-shot designs.

    Stage two runs test(M, A_i) and test(M, B_j) against a shared one-shot
    matrix and COMP-decodes both.  If stage one finds no usable pair the
    scheme stops there and reports failure.
    """
    if not 0 < epsilon < 1:
        raise ConcGTError("epsilon must be in (0, 1)")
    eps = epsilon / 4.0
    rng = np.random.default_rng(seed)
    found, a_rows, b_rows = _indicator_stage(
        session, s1, s2, eps, eps, rng, replacement, c_factor
    )
    if found is None:
        return finalize_result(session, None)
    i, j = found
    s_max = max(s1, s2)
    design = build_oneshot_design(
        session.n, s_max, eps, int(rng.integers(2**63)), c0=c0
    )
    bg_a = frozenset(int(x) for x in np.flatnonzero(a_rows[i]) + 1)
    bg_b = frozenset(int(x) for x in np.flatnonzero(b_rows[j]) + 1)
    session.begin_stage()
    f_a = session.submit(
        BackgroundedDesign(PoolMatrix(design.array), SetPools([bg_a]))
    )
    f_b = session.submit(
        BackgroundedDesign(PoolMatrix(design.array), SetPools([bg_b]))
    )
    session.end_stage()
    first = decode_oneshot(f_a, design, s_max)
    second = decode_oneshot(f_b, design, s_max)
    return finalize_result(session, (first, second))


def _background_tasks(
    n: int,
    s_max: int,
    a_row: np.ndarray,
    b_row: np.ndarray,
    rng: np.random.Generator,
) -> list[DecodeTask]:
    tasks = []
    for row in (a_row, b_row):
        background = frozenset(int(x) for x in np.flatnonzero(row) + 1)
        domain = tuple(x for x in range(1, n + 1) if x not in background)
        tasks.append(
            DecodeTask(
                domain=domain,
                s_bound=s_max,
                background=background,
                seed=int(rng.integers(2**63)),
            )
        )
    return tasks


def run_three_stage(
    session: Session,
    s1: int,
    s2: int,
    epsilon: float,
    seed: int,
    replacement: bool = False,
    c_factor: float = 1.0,
    c0: float = DEFAULT_C0,
) -> RecoveryResult:
    """Three stages; exact recovery whenever stage one finds a usable pair.

    Stages two and three run the zero-error two-stage subroutine twice in
    parallel, with rows A_i and B_j as backgrounds, so the only failure mode
    is stage one coming up empty (probability at most epsilon / 2).
    """
    if not 0 < epsilon < 1:
        raise ConcGTError("epsilon must be in (0, 1)")
    eps = epsilon / 4.0
    rng = np.random.default_rng(seed)
    found, a_rows, b_rows = _indicator_stage(
        session, s1, s2, eps, eps, rng, replacement, c_factor
    )
    if found is None:
        return finalize_result(session, None)
    i, j = found
    tasks = _background_tasks(session.n, max(s1, s2), a_rows[i], b_rows[j], rng)
    first, second = run_decode_tasks(session, tasks, epsilon0=eps, c0=c0)
    return finalize_result(session, (first.items, second.items))


def run_las_vegas(
    session: Session,
    s1: int,
    s2: int,
    alpha: float,
    seed: int,
    max_attempts: int = 10_000,
    replacement: bool = False,
    c_factor: float = 1.0,
    c0: float = DEFAULT_C0,
) -> RecoveryResult:
    """Zero-error scheme: repeat the indicator stage until it succeeds.

    Success of an attempt is self-certifying, so the answer is always exact;
    only the stage and test counts are random.  Each attempt fails with
    probability at most alpha, giving 1/(1 - alpha) expected attempts and
    an expected stage count of 2 + 1/(1 - alpha).  The attempt cap guards
    against misconfiguration and raises instead of ever guessing.
    """
    if not 0 < alpha < 1:
        raise ConcGTError("alpha must be in (0, 1)")
    if max_attempts < 1:
        raise ConcGTError("max_attempts must be at least 1")
    eps = alpha / 2.0
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        found, a_rows, b_rows = _indicator_stage(
            session, s1, s2, eps, eps, rng, replacement, c_factor
        )
        if found is None:
            continue
        i, j = found
        tasks = _background_tasks(session.n, max(s1, s2), a_rows[i], b_rows[j], rng)
        first, second = run_decode_tasks(session, tasks, c0=c0)
        return finalize_result(session, (first.items, second.items))
    raise AttemptLimitError(f"no usable row pair after {max_attempts} attempts")
