"""Standard group-testing subroutines used as black boxes by the schemes.

Covers plain measurement matrices with OR semantics, testing a design with a
fixed background set added to every pool, COMP decoding of a random one-shot
design, and a zero-error two-stage recovery (random design plus individual
confirmation) that the adaptive and three-stage schemes rely on.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .core import (
    BackgroundedDesign,
    ConcGTError,
    InvalidPoolError,
    PoolMatrix,
    Session,
    SetPools,
)

# Defaults for the random one-shot design.  The row count is
# ceil(c0 * s_bound * (ln k + ln(1/epsilon0))) over k candidate columns and
# each entry is included with probability 1/(s_bound + 1); with c0 = 3 the
# chance that COMP keeps any wrong candidate stays below epsilon0 at the
# scales this package targets.
DEFAULT_C0 = 3.0
DEFAULT_EPSILON0 = 0.01


@dataclass(frozen=True, eq=False)
class BitMatrix:
    """A t x n binary pooling design; rows are pools over items 1..n."""

    array: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.array, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise InvalidPoolError("a design needs at least one row")
        object.__setattr__(self, "array", arr)

    @property
    def t(self) -> int:
        return self.array.shape[0]

    @property
    def n(self) -> int:
        return self.array.shape[1]

    def row_support(self, i: int) -> frozenset[int]:
        return frozenset(int(x) for x in np.flatnonzero(self.array[i]) + 1)

    @property
    def supports(self) -> tuple[frozenset[int], ...]:
        return tuple(self.row_support(i) for i in range(self.t))


def bitmatrix_from_supports(n: int, supports: Sequence[Iterable[int]]) -> BitMatrix:
    arr = np.zeros((len(supports), n), dtype=bool)
    for i, sup in enumerate(supports):
        for x in sup:
            if not 1 <= x <= n:
                raise InvalidPoolError(f"items must lie in 1..{n}")
            arr[i, x - 1] = True
    return BitMatrix(arr)


def dump_matrix(matrix: BitMatrix) -> str:
    """Text form: "t n" header, then t lines of n space-separated 0/1 digits."""
    lines = [f"{matrix.t} {matrix.n}"]
    for row in matrix.array:
        lines.append(" ".join("1" if v else "0" for v in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> BitMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidPoolError("empty matrix file")
    try:
        t, n = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise InvalidPoolError(f"bad header line: {lines[0]!r}") from exc
    if len(lines) != t + 1:
        raise InvalidPoolError(f"expected {t} rows, found {len(lines) - 1}")
    arr = np.zeros((t, n), dtype=bool)
    for i, ln in enumerate(lines[1:]):
        digits = ln.split()
        if len(digits) != n or any(d not in ("0", "1") for d in digits):
            raise InvalidPoolError(f"row {i + 1} must hold {n} 0/1 digits")
        arr[i] = [d == "1" for d in digits]
    return BitMatrix(arr)


def load_matrix(path) -> BitMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def save_matrix(matrix: BitMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_matrix(matrix))


def boolean_or_product(design: BitMatrix, support: Iterable[int]) -> np.ndarray:
    """OR-semantics measurement: entry i is 1 iff row i meets the support."""
    items = np.asarray(sorted(support), dtype=np.int64)
    if items.size == 0:
        return np.zeros(design.t, dtype=bool)
    if items[0] < 1 or items[-1] > design.n:
        raise InvalidPoolError(f"support items must lie in 1..{design.n}")
    return design.array[:, items - 1].any(axis=1)


def test_with_background(
    session: Session, design: BitMatrix, background: Iterable[int]
) -> np.ndarray:
    """Run every design row with the background set included in each pool.

    Joins the session's open stage if one is active, otherwise runs as a
    stage of its own.  Consumes ``design.t`` tests.
    """
    block = BackgroundedDesign(PoolMatrix(design.array), SetPools([background]))
    if session._open:
        return session.submit(block)
    return session.run_stage(block)


def oneshot_row_count(
    k: int, s_bound: int, epsilon0: float = DEFAULT_EPSILON0, c0: float = DEFAULT_C0
) -> int:
    if not 0 < epsilon0 < 1:
        raise ConcGTError("epsilon0 must be in (0, 1)")
    if s_bound < 1:
        raise ConcGTError("s_bound must be at least 1")
    return max(1, math.ceil(c0 * s_bound * (math.log(max(k, 1)) + math.log(1.0 / epsilon0))))


def _oneshot_rows(
    k: int, s_bound: int, epsilon0: float, c0: float, rng: np.random.Generator
) -> np.ndarray:
    t = oneshot_row_count(k, s_bound, epsilon0, c0)
    return rng.random((t, k)) < 1.0 / (s_bound + 1)


def build_oneshot_design(
    n: int,
    s_bound: int,
    epsilon0: float,
    seed: int,
    c0: float = DEFAULT_C0,
) -> BitMatrix:
    """Random one-shot design for supports of size up to ``s_bound``.

    Each entry is included independently with probability 1/(s_bound + 1);
    the same seed always yields the same matrix.
    """
    if not 1 <= s_bound <= n:
        raise ConcGTError(f"s_bound must lie in 1..{n}")
    rng = np.random.default_rng(seed)
    return BitMatrix(_oneshot_rows(n, s_bound, epsilon0, c0, rng))


def decode_oneshot(
    outcomes: np.ndarray, design: BitMatrix, s_bound: int
) -> frozenset[int]:
    """COMP estimate: every item that appears in no negative row.

    Always a superset of the true support when the outcomes came from
    ``boolean_or_product``.  An estimate larger than ``s_bound`` means the
    design failed to separate; callers may treat that as a decode failure.
    """
    outcomes = np.asarray(outcomes, dtype=bool)
    if outcomes.shape != (design.t,):
        raise ConcGTError(f"expected {design.t} outcomes, got {outcomes.shape}")
    eliminated = design.array[~outcomes].any(axis=0)
    return frozenset(int(x) for x in np.flatnonzero(~eliminated) + 1)


def _comp_survivors(
    domain: np.ndarray, rows: np.ndarray, outcomes: np.ndarray
) -> np.ndarray:
    """Domain items not appearing in any negative row (column-mapped COMP)."""
    eliminated = rows[~outcomes].any(axis=0) if rows.size else np.zeros(len(domain), bool)
    return domain[~eliminated]


@dataclass(frozen=True)
class DecodeTask:
    """One background-reduced recovery job for the two-stage runner.

    The background must intersect every hidden set except exactly one; the
    excepted set's items inside ``domain`` are the target.  ``domain`` and
    the background must be disjoint.
    """

    domain: tuple[int, ...]
    s_bound: int
    background: frozenset[int]
    seed: int


@dataclass(frozen=True)
class TwoStageOutcome:
    items: frozenset[int]
    over_budget: bool


def run_decode_tasks(
    session: Session,
    tasks: Sequence[DecodeTask],
    epsilon0: float = DEFAULT_EPSILON0,
    c0: float = DEFAULT_C0,
) -> list[TwoStageOutcome]:
    """Run several two-stage recoveries in parallel, sharing the two stages.

    Stage one submits a random design per task (restricted to its domain,
    with its background in every pool); stage two confirms each COMP
    survivor individually.  Recovery is exact whenever the task
    preconditions hold; stages with nothing to test are skipped.
    """
    prepared = []
    for task in tasks:
        domain = np.asarray(sorted(set(task.domain)), dtype=np.int64)
        if set(task.background) & set(int(x) for x in domain):
            raise ConcGTError("task domain and background must be disjoint")
        rows = None
        if domain.size:
            rng = np.random.default_rng(task.seed)
            rows = _oneshot_rows(domain.size, max(1, task.s_bound), epsilon0, c0, rng)
        prepared.append((task, domain, rows))

    stage1: list[np.ndarray | None] = [None] * len(prepared)
    if any(rows is not None for _, _, rows in prepared):
        session.begin_stage()
        for idx, (task, domain, rows) in enumerate(prepared):
            if rows is None:
                continue
            block = BackgroundedDesign(
                PoolMatrix(rows, columns=domain), SetPools([task.background])
            )
            stage1[idx] = session.submit(block)
        session.end_stage()

    survivors: list[np.ndarray] = []
    for idx, (task, domain, rows) in enumerate(prepared):
        if rows is None:
            survivors.append(np.empty(0, dtype=np.int64))
        else:
            survivors.append(_comp_survivors(domain, rows, stage1[idx]))

    stage2: list[np.ndarray | None] = [None] * len(prepared)
    if any(s.size for s in survivors):
        session.begin_stage()
        for idx, (task, _, _) in enumerate(prepared):
            cand = survivors[idx]
            if cand.size == 0:
                continue
            block = BackgroundedDesign(
                PoolMatrix(np.eye(cand.size, dtype=bool), columns=cand),
                SetPools([task.background]),
            )
            stage2[idx] = session.submit(block)
        session.end_stage()

    results = []
    for idx, (task, _, _) in enumerate(prepared):
        cand = survivors[idx]
        confirmed = (
            frozenset(int(x) for x in cand[stage2[idx]]) if cand.size else frozenset()
        )
        results.append(
            TwoStageOutcome(items=confirmed, over_budget=len(confirmed) > task.s_bound)
        )
    return results


def two_stage_decode(
    session: Session,
    candidates_domain: Iterable[int],
    s_bound: int,
    background: Iterable[int],
    seed: int,
    epsilon0: float = DEFAULT_EPSILON0,
    c0: float = DEFAULT_C0,
) -> TwoStageOutcome:
    """Zero-error recovery of the one hidden set the background does not meet.

    Runs alone: one design stage plus one confirmation stage (either stage is
    skipped when it would contain no tests).  The returned flag marks a
    target larger than the advertised bound; the items are exact regardless.
    """
    task = DecodeTask(
        domain=tuple(candidates_domain),
        s_bound=s_bound,
        background=frozenset(background),
        seed=seed,
    )
    return run_decode_tasks(session, [task], epsilon0=epsilon0, c0=c0)[0]
