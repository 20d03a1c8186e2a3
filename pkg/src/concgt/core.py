"""Ground-truth instances, the metered test oracle, and result comparison.

An instance hides ``m >= 2`` disjoint nonempty item sets inside a population
``{1..n}``.  A pool test is positive exactly when the pool intersects every
hidden set.  All scheme implementations observe outcomes only through a
:class:`Session`, which meters tests and stages and keeps a replayable ledger.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class ConcGTError(Exception):
    """Base class for errors raised by this package."""


class InvalidInstanceError(ConcGTError):
    """The hidden sets violate the problem invariants."""


class InvalidPoolError(ConcGTError):
    """A pool references items outside ``{1..n}`` or has the wrong shape."""


class EmptyStageError(ConcGTError):
    """A stage must contain at least one test."""


class OracleInvariantError(ConcGTError):
    """An outcome pattern that is impossible for a valid instance was seen."""


@dataclass(frozen=True)
class Instance:
    """Hidden ground truth: ``n`` items and disjoint nonempty sets ``S_1..S_m``."""

    n: int
    sets: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidInstanceError(f"n must be positive, got {self.n}")
        sets = tuple(frozenset(s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        if len(sets) < 2:
            raise InvalidInstanceError("an instance needs at least two hidden sets")
        total = 0
        seen: set[int] = set()
        for s in sets:
            if not s:
                raise InvalidInstanceError("hidden sets must be nonempty")
            if not all(isinstance(x, (int, np.integer)) and 1 <= x <= self.n for x in s):
                raise InvalidInstanceError(f"items must lie in 1..{self.n}")
            if seen & s:
                raise InvalidInstanceError("hidden sets must be pairwise disjoint")
            seen |= s
            total += len(s)
        if total > self.n:
            raise InvalidInstanceError("hidden sets cannot exceed the population")

    @property
    def m(self) -> int:
        return len(self.sets)

    @cached_property
    def indicators(self) -> np.ndarray:
        """Boolean (m, n) matrix; row i marks the members of S_i (columns are items 1..n)."""
        ind = np.zeros((self.m, self.n), dtype=bool)
        for i, s in enumerate(self.sets):
            ind[i, np.fromiter(s, dtype=np.int64) - 1] = True
        ind.flags.writeable = False
        return ind


def _as_item_array(items: Iterable[int], n: int) -> np.ndarray:
    arr = np.asarray(sorted(items), dtype=np.int64)
    if arr.size and (arr[0] < 1 or arr[-1] > n):
        raise InvalidPoolError(f"pool items must lie in 1..{n}")
    return arr


def evaluate_test(instance: Instance, pool: Iterable[int]) -> bool:
    """Outcome of a single pool: positive iff the pool meets every hidden set.

    The empty pool is legal and always negative.  Items outside ``1..n``
    raise :class:`InvalidPoolError`.
    """
    items = frozenset(pool)
    if items and not all(1 <= x <= instance.n for x in items):
        raise InvalidPoolError(f"pool items must lie in 1..{instance.n}")
    return all(items & s for s in instance.sets)


# ---------------------------------------------------------------------------
# Pool blocks
#
# A stage is built from blocks.  Each block describes a batch of pools in a
# form the session can evaluate without materialising every pool, while the
# ledger can still expand any block back into individual pools for replay.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PoolMatrix:
    """Explicit pools: row r of ``rows`` is one pool.

    ``columns`` maps matrix columns to item numbers; ``None`` means the
    matrix has full width ``n`` with column j holding item j+1.
    """

    rows: np.ndarray
    columns: np.ndarray | None = None

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=bool)
        if rows.ndim != 2:
            raise InvalidPoolError("pool matrix must be two-dimensional")
        object.__setattr__(self, "rows", rows)
        if self.columns is not None:
            cols = np.asarray(self.columns, dtype=np.int64)
            if cols.shape != (rows.shape[1],):
                raise InvalidPoolError("column map must match matrix width")
            object.__setattr__(self, "columns", cols)

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    def _check_width(self, n: int) -> None:
        if self.columns is None:
            if self.rows.shape[1] != n:
                raise InvalidPoolError(
                    f"pool matrix width {self.rows.shape[1]} != population {n}"
                )
        elif self.columns.size and (self.columns.min() < 1 or self.columns.max() > n):
            raise InvalidPoolError(f"pool items must lie in 1..{n}")

    def hit_matrix(self, indicators: np.ndarray) -> np.ndarray:
        """(count, m) bool: entry (r, i) says pool r intersects S_i."""
        ind = indicators if self.columns is None else indicators[:, self.columns - 1]
        # (t, 1, k) & (1, m, k) -> any over k
        return (self.rows[:, None, :] & ind[None, :, :]).any(axis=2)

    def pools(self) -> Iterator[frozenset[int]]:
        for r in range(self.count):
            sup = np.flatnonzero(self.rows[r])
            items = sup + 1 if self.columns is None else self.columns[sup]
            yield frozenset(int(x) for x in items)


@dataclass(frozen=True, eq=False)
class SetPools:
    """Explicit pools given as item sets (small adaptive stages)."""

    pools_: tuple[frozenset[int], ...]

    def __init__(self, pools: Iterable[Iterable[int]]):
        object.__setattr__(self, "pools_", tuple(frozenset(p) for p in pools))

    @property
    def count(self) -> int:
        return len(self.pools_)

    def _check_width(self, n: int) -> None:
        for p in self.pools_:
            if p and not all(1 <= x <= n for x in p):
                raise InvalidPoolError(f"pool items must lie in 1..{n}")

    def hit_matrix(self, indicators: np.ndarray) -> np.ndarray:
        m = indicators.shape[0]
        out = np.zeros((self.count, m), dtype=bool)
        for r, p in enumerate(self.pools_):
            if p:
                idx = np.fromiter(p, dtype=np.int64) - 1
                out[r] = indicators[:, idx].any(axis=1)
        return out

    def pools(self) -> Iterator[frozenset[int]]:
        return iter(self.pools_)


@dataclass(frozen=True, eq=False)
class CrossUnionPools:
    """All pairwise unions ``left_i | right_j``, left-major order."""

    left: PoolMatrix
    right: PoolMatrix

    @property
    def count(self) -> int:
        return self.left.count * self.right.count

    def _check_width(self, n: int) -> None:
        self.left._check_width(n)
        self.right._check_width(n)

    def hit_matrix(self, indicators: np.ndarray) -> np.ndarray:
        hl = self.left.hit_matrix(indicators)
        hr = self.right.hit_matrix(indicators)
        return (hl[:, None, :] | hr[None, :, :]).reshape(self.count, -1)

    def pools(self) -> Iterator[frozenset[int]]:
        rights = list(self.right.pools())
        for lp in self.left.pools():
            for rp in rights:
                yield lp | rp


@dataclass(frozen=True, eq=False)
class BackgroundedDesign:
    """Pools ``background_b | design_row_r`` for every background and row.

    Background-major order: all rows of the design under background 0 come
    first, then background 1, and so on.
    """

    design: PoolMatrix
    backgrounds: "SetPools | PoolMatrix"

    @property
    def count(self) -> int:
        return self.backgrounds.count * self.design.count

    def _check_width(self, n: int) -> None:
        self.design._check_width(n)
        self.backgrounds._check_width(n)

    def hit_matrix(self, indicators: np.ndarray) -> np.ndarray:
        hd = self.design.hit_matrix(indicators)
        hb = self.backgrounds.hit_matrix(indicators)
        return (hb[:, None, :] | hd[None, :, :]).reshape(self.count, -1)

    def pools(self) -> Iterator[frozenset[int]]:
        rows = list(self.design.pools())
        for bg in self.backgrounds.pools():
            for rp in rows:
                yield bg | rp


PoolBlock = PoolMatrix | SetPools | CrossUnionPools | BackgroundedDesign


def _coerce_block(pools) -> PoolBlock:
    if isinstance(pools, (PoolMatrix, SetPools, CrossUnionPools, BackgroundedDesign)):
        return pools
    if isinstance(pools, np.ndarray):
        return PoolMatrix(pools)
    return SetPools(pools)


@dataclass(frozen=True)
class LedgerEntry:
    stage: int
    pool: frozenset[int]
    outcome: bool


@dataclass
class _StageBlock:
    stage: int
    block: PoolBlock
    outcomes: np.ndarray


class Session:
    """Metered access to an instance's test oracle.

    Tests are grouped into stages; pools submitted within one stage may only
    depend on outcomes of earlier stages.  ``run_stage`` executes a single
    block as its own stage; ``begin_stage``/``submit``/``end_stage`` compose
    a stage from several blocks.  A session is single-threaded.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.tests_used = 0
        self.stages_used = 0
        self._blocks: list[_StageBlock] = []
        self._open = False
        self._staged = 0

    @property
    def n(self) -> int:
        return self.instance.n

    def begin_stage(self) -> None:
        if self._open:
            raise ConcGTError("a stage is already open")
        self._open = True
        self._staged = 0

    def submit(self, pools) -> np.ndarray:
        """Evaluate a block of pools inside the open stage; returns outcomes."""
        if not self._open:
            raise ConcGTError("no open stage; call begin_stage() or run_stage()")
        block = _coerce_block(pools)
        block._check_width(self.instance.n)
        hits = block.hit_matrix(self.instance.indicators)
        outcomes = hits.all(axis=1)
        self._blocks.append(_StageBlock(self.stages_used + 1, block, outcomes))
        self.tests_used += block.count
        self._staged += block.count
        return outcomes

    def end_stage(self) -> None:
        if not self._open:
            raise ConcGTError("no open stage")
        self._open = False
        if self._staged == 0:
            raise EmptyStageError("a stage must contain at least one test")
        self.stages_used += 1

    @contextmanager
    def stage(self):
        self.begin_stage()
        yield self
        self.end_stage()

    def run_stage(self, pools) -> np.ndarray:
        """Execute one block as a complete stage.

        Validation happens before any counter changes, so a rejected stage
        leaves the session untouched.
        """
        block = _coerce_block(pools)
        if block.count == 0:
            raise EmptyStageError("a stage must contain at least one test")
        block._check_width(self.instance.n)
        self.begin_stage()
        try:
            outcomes = self.submit(block)
        except ConcGTError:
            self._open = False
            raise
        self.end_stage()
        return outcomes

    def iter_ledger(self) -> Iterator[LedgerEntry]:
        """Expand every recorded test as (stage, pool, outcome)."""
        for sb in self._blocks:
            for pool, out in zip(sb.block.pools(), sb.outcomes):
                yield LedgerEntry(sb.stage, pool, bool(out))

    def ledger_length(self) -> int:
        return sum(sb.block.count for sb in self._blocks)


def compare_up_to_permutation(
    recovered: Iterable[Iterable[int]] | None, truth: Iterable[Iterable[int]]
) -> bool:
    """Equality of two set families as multisets (label order is meaningless)."""
    if recovered is None:
        return False
    return Counter(map(frozenset, recovered)) == Counter(map(frozenset, truth))


@dataclass(frozen=True)
class RecoveryResult:
    """What a scheme produced plus the resources its session consumed."""

    recovered: tuple[frozenset[int], ...]
    tests_used: int
    stages_used: int
    succeeded: bool


def finalize_result(
    session: Session, recovered: Sequence[Iterable[int]] | None
) -> RecoveryResult:
    """Package a scheme's answer, judging success against the ground truth."""
    sets = tuple(frozenset(s) for s in recovered) if recovered is not None else ()
    ok = compare_up_to_permutation(sets, session.instance.sets) if sets else False
    return RecoveryResult(
        recovered=sets,
        tests_used=session.tests_used,
        stages_used=session.stages_used,
        succeeded=ok,
    )


# ---------------------------------------------------------------------------
# Instance text format: line 1 is "n m", lines 2..m+1 list the items of each
# hidden set, space-separated, 1-indexed.
# ---------------------------------------------------------------------------


def dump_instance(instance: Instance) -> str:
    lines = [f"{instance.n} {instance.m}"]
    for s in instance.sets:
        lines.append(" ".join(str(x) for x in sorted(s)))
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInstanceError("empty instance file")
    try:
        n, m = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise InvalidInstanceError(f"bad header line: {lines[0]!r}") from exc
    if len(lines) != m + 1:
        raise InvalidInstanceError(f"expected {m} set lines, found {len(lines) - 1}")
    sets = tuple(frozenset(int(tok) for tok in ln.split()) for ln in lines[1:])
    return Instance(n=n, sets=sets)


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_instance(instance))
