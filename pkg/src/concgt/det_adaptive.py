"""Deterministic adaptive recovery via binary/(m+1)-ary splitting.

The two-set scheme halves an active set with six tests per stage until a
positive pool of size two pins down one item from each hidden set, then
recovers both sets through background-reduced standard group testing.  The
general scheme splits into m+1 parts and keeps a positive leave-one-out
union until it has size m.

Stage accounting for the two-set scheme: the descent executes at most
ceil(log2 n) - 2 stages before the active set drops to size four or less
(verified exhaustively in the tests), and the terminal stage is merged with
the first stage of the set recovery, giving ceil(log2 n) stages overall.
Run on its own, ``find_defective_pair`` needs the terminal stage explicitly
and can therefore take up to ceil(log2 n) - 1 stages.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .core import (
    BackgroundedDesign,
    ConcGTError,
    OracleInvariantError,
    PoolMatrix,
    RecoveryResult,
    Session,
    SetPools,
    finalize_result,
)
from .standard_gt import (
    DEFAULT_C0,
    DEFAULT_EPSILON0,
    DecodeTask,
    _comp_survivors,
    _oneshot_rows,
    run_decode_tasks,
)


def _halves(items: list[int]) -> tuple[list[int], list[int]]:
    h = (len(items) + 1) // 2
    return items[:h], items[h:]


def six_split_pools(active: list[int]) -> list[frozenset[int]]:
    """The six pools tested per descent stage over the active set.

    First and second halves, then the four unions of one quarter from each
    half.  Quarters may be empty near the bottom; empty pools test negative.
    """
    a01, a02 = _halves(active)
    a11, a12 = _halves(a01)
    a21, a22 = _halves(a02)
    return [
        frozenset(a01),
        frozenset(a02),
        frozenset(a11) | frozenset(a21),
        frozenset(a11) | frozenset(a22),
        frozenset(a12) | frozenset(a21),
        frozenset(a12) | frozenset(a22),
    ]


def _first_positive(pools: list[frozenset[int]], outcomes: np.ndarray) -> frozenset[int]:
    for pool, out in zip(pools, outcomes):
        if out:
            return pool
    raise OracleInvariantError(
        "no pool in a split stage was positive; the session does not hold a valid instance"
    )


def find_defective_pair(session: Session) -> tuple[int, int]:
    """Locate one item from each of the two hidden sets.

    Repeatedly replaces the active set with the lowest-index positive pool of
    its six-way split, stopping as soon as that pool has size two.  Uses at
    most max(1, ceil(log2 n) - 1) stages of six tests each.
    """
    active = list(range(1, session.n + 1))
    while True:
        pools = six_split_pools(active)
        outcomes = session.run_stage(SetPools(pools))
        chosen = _first_positive(pools, outcomes)
        if len(chosen) == 2:
            a, b = sorted(chosen)
            return a, b
        active = sorted(chosen)


def worst_case_split_stages(n: int) -> int:
    """Descent stages needed before the active set has size at most four.

    Conservative: follows the largest of the six pools at every step, which
    dominates any realisable path.  Used by the tests to certify the stage
    budget of the two-set scheme.
    """
    stages = 0
    a = n
    while a > 4:
        a01 = (a + 1) // 2
        a02 = a - a01
        widest_cross = (a01 + 1) // 2 + (a02 + 1) // 2
        a = max(a01, widest_cross)
        stages += 1
    return stages


def adaptive_two_sets(
    session: Session,
    s1: int,
    s2: int,
    seed: int = 0,
    epsilon0: float = DEFAULT_EPSILON0,
    c0: float = DEFAULT_C0,
) -> RecoveryResult:
    """Full two-set recovery in at most ceil(log2 n) stages, zero error.

    Descends while the active set has more than four items.  The terminal
    stage then tests the remaining two-subsets together with a speculative
    recovery design for every remaining item used as a background, so the
    confirmation stage right after it completes both hidden sets.  At most
    four of the speculative designs are built and at most two are consumed.
    If a size-two pool turns positive early, the recovery falls back to the
    plain two-stage subroutine.
    """
    if session.instance.m != 2:
        raise ConcGTError("this scheme handles exactly two hidden sets")
    n = session.n
    s_max = max(s1, s2)
    root = np.random.SeedSequence(seed)

    active = list(range(1, n + 1))
    while len(active) > 4:
        pools = six_split_pools(active)
        outcomes = session.run_stage(SetPools(pools))
        chosen = _first_positive(pools, outcomes)
        if len(chosen) == 2:
            # Lucky early stop: recover with the shared two-stage subroutine.
            a1, a2 = sorted(chosen)
            seeds = root.spawn(2)
            tasks = [
                DecodeTask(
                    domain=tuple(x for x in range(1, n + 1) if x != a2),
                    s_bound=s_max,
                    background=frozenset({a2}),
                    seed=int(seeds[0].generate_state(1)[0]),
                ),
                DecodeTask(
                    domain=tuple(x for x in range(1, n + 1) if x != a1),
                    s_bound=s_max,
                    background=frozenset({a1}),
                    seed=int(seeds[1].generate_state(1)[0]),
                ),
            ]
            first, second = run_decode_tasks(session, tasks, epsilon0, c0)
            return finalize_result(session, (first.items, second.items))
        active = sorted(chosen)

    # Terminal stage: the six pools now include every two-subset of the
    # active set, so the defective pair is identified here; the speculative
    # designs let the recovery finish in one more stage.
    pools = six_split_pools(active)
    seeds = root.spawn(len(active))
    designs: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for w, child in zip(active, seeds):
        domain = np.asarray([x for x in range(1, n + 1) if x != w], dtype=np.int64)
        rng = np.random.default_rng(child)
        designs[w] = (domain, _oneshot_rows(domain.size, s_max, epsilon0, c0, rng))

    session.begin_stage()
    pair_outcomes = session.submit(SetPools(pools))
    design_outcomes = {
        w: session.submit(
            BackgroundedDesign(PoolMatrix(rows, columns=domain), SetPools([{w}]))
        )
        for w, (domain, rows) in designs.items()
    }
    session.end_stage()

    chosen = _first_positive(pools, pair_outcomes)
    a1, a2 = sorted(chosen)
    # The design backed by a2 recovers the set containing a1 and vice versa.
    survivors = {}
    for anchor in (a2, a1):
        domain, rows = designs[anchor]
        survivors[anchor] = _comp_survivors(domain, rows, design_outcomes[anchor])

    session.begin_stage()
    confirm = {
        anchor: session.submit(
            BackgroundedDesign(
                PoolMatrix(np.eye(cand.size, dtype=bool), columns=cand),
                SetPools([{anchor}]),
            )
        )
        for anchor, cand in survivors.items()
        if cand.size
    }
    session.end_stage()

    recovered = []
    for anchor in (a2, a1):
        cand = survivors[anchor]
        members = cand[confirm[anchor]] if cand.size else cand
        recovered.append(frozenset(int(x) for x in members))
    return finalize_result(session, recovered)


def _partition(active: list[int], parts: int) -> list[list[int]]:
    q, r = divmod(len(active), parts)
    out, start = [], 0
    for i in range(parts):
        size = q + (1 if i < r else 0)
        out.append(active[start : start + size])
        start += size
    return out


def find_defective_tuple(session: Session, m: int | None = None) -> tuple[int, ...]:
    """Locate one item from each of the m hidden sets.

    Each stage splits the active set into m+1 near-equal contiguous blocks
    and tests the m+1 leave-one-out unions; by pigeonhole one union still
    meets every hidden set.  Stops when the chosen positive union has size
    m, which is forced once the active set shrinks to m+1 items.
    """
    if m is None:
        m = session.instance.m
    active = list(range(1, session.n + 1))
    while True:
        blocks = _partition(active, m + 1)
        pools = [
            frozenset(x for j, blk in enumerate(blocks) if j != i for x in blk)
            for i in range(m + 1)
        ]
        outcomes = session.run_stage(SetPools(pools))
        chosen = _first_positive(pools, outcomes)
        if len(chosen) == m:
            return tuple(sorted(chosen))
        active = sorted(chosen)


def worst_case_tuple_stages(n: int, m: int) -> int:
    """Upper bound on stages used by ``find_defective_tuple``."""
    stages = 0
    a = n
    while a > m + 1:
        a -= a // (m + 1)
        stages += 1
    return stages + 1


def adaptive_multi_sets(
    session: Session,
    bounds: Sequence[int],
    seed: int = 0,
    epsilon0: float = DEFAULT_EPSILON0,
    c0: float = DEFAULT_C0,
) -> RecoveryResult:
    """General-m recovery: tuple search plus m shared two-stage recoveries.

    Every recovery call receives the bound max(bounds) - 1 (floored at one):
    hidden sets are only identified up to permutation, so per-set bounds
    cannot be matched to anchors before decoding.  Zero error.
    """
    m = session.instance.m
    if len(bounds) != m:
        raise ConcGTError(f"expected {m} size bounds, got {len(bounds)}")
    n = session.n
    anchors = find_defective_tuple(session, m)
    rest = tuple(x for x in range(1, n + 1) if x not in set(anchors))
    s_bound = max(1, max(bounds) - 1)
    seeds = np.random.SeedSequence(seed).spawn(m)
    tasks = [
        DecodeTask(
            domain=rest,
            s_bound=s_bound,
            background=frozenset(anchors) - {anchor},
            seed=int(child.generate_state(1)[0]),
        )
        for anchor, child in zip(anchors, seeds)
    ]
    outcomes = run_decode_tasks(session, tasks, epsilon0, c0)
    recovered = [
        frozenset({anchor}) | out.items for anchor, out in zip(anchors, outcomes)
    ]
    return finalize_result(session, recovered)
