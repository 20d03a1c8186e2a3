"""Deterministic non-adaptive recovery of two hidden sets.

Built on (n, u, v)-disjunct matrices: for any u+v columns and any choice of
u designated ones, some row has 1s on the designated columns and 0s on the
rest.  With u=2 and v at least the larger hidden-set size, the pairs covered
by no negative test are exactly the pairs with one item in each hidden set,
and splitting that pair table recovers both sets in a single stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import (
    ConcGTError,
    InvalidInstanceError,
    PoolMatrix,
    RecoveryResult,
    Session,
    finalize_result,
)
from .standard_gt import BitMatrix

# Brute-force disjunctness verification enumerates n * C(n, u+v) cases; we
# refuse above this cap rather than stall.
DEFAULT_VERIFY_CAP = 5_000_000
_MAX_BUILD_ATTEMPTS = 1000


class VerificationTooLargeError(ConcGTError):
    """Brute-force disjunctness check would exceed the configured cap."""


def disjunct_size_bound(n: int, s_max: int, log_base: float = math.e) -> int:
    """Row count sufficing for an (n, 2, s_max)-disjunct matrix.

    ceil(((s+2)/2)^2 * ((s+2)/s)^s * (1 + (s+2)(1 + log(n/(s+2) + 1))))
    with s = s_max.  The log base defaults to natural log (conservative);
    it is exposed for experimentation.
    """
    if not 1 <= s_max <= n:
        raise ConcGTError(f"s_max must lie in 1..{n}")
    s = s_max
    log_term = math.log(n / (s + 2) + 1) / math.log(log_base)
    value = ((s + 2) / 2) ** 2 * ((s + 2) / s) ** s * (1 + (s + 2) * (1 + log_term))
    return math.ceil(value)


def find_disjunct_violation(
    matrix: BitMatrix, u: int, v: int
) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """First (designated, zero) column witness breaking disjunctness, if any.

    Brute force over all C(n, u+v) column subsets and all C(u+v, u)
    designations; columns are reported 1-indexed.
    """
    n = matrix.n
    if u < 1 or v < 0 or u + v > n:
        raise ConcGTError(f"need 1 <= u and u + v <= {n}")
    cols = matrix.array.T  # (n, t)
    for subset in combinations(range(n), u + v):
        for designated in combinations(subset, u):
            rest = [c for c in subset if c not in designated]
            ok = np.ones(matrix.t, dtype=bool)
            for c in designated:
                ok &= cols[c]
            for c in rest:
                ok &= ~cols[c]
            if not ok.any():
                return (
                    tuple(c + 1 for c in designated),
                    tuple(c + 1 for c in rest),
                )
    return None


def is_disjunct(matrix: BitMatrix, u: int, v: int) -> bool:
    return find_disjunct_violation(matrix, u, v) is None


def verification_cost(n: int, u: int, v: int) -> int:
    return n * math.comb(n, u + v)


@dataclass(frozen=True)
class DisjunctCertificate:
    matrix: BitMatrix
    u: int
    v: int
    verified: bool


def build_disjunct(
    n: int,
    u: int,
    v: int,
    seed: int,
    verify: bool,
    verify_cap: int = DEFAULT_VERIFY_CAP,
) -> DisjunctCertificate:
    """Sample a random candidate (n, u, v)-disjunct matrix.

    Rows: disjunct_size_bound(n, v); each entry is 1 with probability
    u/(u+v), which maximises the per-row separation probability.  With
    ``verify`` the sample is re-drawn until the brute-force check passes
    (only allowed below the verification cap); otherwise the certificate is
    returned unverified.
    """
    if u + v > n:
        raise ConcGTError("u + v must not exceed n")
    t = disjunct_size_bound(n, v)
    p = u / (u + v)
    rng = np.random.default_rng(seed)
    if not verify:
        return DisjunctCertificate(
            matrix=BitMatrix(rng.random((t, n)) < p), u=u, v=v, verified=False
        )
    if verification_cost(n, u, v) > verify_cap:
        raise VerificationTooLargeError(
            f"verification cost {verification_cost(n, u, v)} exceeds cap {verify_cap}"
        )
    for _ in range(_MAX_BUILD_ATTEMPTS):
        matrix = BitMatrix(rng.random((t, n)) < p)
        if is_disjunct(matrix, u, v):
            return DisjunctCertificate(matrix=matrix, u=u, v=v, verified=True)
    raise ConcGTError("failed to sample a verified disjunct matrix")


def certify_matrix(matrix: BitMatrix, u: int, v: int) -> DisjunctCertificate:
    """Wrap a supplied matrix after brute-force verification."""
    return DisjunctCertificate(matrix=matrix, u=u, v=v, verified=is_disjunct(matrix, u, v))


def decode_with_certificate(
    session: Session, cert: DisjunctCertificate
) -> RecoveryResult:
    """Single-stage recovery of two hidden sets from a verified u=2 design.

    Runs every design row as one stage; a pair of items is kept when no
    negative test contained both.  The kept pairs are exactly the pairs with
    one item in each hidden set, so fixing one pair splits them into the two
    sets.  Exact whenever both hidden-set sizes are at most v.
    """
    if cert.u != 2:
        raise ConcGTError("pair decoding needs a u=2 certificate")
    if not cert.verified:
        raise ConcGTError("refusing to decode with an unverified certificate")
    matrix = cert.matrix
    if matrix.n != session.n:
        raise ConcGTError(f"design width {matrix.n} != population {session.n}")

    outcomes = session.run_stage(PoolMatrix(matrix.array))
    negatives = matrix.array[~outcomes].astype(np.int64)
    # pair_negatives[x, y] = number of negative rows containing items x+1 and y+1
    pair_negatives = negatives.T @ negatives
    clear = pair_negatives == 0
    n = matrix.n
    pairs = [
        (x + 1, y + 1) for x in range(n) for y in range(x + 1, n) if clear[x, y]
    ]
    if not pairs:
        raise InvalidInstanceError(
            "no positive pair survived; the instance violates the two-set model"
        )
    x1, x2 = pairs[0]
    set1 = frozenset(x + 1 for x in range(n) if x + 1 != x2 and clear[x, x2 - 1])
    set2 = frozenset(y + 1 for y in range(n) if y + 1 != x1 and clear[x1 - 1, y])
    return finalize_result(session, (set1, set2))


def surviving_pairs(session_outcomes: np.ndarray, matrix: BitMatrix) -> list[tuple[int, int]]:
    """Pairs contained in no negative row, for inspection and tests."""
    negatives = matrix.array[~np.asarray(session_outcomes, dtype=bool)].astype(np.int64)
    pair_negatives = negatives.T @ negatives
    n = matrix.n
    return [
        (x + 1, y + 1)
        for x in range(n)
        for y in range(x + 1, n)
        if pair_negatives[x, y] == 0
    ]
