"""Seeded Monte Carlo campaigns over every scheme, with CSV/JSON emission.

A campaign fixes a scheme, a population size, set-size parameters, a trial
count, and a root seed.  Per-trial randomness is derived by spawning a
seed-sequence child per trial index, so records are reproducible and trials
are independent.  Wall time is recorded for information only; it is the one
field that varies between identical re-runs.
"""

from __future__ import annotations

import csv
import json
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from collections.abc import Sequence

import numpy as np

from . import analysis, det_adaptive, det_nonadaptive, randomized
from .core import ConcGTError, Instance, RecoveryResult, Session, parse_instance

SCHEMES = (
    "det-nonadaptive",
    "adaptive2",
    "adaptive-m",
    "rand1",
    "rand2",
    "rand3",
    "las-vegas",
)

_RANDOMIZED = {"rand1", "rand2", "rand3"}

CSV_HEADER = "run_id,scheme,n,sizes,seed,tests_used,stages_used,succeeded,wall_time_ms"

PRNG_DESCRIPTION = "numpy PCG64 via SeedSequence(entropy=seed, spawn_key=(trial,))"


class ConfigError(ConcGTError):
    """Campaign parameters are inconsistent with the chosen scheme."""


@dataclass(frozen=True)
class Campaign:
    scheme: str
    n: int
    sizes: tuple[int, ...]
    trials: int
    seed: int
    epsilon: float | None = None
    alpha: float | None = None
    instance_mode: str = "random-uniform"
    exact_sizes: bool = True
    instance_text: str | None = None
    max_attempts: int = 10_000


@dataclass(frozen=True)
class TrialRecord:
    run_id: str
    scheme: str
    n: int
    sizes: tuple[int, ...]
    seed: int
    tests_used: int
    stages_used: int
    succeeded: bool
    wall_time_ms: float


@dataclass(frozen=True)
class CampaignSummary:
    trials: int
    successes: int
    success_rate: float
    wilson_low: float
    wilson_high: float
    mean_tests: float
    max_tests: int
    mean_stages: float
    max_stages: int
    lower_bound_bits: float
    prng: str = PRNG_DESCRIPTION


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = p + z * z / (2 * trials)
    spread = z * ((p * (1 - p) / trials + z * z / (4 * trials * trials)) ** 0.5)
    return max(0.0, (centre - spread) / denom), min(1.0, (centre + spread) / denom)


def sample_instance(
    n: int, sizes: Sequence[int], rng: np.random.Generator, exact: bool = True
) -> Instance:
    """Uniform random instance with the given (or bounded) set sizes.

    Exact mode draws disjoint sets with sizes equal to ``sizes``; bounded
    mode first draws each size uniformly from 1..s_i.
    """
    drawn = [int(s) if exact else int(rng.integers(1, s + 1)) for s in sizes]
    if sum(drawn) > n:
        raise ConfigError(f"sizes {drawn} do not fit a population of {n}")
    picks = rng.permutation(n)[: sum(drawn)] + 1
    sets, start = [], 0
    for size in drawn:
        sets.append(frozenset(int(x) for x in picks[start : start + size]))
        start += size
    return Instance(n=n, sets=tuple(sets))


def _validate(campaign: Campaign) -> None:
    if campaign.scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {campaign.scheme!r}; choose from {SCHEMES}")
    if campaign.trials < 1:
        raise ConfigError("trials must be at least 1")
    if campaign.n < 1:
        raise ConfigError("n must be positive")
    sizes = campaign.sizes
    if not sizes or any(s < 1 for s in sizes):
        raise ConfigError("sizes must be positive integers")
    if sum(sizes) > campaign.n:
        raise ConfigError("sizes exceed the population")
    if campaign.scheme != "adaptive-m" and len(sizes) != 2:
        raise ConfigError(f"scheme {campaign.scheme} expects exactly two sizes")
    if campaign.scheme == "adaptive-m" and len(sizes) < 2:
        raise ConfigError("adaptive-m expects at least two sizes")
    if campaign.scheme in _RANDOMIZED and campaign.epsilon is None:
        raise ConfigError(f"scheme {campaign.scheme} needs --epsilon")
    if campaign.scheme == "las-vegas" and campaign.alpha is None:
        raise ConfigError("las-vegas needs --alpha")
    if campaign.instance_mode not in ("random-uniform", "from-file"):
        raise ConfigError(f"unknown instance mode {campaign.instance_mode!r}")
    if campaign.instance_mode == "from-file" and not campaign.instance_text:
        raise ConfigError("from-file mode needs the instance contents")


def _scheme_runner(campaign: Campaign, certificate=None):
    scheme = campaign.scheme
    sizes = campaign.sizes

    if scheme == "det-nonadaptive":
        return lambda session, seed: det_nonadaptive.decode_with_certificate(
            session, certificate
        )
    if scheme == "adaptive2":
        return lambda session, seed: det_adaptive.adaptive_two_sets(
            session, sizes[0], sizes[1], seed=seed
        )
    if scheme == "adaptive-m":
        return lambda session, seed: det_adaptive.adaptive_multi_sets(
            session, sizes, seed=seed
        )
    if scheme == "rand1":
        return lambda session, seed: randomized.run_single_stage(
            session, sizes[0], sizes[1], campaign.epsilon, seed
        )
    if scheme == "rand2":
        return lambda session, seed: randomized.run_two_stage(
            session, sizes[0], sizes[1], campaign.epsilon, seed
        )
    if scheme == "rand3":
        return lambda session, seed: randomized.run_three_stage(
            session, sizes[0], sizes[1], campaign.epsilon, seed
        )
    if scheme == "las-vegas":
        return lambda session, seed: randomized.run_las_vegas(
            session,
            sizes[0],
            sizes[1],
            campaign.alpha,
            seed,
            max_attempts=campaign.max_attempts,
        )
    raise ConfigError(f"unknown scheme {scheme!r}")


def _worker_count() -> int:
    raw = os.environ.get("CONCGT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_campaign(campaign: Campaign) -> tuple[list[TrialRecord], CampaignSummary]:
    """Execute every trial and summarise the outcome counters.

    Deterministic in the campaign (wall times aside).  Trials may execute on
    a small thread pool (CONCGT_THREADS); records are ordered by trial index
    regardless of completion order.
    """
    _validate(campaign)

    certificate = None
    if campaign.scheme == "det-nonadaptive":
        v = max(campaign.sizes)
        try:
            certificate = det_nonadaptive.build_disjunct(
                campaign.n, 2, v, seed=campaign.seed, verify=True
            )
        except det_nonadaptive.VerificationTooLargeError as exc:
            raise ConfigError(
                "det-nonadaptive needs a verifiable certificate at this size"
            ) from exc

    fixed_instance = (
        parse_instance(campaign.instance_text)
        if campaign.instance_mode == "from-file"
        else None
    )
    if fixed_instance is not None and fixed_instance.n != campaign.n:
        raise ConfigError("instance file population does not match --n")

    runner = _scheme_runner(campaign, certificate)

    def one_trial(index: int) -> TrialRecord:
        child = np.random.SeedSequence(
            entropy=campaign.seed, spawn_key=(index,)
        )
        inst_seq, scheme_seq = child.spawn(2)
        instance = fixed_instance or sample_instance(
            campaign.n,
            campaign.sizes,
            np.random.default_rng(inst_seq),
            exact=campaign.exact_sizes,
        )
        session = Session(instance)
        started = time.perf_counter()
        result: RecoveryResult = runner(session, int(scheme_seq.generate_state(1)[0]))
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return TrialRecord(
            run_id=f"{campaign.scheme}-{campaign.seed}-{index:05d}",
            scheme=campaign.scheme,
            n=campaign.n,
            sizes=campaign.sizes,
            seed=campaign.seed,
            tests_used=result.tests_used,
            stages_used=result.stages_used,
            succeeded=result.succeeded,
            wall_time_ms=round(elapsed_ms, 3),
        )

    workers = _worker_count()
    if workers == 1:
        records = [one_trial(i) for i in range(campaign.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one_trial, range(campaign.trials)))

    successes = sum(r.succeeded for r in records)
    tests = [r.tests_used for r in records]
    stages = [r.stages_used for r in records]
    low, high = wilson_interval(successes, len(records))
    summary = CampaignSummary(
        trials=len(records),
        successes=successes,
        success_rate=successes / len(records),
        wilson_low=low,
        wilson_high=high,
        mean_tests=sum(tests) / len(tests),
        max_tests=max(tests),
        mean_stages=sum(stages) / len(stages),
        max_stages=max(stages),
        lower_bound_bits=analysis.lower_bound(campaign.n, campaign.sizes),
    )
    return records, summary


def _record_row(record: TrialRecord) -> list[str]:
    return [
        record.run_id,
        record.scheme,
        str(record.n),
        ";".join(str(s) for s in record.sizes),
        str(record.seed),
        str(record.tests_used),
        str(record.stages_used),
        "true" if record.succeeded else "false",
        repr(record.wall_time_ms),
    ]


def render_results(records: Sequence[TrialRecord], fmt: str) -> str:
    """Serialise records to CSV or JSON text."""
    if not records:
        raise ConcGTError("nothing to emit")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for record in records:
            writer.writerow(_record_row(record))
        return buf.getvalue()
    if fmt == "json":
        payload = []
        for record in records:
            entry = asdict(record)
            entry["sizes"] = list(record.sizes)
            payload.append(entry)
        return json.dumps(payload, indent=2) + "\n"
    raise ConcGTError(f"unknown format {fmt!r}")


def emit_results(records: Sequence[TrialRecord], fmt: str, path) -> None:
    text = render_results(records, fmt)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def parse_results(path) -> list[TrialRecord]:
    """Load records back from either emitted format."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    records = []
    if text.lstrip().startswith("["):
        for entry in json.loads(text):
            entry["sizes"] = tuple(entry["sizes"])
            records.append(TrialRecord(**entry))
        return records
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER.split(","):
        raise ConcGTError("unexpected CSV header")
    for row in rows[1:]:
        records.append(
            TrialRecord(
                run_id=row[0],
                scheme=row[1],
                n=int(row[2]),
                sizes=tuple(int(tok) for tok in row[3].split(";")),
                seed=int(row[4]),
                tests_used=int(row[5]),
                stages_used=int(row[6]),
                succeeded=row[7] == "true",
                wall_time_ms=float(row[8]),
            )
        )
    return records
