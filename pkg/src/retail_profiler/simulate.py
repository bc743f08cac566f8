"""Customer-acquisition simulation: sequences, distance curves, baselines.

A strategy produces an ordered sequence of customers. The simulator keeps a
running sum of raw monthly demands; after each acquisition the sum is
normalized to unit mean and its distance to the target recorded, so a whole
curve costs one pass regardless of length.

Randomness is explicit everywhere: sequences take a seed, and the baseline
derives one child seed per repetition from the master seed via a counter
(``SeedSequence([seed, repetition])``), so runs reproduce bit-for-bit.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from retail_profiler import kernels
from retail_profiler.model import CustomerDataset, DataError, TargetProfile, format_float
from retail_profiler.pairing import PairTable

STRATEGY_LABELS = ("eid", "contracted", "demanded", "random")


@dataclass(frozen=True, eq=False)
class AcquisitionSequence:
    """Ordered customer ids produced by one strategy run.

    ``seed`` is whatever seeded the run: an int for direct calls, a derived
    ``SeedSequence`` for baseline repetitions.
    """

    ids: tuple[str, ...]
    strategy: str
    seed: object

    def __post_init__(self):
        if self.strategy not in STRATEGY_LABELS:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGY_LABELS}")

    def __len__(self) -> int:
        return len(self.ids)

    def prefix(self, n: int) -> "AcquisitionSequence":
        """The first n acquisitions of this run."""
        if n >= len(self.ids):
            return self
        return AcquisitionSequence(ids=self.ids[:n], strategy=self.strategy, seed=self.seed)


@dataclass(frozen=True, eq=False)
class DistanceCurve:
    """Aggregate-demand distance to the target after each acquisition step."""

    steps: np.ndarray
    distance: np.ndarray
    strategy: str = "eid"

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64)
        distance = np.asarray(self.distance, dtype=np.float64)
        if steps.shape != distance.shape:
            raise ValueError("steps and distance lengths differ")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "distance", distance)

    def at(self, n: int) -> float:
        i = int(n) - 1
        if not 0 <= i < len(self.distance):
            raise ValueError(f"step {n} outside curve range 1..{len(self.distance)}")
        return float(self.distance[i])


@dataclass(frozen=True, eq=False)
class BaselineCurve:
    """Median and interquartile band over repeated random acquisition runs."""

    steps: np.ndarray
    median: np.ndarray
    q1: np.ndarray
    q3: np.ndarray
    repetitions: int

    def median_at(self, n: int) -> float:
        i = int(n) - 1
        if not 0 <= i < len(self.median):
            raise ValueError(f"step {n} outside curve range 1..{len(self.median)}")
        return float(self.median[i])


def _require_kpis(table: PairTable) -> None:
    if not table.records:
        raise DataError("pair table is empty")
    if not table.has_kpis:
        raise ValueError("pair table has no KPIs attached; run attach_kpis first")
    if any(r.n_k and not r.member_ids for r in table.records):
        raise ValueError("pair table lacks member lists; reload it together with the customer data")


def _pair_ordered_sequence(table: PairTable, sort_key, strategy: str, seed: int) -> AcquisitionSequence:
    rng = np.random.default_rng(seed)
    ids: list[str] = []
    for record in sorted(table.records, key=sort_key):
        members = list(record.member_ids)
        rng.shuffle(members)
        ids.extend(members)
    return AcquisitionSequence(ids=tuple(ids), strategy=strategy, seed=seed)


def greedy_sequence(table: PairTable, dataset: CustomerDataset, seed: int) -> AcquisitionSequence:
    """Pairs by decreasing enhancement indicator, members shuffled within each pair.

    Ties on the indicator are broken by ascending pair distance, then by
    (nace, location), so a run is fully determined by the seed.
    """
    _require_kpis(table)
    return _pair_ordered_sequence(
        table,
        sort_key=lambda r: (-r.E_k, r.d_k, r.key.nace, r.key.location),
        strategy="eid",
        seed=seed,
    )


def power_sequence(
    table: PairTable,
    dataset: CustomerDataset,
    key: str,
    seed: int,
    per_customer: bool = False,
) -> AcquisitionSequence:
    """Pairs by decreasing average contracted (or demanded) power.

    ``per_customer=True`` switches to ordering individual customers by their
    own power instead of pair averages (ties broken by id; no shuffling).
    """
    if key not in ("contracted", "demanded"):
        raise ValueError(f"power key must be 'contracted' or 'demanded', got {key!r}")
    _require_kpis(table)
    if per_customer:
        dataset = _dataset_of(table, dataset)
        idx = dataset.pairable_indices
        power = (
            dataset.contracted_kw[idx]
            if key == "contracted"
            else dataset.raw_demand[idx].mean(axis=1)
        )
        ranked = sorted(zip(power, (dataset.ids[i] for i in idx)), key=lambda t: (-t[0], t[1]))
        return AcquisitionSequence(
            ids=tuple(cid for _, cid in ranked), strategy=key, seed=seed
        )
    attr = "avg_contracted" if key == "contracted" else "avg_demand"
    return _pair_ordered_sequence(
        table,
        sort_key=lambda r: (-getattr(r, attr), r.d_k, r.key.nace, r.key.location),
        strategy=key,
        seed=seed,
    )


def _dataset_of(table: PairTable, dataset: CustomerDataset | None) -> CustomerDataset:
    got = dataset if dataset is not None else table.dataset
    if got is None:
        raise ValueError("no customer dataset available")
    return got


def random_sequence(dataset: CustomerDataset, n: int, seed) -> AcquisitionSequence:
    """Uniform sample without replacement from the pairable customers."""
    pool = dataset.pairable_indices
    if n > pool.size:
        raise ValueError(f"sample size {n} exceeds the {pool.size} pairable customers")
    if n < 0:
        raise ValueError("sample size must be >= 0")
    rng = np.random.default_rng(seed)
    picks = rng.choice(pool, size=n, replace=False)
    return AcquisitionSequence(
        ids=tuple(dataset.ids[i] for i in picks), strategy="random", seed=seed
    )


def accumulate_curve(
    seq: AcquisitionSequence, dataset: CustomerDataset, target: TargetProfile
) -> DistanceCurve:
    """Distance curve of the sequence's accumulated demand against the target.

    The running monthly sum is updated incrementally; total cost is linear in
    the sequence length.
    """
    idx = np.fromiter(
        (dataset.index_of(cid) for cid in seq.ids), dtype=np.intp, count=len(seq.ids)
    )
    if idx.size and not np.all(dataset.nonzero_mask[idx]):
        bad = seq.ids[int(np.flatnonzero(~dataset.nonzero_mask[idx])[0])]
        raise DataError(f"customer {bad!r} has zero demand and cannot be accumulated")
    distances = kernels.accumulate_distance_curve(dataset.raw_demand[idx], target.values)
    return DistanceCurve(
        steps=np.arange(1, idx.size + 1), distance=distances, strategy=seq.strategy
    )


def baseline_band(
    dataset: CustomerDataset,
    target: TargetProfile,
    n: int,
    reps: int = 100,
    seed: int = 0,
    threads: int = 1,
) -> BaselineCurve:
    """Median and quartile curves over ``reps`` independent random sequences.

    Repetition r uses the child seed ``SeedSequence([seed, r])``; repetitions
    are independent and may run on a thread pool, with results merged by
    repetition index so the outcome is order-insensitive.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")

    def one(rep: int) -> np.ndarray:
        seq = random_sequence(dataset, n, np.random.SeedSequence([seed, rep]))
        return accumulate_curve(seq, dataset, target).distance

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curves = list(pool.map(one, range(reps)))
    else:
        curves = [one(rep) for rep in range(reps)]
    stack = np.vstack(curves)
    q1, median, q3 = np.quantile(stack, [0.25, 0.5, 0.75], axis=0)
    return BaselineCurve(
        steps=np.arange(1, n + 1), median=median, q1=q1, q3=q3, repetitions=reps
    )


def reduction_curve(
    strategy: DistanceCurve, baseline: BaselineCurve, checkpoints: Sequence[int]
) -> list[tuple[int, float]]:
    """Relative reduction versus the baseline median at each checkpoint."""
    out = []
    for n in checkpoints:
        b = baseline.median_at(n)
        if b == 0:
            raise DataError(f"baseline median is zero at step {n}; reduction is undefined")
        out.append((int(n), (b - strategy.at(n)) / b))
    return out


# -- CSV exports --------------------------------------------------------------


def write_curve(curve: DistanceCurve, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("step", "distance"))
        for step, d in zip(curve.steps, curve.distance):
            writer.writerow((int(step), format_float(d)))


def write_baseline(curve: BaselineCurve, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("step", "median", "q1", "q3"))
        for step, m, a, b in zip(curve.steps, curve.median, curve.q1, curve.q3):
            writer.writerow((int(step), format_float(m), format_float(a), format_float(b)))


def write_reduction(rows: Sequence[tuple[int, float]], path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("n", "reduction"))
        for n, r in rows:
            writer.writerow((int(n), format_float(r)))
