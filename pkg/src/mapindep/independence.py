"""MAP-independence deciders, the threshold variant, and quantification.

A hypothesis H is MAP-independent from a focus set R given evidence e when
the most probable joint value assignment to H stays the same no matter
which value R would have been observed to take.  The strong decider sweeps
every joint assignment to R; the weak decider checks each focus variable
on its own; the maximum search looks for a largest subset of a candidate
pool from which H is strongly independent.

All sweeps anchor to the reference explanation h* = argmax_H Pr(H, e)
(with R marginalized out), enumerate Omega(R) in canonical row-major
order, and report the first differing assignment as the counterexample.
Zero-probability (r, e) combinations cannot be observed, so by default
they are skipped and listed in the report; ``strict_zeros`` turns them
into an InfeasibleQueryError instead.

Sweeps may be split across worker threads.  Workers report per-rank
results and the coordinator folds them back in rank order, so verdicts,
counterexamples and quantification sums are byte-identical to a
sequential run.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping

from .errors import CapacityError, InfeasibleQueryError, InvalidQueryError
from .inference import (
    DEFAULT_GUARD,
    DEFAULT_TIE_TOL,
    candidate_joints,
    map_solve,
    marginal,
)
from .model import (
    Assignment,
    Network,
    QueryPartition,
    assignment_at,
    assignment_count,
    assignment_rank,
    canonical_vars,
    check_assignment,
    resolve_partition,
)

TIE_WARNING = "tie-ambiguous"


@dataclass(frozen=True)
class Quantification:
    """How much of Omega(R) leaves the explanation untouched.

    ``mass`` sums Pr(r | e) over the unchanged assignments, ``proportion``
    counts them against |Omega(R)|, and ``mean_hamming`` averages the
    number of hypothesis variables whose MAP value flips (unweighted over
    Omega(R)).
    """

    mass: float
    proportion: float
    mean_hamming: float


@dataclass(frozen=True)
class SweepRow:
    """One per-assignment table entry: r, its MAP (if computed), Pr(h*, r, e)."""

    assignment: Assignment
    map_assignment: Assignment | None
    h_star_joint: float


@dataclass(frozen=True)
class IndependenceReport:
    mode: str
    verdict: bool
    witness: Assignment
    counterexample: Assignment | None = None
    subset: tuple[str, ...] | None = None
    min_joint: float | None = None
    per_assignment: tuple[SweepRow, ...] | None = None
    skipped: tuple[Assignment, ...] = ()
    ties_encountered: bool = False
    warning: str | None = None
    metrics: Quantification | None = None
    elapsed: float = 0.0


@dataclass(frozen=True)
class SingletonFinding:
    map_independent: bool
    counterexample: Assignment | None


@dataclass(frozen=True)
class RelevancePartition:
    """Candidates split into explanation-relevant and irrelevant variables."""

    relevant: tuple[str, ...]
    irrelevant: tuple[str, ...]
    justification: dict[str, SingletonFinding]


# ---------------------------------------------------------------------------
# the shared sweep machinery

_ZERO = -1  # argmax marker for a zero-probability (r, e) combination


@dataclass(frozen=True)
class _Rank:
    rank: int
    argmax: int          # candidate rank of the per-r MAP, or _ZERO
    tie: bool
    h_star_joint: float  # Pr(h*, r, e)
    total: float         # Pr(r, e)


def _scan_chunk(
    net: Network,
    hypothesis: tuple[str, ...],
    evidence: Assignment,
    focus: tuple[str, ...],
    h_star_idx: int,
    lo: int,
    hi: int,
    tie_tol: float,
    stop_early: bool,
    strict_zeros: bool,
) -> list[_Rank]:
    """Evaluate ranks [lo, hi); may stop at a terminal event within the chunk."""
    out: list[_Rank] = []
    for rank in range(lo, hi):
        context = dict(evidence)
        context.update(assignment_at(net, focus, rank))
        joints = candidate_joints(net, hypothesis, context)
        total = sum(joints)
        if total == 0.0:
            out.append(_Rank(rank, _ZERO, False, 0.0, 0.0))
            if strict_zeros:
                break
            continue
        best = 0
        for i, p in enumerate(joints):
            if p > joints[best]:
                best = i
        tie = any(i != best and joints[best] - p <= tie_tol for i, p in enumerate(joints))
        out.append(_Rank(rank, best, tie, joints[h_star_idx], total))
        if stop_early and best != h_star_idx:
            break
    return out


def _scan(
    net: Network,
    hypothesis: tuple[str, ...],
    evidence: Assignment,
    focus: tuple[str, ...],
    h_star_idx: int,
    total_ranks: int,
    tie_tol: float,
    stop_early: bool,
    strict_zeros: bool,
    workers: int,
) -> Iterator[_Rank]:
    if workers <= 1 or total_ranks <= 1:
        # A single chunk already stops at terminal events, so this IS the
        # plain sequential loop.
        return iter(_scan_chunk(
            net, hypothesis, evidence, focus, h_star_idx,
            0, total_ranks, tie_tol, stop_early, strict_zeros,
        ))

    bounds = [total_ranks * i // workers for i in range(workers + 1)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(
                _scan_chunk,
                net, hypothesis, evidence, focus, h_star_idx,
                bounds[i], bounds[i + 1], tie_tol, stop_early, strict_zeros,
            )
            for i in range(workers)
            if bounds[i] < bounds[i + 1]
        ]
        chunks = [f.result() for f in futures]
    return iter([rec for chunk in chunks for rec in chunk])


@dataclass
class _Fold:
    verdict: bool = True
    counterexample: Assignment | None = None
    ties: bool = False
    skipped: list[Assignment] = field(default_factory=list)
    rows: list[SweepRow] = field(default_factory=list)
    min_joint: float | None = None
    unchanged: int = 0
    mass_num: float = 0.0
    hamming_sum: int = 0


def _hamming(net: Network, hypothesis: tuple[str, ...], a_idx: int, b_idx: int) -> int:
    a = assignment_at(net, hypothesis, a_idx)
    b = assignment_at(net, hypothesis, b_idx)
    return sum(1 for v in hypothesis if a[v] != b[v])


def _fold_records(
    net: Network,
    hypothesis: tuple[str, ...],
    focus: tuple[str, ...],
    h_star_idx: int,
    records: Iterable[_Rank],
    table_limit: int | None,
    strict_zeros: bool,
    stop_early: bool,
) -> _Fold:
    fold = _Fold()
    for rec in records:
        r = assignment_at(net, focus, rec.rank)
        if rec.argmax == _ZERO:
            if strict_zeros:
                raise InfeasibleQueryError(
                    f"conditioning assignment {r!r} has probability zero under the evidence"
                )
            fold.skipped.append(r)
            fold.unchanged += 1  # vacuously: an impossible r cannot move the MAP
            continue
        fold.ties = fold.ties or rec.tie
        if fold.min_joint is None or rec.h_star_joint < fold.min_joint:
            fold.min_joint = rec.h_star_joint
        changed = rec.argmax != h_star_idx
        if changed and fold.counterexample is None:
            fold.counterexample = r
            fold.verdict = False
        if not changed:
            fold.unchanged += 1
            fold.mass_num += rec.total
        else:
            fold.hamming_sum += _hamming(net, hypothesis, rec.argmax, h_star_idx)
        if table_limit is not None and len(fold.rows) < table_limit:
            fold.rows.append(SweepRow(r, assignment_at(net, hypothesis, rec.argmax), rec.h_star_joint))
        if stop_early and changed:
            break
    return fold


def _guarded_count(net: Network, focus: tuple[str, ...], guard: int) -> int:
    count = assignment_count(net, focus)
    if count > guard:
        raise CapacityError(f"|Omega(R)| = {count} exceeds guard {guard}")
    return count


def _sweep_report(
    net: Network,
    mode: str,
    hypothesis: tuple[str, ...],
    evidence: Assignment,
    focus: tuple[str, ...],
    *,
    tie_tol: float,
    guard: int,
    workers: int,
    table_limit: int | None,
    strict_zeros: bool,
    short_circuit: bool,
    with_metrics: bool,
    started: float,
) -> IndependenceReport:
    p_e = marginal(net, evidence)
    if p_e == 0.0:
        raise InfeasibleQueryError(f"evidence {evidence!r} has probability zero")
    reference = map_solve(net, hypothesis, evidence, tie_tol=tie_tol, guard=guard)
    h_star_idx = assignment_rank(net, hypothesis, reference.assignment)
    total = _guarded_count(net, focus, guard)

    stop_early = short_circuit and not with_metrics and table_limit is None
    records = _scan(
        net, hypothesis, evidence, focus, h_star_idx, total,
        tie_tol, stop_early, strict_zeros, workers,
    )
    fold = _fold_records(
        net, hypothesis, focus, h_star_idx, records, table_limit, strict_zeros, stop_early,
    )

    metrics = None
    if with_metrics:
        metrics = Quantification(
            mass=fold.mass_num / p_e,
            proportion=fold.unchanged / total,
            mean_hamming=fold.hamming_sum / total,
        )
    ties = reference.tie or fold.ties
    return IndependenceReport(
        mode=mode,
        verdict=fold.verdict,
        witness=reference.assignment,
        counterexample=fold.counterexample,
        min_joint=fold.min_joint,
        per_assignment=tuple(fold.rows) if table_limit is not None else None,
        skipped=tuple(fold.skipped),
        ties_encountered=ties,
        warning=TIE_WARNING if ties else None,
        metrics=metrics,
        elapsed=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# public operations


def strong_map_independence(
    net: Network,
    partition: QueryPartition,
    *,
    tie_tol: float = DEFAULT_TIE_TOL,
    guard: int = DEFAULT_GUARD,
    workers: int = 1,
    table_limit: int | None = None,
    strict_zeros: bool = False,
    short_circuit: bool = True,
    with_metrics: bool = False,
) -> IndependenceReport:
    """Is the MAP of the hypothesis the same for every joint assignment to the focus?

    Sweeps Omega(R) in canonical order comparing each conditional MAP to the
    reference explanation; stops at the first counterexample unless a table
    or metrics were requested.
    """
    started = time.perf_counter()
    hypothesis, evidence, focus = resolve_partition(net, partition)
    if not focus:
        raise InvalidQueryError("focus set must be non-empty")
    return _sweep_report(
        net, "strong", hypothesis, evidence, focus,
        tie_tol=tie_tol, guard=guard, workers=workers, table_limit=table_limit,
        strict_zeros=strict_zeros, short_circuit=short_circuit,
        with_metrics=with_metrics, started=started,
    )


def weak_map_independence(
    net: Network,
    partition: QueryPartition,
    *,
    tie_tol: float = DEFAULT_TIE_TOL,
    guard: int = DEFAULT_GUARD,
    workers: int = 1,
    table_limit: int | None = None,
    strict_zeros: bool = False,
    short_circuit: bool = True,
) -> IndependenceReport:
    """Strong MAP-independence checked per focus variable, one at a time.

    At most the sum of the focus cardinalities MAP computations; interaction
    effects between focus variables are deliberately not visible here.
    """
    started = time.perf_counter()
    hypothesis, evidence, focus = resolve_partition(net, partition)
    if not focus:
        raise InvalidQueryError("focus set must be non-empty")
    p_e = marginal(net, evidence)
    if p_e == 0.0:
        raise InfeasibleQueryError(f"evidence {evidence!r} has probability zero")
    reference = map_solve(net, hypothesis, evidence, tie_tol=tie_tol, guard=guard)
    h_star_idx = assignment_rank(net, hypothesis, reference.assignment)

    verdict = True
    counterexample: Assignment | None = None
    ties = reference.tie
    skipped: list[Assignment] = []
    rows: list[SweepRow] = []
    for var in focus:
        single = (var,)
        total = _guarded_count(net, single, guard)
        stop_early = short_circuit and table_limit is None
        records = _scan(
            net, hypothesis, evidence, single, h_star_idx, total,
            tie_tol, stop_early, strict_zeros, workers,
        )
        fold = _fold_records(
            net, hypothesis, single, h_star_idx, records, table_limit, strict_zeros, stop_early,
        )
        ties = ties or fold.ties
        skipped.extend(fold.skipped)
        if table_limit is not None:
            rows.extend(fold.rows[: max(0, table_limit - len(rows))])
        if not fold.verdict:
            if verdict:  # keep the canonical-first counterexample
                counterexample = fold.counterexample
            verdict = False
            if short_circuit and table_limit is None:
                break
    return IndependenceReport(
        mode="weak",
        verdict=verdict,
        witness=reference.assignment,
        counterexample=counterexample,
        per_assignment=tuple(rows) if table_limit is not None else None,
        skipped=tuple(skipped),
        ties_encountered=ties,
        warning=TIE_WARNING if ties else None,
        elapsed=time.perf_counter() - started,
    )


def maximum_map_independence(
    net: Network,
    partition: QueryPartition,
    k: int,
    *,
    tie_tol: float = DEFAULT_TIE_TOL,
    guard: int = DEFAULT_GUARD,
    workers: int = 1,
    strict_zeros: bool = False,
    prune: bool = True,
) -> IndependenceReport:
    """Find a subset of the candidate pool, of size at least ``k``, from which
    the hypothesis is strongly MAP-independent.

    Size-k subsets are tried in canonical (lexicographic) order; the first
    hit is greedily extended to a maximal qualifying set.  Known-failing
    subsets prune their supersets.  Both the extension and the pruning rely
    on downward closure, which ties can break, so they are disabled as soon
    as a tie is encountered.
    """
    started = time.perf_counter()
    hypothesis, evidence, pool = resolve_partition(net, partition)
    if not pool:
        raise InvalidQueryError("candidate pool must be non-empty")
    if not 1 <= k <= len(pool):
        raise InvalidQueryError(f"k must be between 1 and {len(pool)}, got {k}")
    if math.comb(len(pool), k) > guard:
        raise CapacityError(f"C({len(pool)}, {k}) exceeds guard {guard}")
    p_e = marginal(net, evidence)
    if p_e == 0.0:
        raise InfeasibleQueryError(f"evidence {evidence!r} has probability zero")
    reference = map_solve(net, hypothesis, evidence, tie_tol=tie_tol, guard=guard)
    h_star_idx = assignment_rank(net, hypothesis, reference.assignment)
    ties = reference.tie

    failing: list[frozenset[str]] = []

    def pruned(subset: tuple[str, ...]) -> bool:
        candidate = set(subset)
        return any(f <= candidate for f in failing)

    def independent(subset: tuple[str, ...]) -> bool:
        nonlocal ties
        total = _guarded_count(net, subset, guard)
        records = _scan(
            net, hypothesis, evidence, subset, h_star_idx, total,
            tie_tol, True, strict_zeros, workers,
        )
        fold = _fold_records(net, hypothesis, subset, h_star_idx, records, None, strict_zeros, True)
        ties = ties or fold.ties
        if not fold.verdict:
            failing.append(frozenset(subset))
        return fold.verdict

    best: tuple[str, ...] | None = None
    for subset in combinations(pool, k):
        if prune and not ties and pruned(subset):
            continue
        if independent(subset):
            best = subset
            break

    if best is not None and not ties:
        for var in pool:
            if ties:
                break  # downward closure no longer trustworthy
            if var in best:
                continue
            extended = canonical_vars(net, (*best, var))
            if prune and pruned(extended):
                continue
            if independent(extended):
                best = extended

    return IndependenceReport(
        mode="maximum",
        verdict=best is not None,
        witness=reference.assignment,
        subset=best,
        ties_encountered=ties,
        warning=TIE_WARNING if ties else None,
        elapsed=time.perf_counter() - started,
    )


def threshold_map_independence(
    net: Network,
    h_star: Mapping[str, str],
    partition: QueryPartition,
    s: float | Fraction,
    *,
    guard: int = DEFAULT_GUARD,
    workers: int = 1,
    table_limit: int | None = None,
) -> IndependenceReport:
    """Does Pr(h_star, r, e) strictly exceed ``s`` for every r over the focus?

    The supplied ``h_star`` is taken at face value (it need not be the true
    MAP).  The sweep always covers all of Omega(R) so the reported minimum
    joint probability is exact; zero-probability assignments simply fail
    the strict comparison.
    """
    started = time.perf_counter()
    hypothesis, evidence, focus = resolve_partition(net, partition)
    if not focus:
        raise InvalidQueryError("focus set must be non-empty")
    if set(h_star) != set(hypothesis):
        raise InvalidQueryError("h_star must assign exactly the hypothesis variables")
    check_assignment(net, h_star)
    if not 0 <= s < 1:
        raise InvalidQueryError(f"threshold s must be in [0, 1), got {s}")
    if evidence and marginal(net, evidence) == 0.0:
        raise InfeasibleQueryError(f"evidence {evidence!r} has probability zero")

    total = _guarded_count(net, focus, guard)

    def chunk(lo: int, hi: int) -> list[tuple[int, float]]:
        out = []
        for rank in range(lo, hi):
            context = dict(evidence)
            context.update(assignment_at(net, focus, rank))
            context.update(h_star)
            out.append((rank, marginal(net, context)))
        return out

    if workers <= 1 or total <= 1:
        pairs = chunk(0, total)
    else:
        bounds = [total * i // workers for i in range(workers + 1)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(chunk, bounds[i], bounds[i + 1])
                for i in range(workers)
                if bounds[i] < bounds[i + 1]
            ]
            pairs = [p for f in futures for p in f.result()]

    verdict = True
    counterexample = None
    min_joint = None
    rows: list[SweepRow] = []
    for rank, p in pairs:
        if min_joint is None or p < min_joint:
            min_joint = p
        if verdict and not p > s:  # strict comparison, exact for Fraction thresholds
            verdict = False
            counterexample = assignment_at(net, focus, rank)
        if table_limit is not None and len(rows) < table_limit:
            rows.append(SweepRow(assignment_at(net, focus, rank), None, p))
    return IndependenceReport(
        mode="threshold",
        verdict=verdict,
        witness={v: h_star[v] for v in hypothesis},
        counterexample=counterexample,
        min_joint=min_joint,
        per_assignment=tuple(rows) if table_limit is not None else None,
        elapsed=time.perf_counter() - started,
    )


def quantify(
    net: Network,
    partition: QueryPartition,
    *,
    tie_tol: float = DEFAULT_TIE_TOL,
    guard: int = DEFAULT_GUARD,
    workers: int = 1,
    strict_zeros: bool = False,
) -> Quantification:
    """Quantified MAP-independence of the focus set: mass, proportion, mean Hamming."""
    report = strong_map_independence(
        net, partition,
        tie_tol=tie_tol, guard=guard, workers=workers,
        strict_zeros=strict_zeros, short_circuit=False, with_metrics=True,
    )
    return report.metrics


def relevance_partition(
    net: Network,
    evidence: Mapping[str, str],
    hypothesis,
    candidates,
    mode: str = "weak",
    *,
    tie_tol: float = DEFAULT_TIE_TOL,
    guard: int = DEFAULT_GUARD,
    strict_zeros: bool = False,
) -> RelevancePartition:
    """Split candidate variables by whether observing them could move the MAP.

    Each candidate is tested on its own; for singletons the weak and
    strong-singleton readings coincide, so ``mode`` only names the check.
    """
    if mode not in ("weak", "strong-singleton"):
        raise InvalidQueryError(f"unknown relevance mode {mode!r}")
    evidence = dict(evidence)
    hyp = canonical_vars(net, hypothesis)
    cands = canonical_vars(net, candidates)
    if not hyp:
        raise InvalidQueryError("hypothesis set must be non-empty")
    check_assignment(net, evidence)
    if set(cands) & set(hyp) or set(cands) & set(evidence):
        raise InvalidQueryError("candidates must be disjoint from hypothesis and evidence")
    if not cands:
        return RelevancePartition(relevant=(), irrelevant=(), justification={})

    p_e = marginal(net, evidence)
    if p_e == 0.0:
        raise InfeasibleQueryError(f"evidence {evidence!r} has probability zero")
    reference = map_solve(net, hyp, evidence, tie_tol=tie_tol, guard=guard)
    h_star_idx = assignment_rank(net, hyp, reference.assignment)

    relevant: list[str] = []
    irrelevant: list[str] = []
    justification: dict[str, SingletonFinding] = {}
    for var in cands:
        single = (var,)
        total = _guarded_count(net, single, guard)
        records = _scan(
            net, hyp, evidence, single, h_star_idx, total,
            tie_tol, True, strict_zeros, 1,
        )
        fold = _fold_records(net, hyp, single, h_star_idx, records, None, strict_zeros, True)
        justification[var] = SingletonFinding(fold.verdict, fold.counterexample)
        (irrelevant if fold.verdict else relevant).append(var)
    return RelevancePartition(tuple(relevant), tuple(irrelevant), justification)
