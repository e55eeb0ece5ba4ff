"""Exact inference: joint, marginal and posterior probabilities plus the MAP solver.

Two routes compute marginals.  The default is sum-product variable
elimination over dense factors with a min-fill elimination order; the
second enumerates completions of the query assignment and is kept as a
deliberately simple cross-check (``method="brute"``).  Both are exact up
to floating point and agree within 1e-9 on the network sizes this package
targets.

Arithmetic is plain double precision.  If a joint-probability product
underflows (all entries positive but the running product drops below
1e-300) the computation is retried in log space.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import CapacityError, InfeasibleQueryError, InvalidQueryError
from .model import (
    Assignment,
    Network,
    assignment_at,
    assignment_count,
    canonical_vars,
    check_assignment,
    min_fill_order,
)

DEFAULT_TIE_TOL = 1e-9
DEFAULT_GUARD = 1 << 20
UNDERFLOW_LIMIT = 1e-300


@dataclass(frozen=True, eq=False)
class Factor:
    """Dense non-negative table over ``scope``, row-major (last variable fastest)."""

    scope: tuple[str, ...]
    values: np.ndarray  # shape = per-variable cardinalities of scope


@dataclass(frozen=True)
class MapResult:
    """Outcome of a MAP query.

    ``joint_probability`` is Pr(h*, context) for the winning assignment and
    ``posterior`` the same value normalized by the context probability.
    ``tie`` flags another candidate within the tie tolerance of the maximum;
    ``runner_up_gap`` is the margin to the best losing candidate.
    """

    assignment: Assignment
    joint_probability: float
    posterior: float
    tie: bool
    runner_up_gap: float


# ---------------------------------------------------------------------------
# factor algebra

_factor_cache: "weakref.WeakKeyDictionary[Network, tuple[Factor, ...]]" = weakref.WeakKeyDictionary()


def _base_factors(net: Network) -> tuple[Factor, ...]:
    cached = _factor_cache.get(net)
    if cached is None:
        factors = []
        for v in net.variables:
            cpt = net.cpt(v.name)
            scope = (*cpt.parents, v.name)
            shape = tuple(net.cardinality(s) for s in scope)
            values = np.asarray(cpt.rows, dtype=float).reshape(shape)
            factors.append(Factor(scope, values))
        cached = tuple(factors)
        _factor_cache[net] = cached
    return cached


def _restrict(f: Factor, var: str, idx: int) -> Factor:
    axis = f.scope.index(var)
    return Factor(f.scope[:axis] + f.scope[axis + 1:], np.take(f.values, idx, axis=axis))


def _multiply(a: Factor, b: Factor) -> Factor:
    scope = a.scope + tuple(v for v in b.scope if v not in a.scope)
    return Factor(scope, _expand(a, scope) * _expand(b, scope))


def _expand(f: Factor, scope: tuple[str, ...]) -> np.ndarray:
    # Transpose the factor's axes into their order of appearance in ``scope``,
    # then insert size-1 axes for the missing variables so broadcasting aligns.
    positions = {v: i for i, v in enumerate(scope)}
    perm = sorted(range(len(f.scope)), key=lambda i: positions[f.scope[i]])
    values = f.values.transpose(perm)
    sizes = iter(values.shape)
    full_shape = tuple(next(sizes) if v in f.scope else 1 for v in scope)
    return values.reshape(full_shape)


def _sum_out(f: Factor, var: str) -> Factor:
    axis = f.scope.index(var)
    return Factor(f.scope[:axis] + f.scope[axis + 1:], f.values.sum(axis=axis))


def _ve_marginal(net: Network, partial: Mapping[str, str]) -> float:
    """Pr(partial) by sum-product elimination of every unassigned variable."""
    observed = {var: net.state_index(var, state) for var, state in partial.items()}
    factors: list[Factor] = []
    for f in _base_factors(net):
        for var in f.scope:
            if var in observed:
                f = _restrict(f, var, observed[var])
        factors.append(f)

    hidden = [v for v in net.names if v not in observed]
    adjacency: dict[str, set[str]] = {v: set() for v in hidden}
    for f in factors:
        for a in f.scope:
            for b in f.scope:
                if a != b:
                    adjacency[a].add(b)
    priority = {name: i for i, name in enumerate(net.names)}
    order, _ = min_fill_order(adjacency, priority)

    for var in order:
        bucket = [f for f in factors if var in f.scope]
        factors = [f for f in factors if var not in f.scope]
        product = bucket[0]
        for f in bucket[1:]:
            product = _multiply(product, f)
        factors.append(_sum_out(product, var))

    result = 1.0
    for f in factors:
        result *= float(f.values)
    return result


def _brute_marginal(net: Network, partial: Mapping[str, str]) -> float:
    """Pr(partial) by summing the chain-rule product over every completion."""
    free = tuple(v for v in net.names if v not in partial)
    total = 0.0
    count = assignment_count(net, free)
    for rank in range(count):
        full = dict(partial)
        full.update(assignment_at(net, free, rank))
        total += joint_probability(net, full)
    return total


# ---------------------------------------------------------------------------
# public operations


def joint_probability(net: Network, full: Mapping[str, str]) -> float:
    """Chain-rule product of CPT entries for a full assignment."""
    if len(full) != len(net.variables):
        missing = [v for v in net.names if v not in full]
        raise InvalidQueryError(f"joint_probability needs a full assignment; missing {missing}")
    check_assignment(net, full)
    product = 1.0
    entries: list[float] = []
    for v in net.variables:
        cpt = net.cpt(v.name)
        row = 0
        for p in cpt.parents:
            row = row * net.cardinality(p) + net.state_index(p, full[p])
        entry = cpt.rows[row][net.state_index(v.name, full[v.name])]
        if entry == 0.0:
            return 0.0
        entries.append(entry)
        product *= entry
    if product < UNDERFLOW_LIMIT:
        return math.exp(math.fsum(math.log(e) for e in entries))
    return product


def marginal(net: Network, partial: Mapping[str, str], method: str = "ve") -> float:
    """Pr(partial), the probability of a (possibly empty) partial assignment."""
    check_assignment(net, partial)
    if method == "ve":
        return _ve_marginal(net, partial)
    if method == "brute":
        return _brute_marginal(net, partial)
    raise InvalidQueryError(f"unknown inference method {method!r}")


def posterior(net: Network, target: Mapping[str, str], evidence: Mapping[str, str], method: str = "ve") -> float:
    """Pr(target | evidence).  Zero-probability evidence is an error, not a NaN."""
    if set(target) & set(evidence):
        raise InvalidQueryError("target and evidence must be disjoint")
    p_e = marginal(net, evidence, method)
    if p_e == 0.0:
        raise InfeasibleQueryError(f"evidence {dict(evidence)!r} has probability zero")
    return marginal(net, {**target, **evidence}, method) / p_e


def candidate_joints(
    net: Network,
    hypothesis: tuple[str, ...],
    context: Mapping[str, str],
    method: str = "ve",
) -> list[float]:
    """Pr(h, context) for every h over ``hypothesis``, in canonical rank order."""
    count = assignment_count(net, hypothesis)
    return [
        marginal(net, {**context, **assignment_at(net, hypothesis, rank)}, method)
        for rank in range(count)
    ]


def map_solve(
    net: Network,
    hypothesis,
    evidence: Mapping[str, str] | None = None,
    conditioning: Mapping[str, str] | None = None,
    *,
    method: str = "ve",
    tie_tol: float = DEFAULT_TIE_TOL,
    guard: int = DEFAULT_GUARD,
) -> MapResult:
    """Most probable joint value assignment to ``hypothesis`` given the context.

    Candidates are enumerated in canonical row-major order with one marginal
    per candidate; the first maximizer wins, and a second candidate within
    ``tie_tol`` of the maximum raises the ``tie`` flag.  The context is the
    union of evidence and any extra conditioning assignment.
    """
    evidence = dict(evidence or {})
    conditioning = dict(conditioning or {})
    hyp = canonical_vars(net, hypothesis)
    if not hyp:
        raise InvalidQueryError("hypothesis set must be non-empty")
    check_assignment(net, evidence)
    check_assignment(net, conditioning)
    if set(evidence) & set(conditioning):
        raise InvalidQueryError("evidence and conditioning must be disjoint")
    context = {**evidence, **conditioning}
    if set(hyp) & set(context):
        raise InvalidQueryError("hypothesis overlaps the conditioning context")

    count = assignment_count(net, hyp)
    if count > guard:
        raise CapacityError(f"|Omega(H)| = {count} exceeds guard {guard}")
    p_context = marginal(net, context, method)
    if p_context == 0.0:
        raise InfeasibleQueryError(f"conditioning context {context!r} has probability zero")

    joints = candidate_joints(net, hyp, context, method)
    best_idx = 0
    for i, p in enumerate(joints):
        if p > joints[best_idx]:
            best_idx = i
    best = joints[best_idx]
    tie = any(i != best_idx and best - p <= tie_tol for i, p in enumerate(joints))
    runner_up = max(p for i, p in enumerate(joints) if i != best_idx)
    return MapResult(
        assignment=assignment_at(net, hyp, best_idx),
        joint_probability=best,
        posterior=best / p_context,
        tie=tie,
        runner_up_gap=best - runner_up,
    )


def map_threshold(
    net: Network,
    h_star: Mapping[str, str],
    evidence: Mapping[str, str] | None = None,
    q: float | Fraction = 0.0,
    method: str = "ve",
) -> bool:
    """Whether Pr(h_star, evidence) strictly exceeds ``q``."""
    evidence = dict(evidence or {})
    if not h_star:
        raise InvalidQueryError("h_star must be non-empty")
    if set(h_star) & set(evidence):
        raise InvalidQueryError("h_star and evidence must be disjoint")
    check_assignment(net, h_star)
    check_assignment(net, evidence)
    if evidence and marginal(net, evidence, method) == 0.0:
        raise InfeasibleQueryError(f"evidence {evidence!r} has probability zero")
    return marginal(net, {**h_star, **evidence}, method) > q
