import random
from dataclasses import replace
from fractions import Fraction

import pytest

from mapindep.errors import CapacityError, InfeasibleQueryError, InvalidQueryError
from mapindep.independence import (
    maximum_map_independence,
    quantify,
    relevance_partition,
    strong_map_independence,
    threshold_map_independence,
    weak_map_independence,
)
from mapindep.model import Cpt, Network, QueryPartition, Variable, d_separated
from netgen import random_binary_network, random_partition
from oracles import brute_strong

TF = ("T", "F")


def part(evidence, hypothesis, focus):
    return QueryPartition(evidence=evidence, hypothesis=hypothesis, focus=focus)


def gated_network():
    # R is a deterministic copy of E, so observing E=T makes R=F impossible.
    return Network(
        "gated",
        (Variable("E", TF), Variable("R", TF), Variable("H", TF)),
        (
            Cpt("E", (), ((0.5, 0.5),)),
            Cpt("R", ("E",), ((1.0, 0.0), (0.0, 1.0))),
            Cpt("H", (), ((0.7, 0.3),)),
        ),
    )


# ---------------------------------------------------------------------------
# strong


def test_strong_fig1b_singletons(fig1b):
    assert strong_map_independence(fig1b, part({"C": "T"}, ("A",), ("B",))).verdict is True
    assert strong_map_independence(fig1b, part({"C": "T"}, ("A",), ("E",))).verdict is True


def test_strong_fig1b_pair_interaction(fig1b):
    report = strong_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")))
    assert report.verdict is False
    assert report.counterexample == {"B": "T", "E": "T"}
    assert report.witness == {"A": "F"}
    assert report.ties_encountered is False
    assert report.warning is None


def test_strong_fig1a_dseparated_focus(fig1a):
    assert strong_map_independence(fig1a, part({"C": "T"}, ("A",), ("D",))).verdict is True


def test_strong_counterexample_present_iff_false(fig1b):
    true_report = strong_map_independence(fig1b, part({"C": "T"}, ("A",), ("B",)))
    assert true_report.counterexample is None
    false_report = strong_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")))
    assert false_report.counterexample is not None


def test_strong_requires_focus(fig1b):
    with pytest.raises(InvalidQueryError):
        strong_map_independence(fig1b, part({"C": "T"}, ("A",), ()))


def test_strong_guard(fig1b):
    with pytest.raises(CapacityError):
        strong_map_independence(fig1b, part({}, ("A",), ("B", "C", "E")), guard=7)


def test_strong_zero_probability_focus_assignments_skipped():
    net = gated_network()
    report = strong_map_independence(net, part({"E": "T"}, ("H",), ("R",)))
    assert report.verdict is True
    assert report.skipped == ({"R": "F"},)


def test_strong_strict_zeros_fails_instead():
    net = gated_network()
    with pytest.raises(InfeasibleQueryError):
        strong_map_independence(net, part({"E": "T"}, ("H",), ("R",)), strict_zeros=True)


def test_strong_infeasible_evidence():
    net = Network(
        "gated_plus",
        (Variable("E", TF), Variable("R", TF), Variable("H", TF), Variable("X", TF)),
        (
            Cpt("E", (), ((0.5, 0.5),)),
            Cpt("R", ("E",), ((1.0, 0.0), (0.0, 1.0))),
            Cpt("H", (), ((0.7, 0.3),)),
            Cpt("X", (), ((0.4, 0.6),)),
        ),
    )
    with pytest.raises(InfeasibleQueryError):
        strong_map_independence(net, part({"E": "T", "R": "F"}, ("H",), ("X",)))


def test_strong_table_and_cap(fig1b):
    report = strong_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")), table_limit=10)
    assert len(report.per_assignment) == 4
    first = report.per_assignment[0]
    assert first.assignment == {"B": "T", "E": "T"}
    assert first.map_assignment == {"A": "T"}
    # Pr(A=F, B=T, E=T, C=T) = 0.5 * 0.6 * 0.4 * 0.4
    assert first.h_star_joint == pytest.approx(0.048, abs=1e-12)
    capped = strong_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")), table_limit=2)
    assert len(capped.per_assignment) == 2


def test_strong_matches_brute_definition_check():
    rng = random.Random(101)
    for _ in range(25):
        net = random_binary_network(rng, rng.randint(4, 9))
        partition = random_partition(rng, net, n_focus=rng.randint(1, 3))
        report = strong_map_independence(net, partition)
        hyp, evidence, focus = (
            report.witness.keys(),
            partition.evidence,
            tuple(sorted(partition.focus, key=net.declaration_index)),
        )
        verdict, counterexample = brute_strong(net, tuple(hyp), dict(evidence), focus)
        assert report.verdict == verdict
        assert report.counterexample == counterexample


# ---------------------------------------------------------------------------
# weak


def test_weak_fig1b_pair(fig1b):
    report = weak_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")))
    assert report.verdict is True
    assert report.counterexample is None


def test_weak_fig1a_default_value_flip(fig1a):
    report = weak_map_independence(fig1a, part({"C": "T"}, ("A",), ("B",)))
    assert report.verdict is False
    assert report.counterexample == {"B": "T"}


def test_weak_fig1a_dseparated(fig1a):
    assert weak_map_independence(fig1a, part({"C": "T"}, ("A",), ("D",))).verdict is True


def test_weak_at_most_linear_in_focus_values(fig1b):
    # Table rows bound the sweep: two per binary focus variable.
    report = weak_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")), table_limit=100)
    assert len(report.per_assignment) == 4


def test_weak_full_sweep_keeps_first_counterexample():
    # Both focus variables flip the MAP; with a table requested the sweep
    # covers everything but must still report the canonical-first failure.
    net = Network(
        "double_flip",
        (Variable("R1", TF), Variable("R2", TF), Variable("H", TF)),
        (
            Cpt("R1", (), ((0.5, 0.5),)),
            Cpt("R2", (), ((0.5, 0.5),)),
            Cpt("H", ("R1", "R2"), ((0.9, 0.1), (0.4, 0.6), (0.4, 0.6), (0.1, 0.9))),
        ),
    )
    short = weak_map_independence(net, part({}, ("H",), ("R1", "R2")))
    full = weak_map_independence(net, part({}, ("H",), ("R1", "R2")), table_limit=100)
    assert short.verdict is full.verdict is False
    assert short.counterexample == full.counterexample == {"R1": "T"}
    assert len(full.per_assignment) == 4


def test_singleton_collapse_on_named_fixtures(fig1a, fig1b):
    for net, focus in ((fig1a, "B"), (fig1a, "D"), (fig1b, "B"), (fig1b, "E")):
        p = part({"C": "T"}, ("A",), (focus,))
        assert strong_map_independence(net, p).verdict == weak_map_independence(net, p).verdict


# ---------------------------------------------------------------------------
# maximum


def test_maximum_fig1b(fig1b):
    report = maximum_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")), 1)
    assert report.verdict is True
    assert report.subset == ("B",)
    report = maximum_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")), 2)
    assert report.verdict is False
    assert report.subset is None


def test_maximum_fig1a_picks_qualifying_singleton(fig1a):
    report = maximum_map_independence(fig1a, part({"C": "T"}, ("A",), ("B", "D")), 1)
    assert report.verdict is True
    assert report.subset == ("D",)


def test_maximum_greedy_extension_grows_to_maximal():
    # Three independent root variables never move H's MAP, so k=1 extends to all three.
    rng = random.Random(7)
    net = Network(
        "pool",
        (Variable("H", TF), Variable("X", TF), Variable("Y", TF), Variable("Z", TF)),
        (
            Cpt("H", (), ((0.8, 0.2),)),
            Cpt("X", (), ((0.5, 0.5),)),
            Cpt("Y", (), ((0.3, 0.7),)),
            Cpt("Z", (), ((0.6, 0.4),)),
        ),
    )
    report = maximum_map_independence(net, part({}, ("H",), ("X", "Y", "Z")), 1)
    assert report.verdict is True
    assert report.subset == ("X", "Y", "Z")


def test_maximum_k_bounds(fig1b):
    with pytest.raises(InvalidQueryError):
        maximum_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")), 0)
    with pytest.raises(InvalidQueryError):
        maximum_map_independence(fig1b, part({"C": "T"}, ("A",), ("B", "E")), 3)


def test_maximum_combinatorial_guard():
    rng = random.Random(13)
    net = random_binary_network(rng, 12)
    names = list(net.names)
    p = part({}, (names[0],), tuple(names[1:11]))
    with pytest.raises(CapacityError):
        maximum_map_independence(net, p, 5, guard=100)


# ---------------------------------------------------------------------------
# threshold


def test_threshold_fn_ter(fn_ter):
    p = part({}, ("H",), ("R",))
    report = threshold_map_independence(fn_ter, {"H": "h1"}, p, 0.22)
    assert report.verdict is False
    assert report.counterexample == {"R": "F"}
    assert report.min_joint == pytest.approx(0.22, abs=1e-15)
    assert threshold_map_independence(fn_ter, {"H": "h1"}, p, 0.1875).verdict is True


def test_threshold_zero_s_with_positive_joints(fn_bin):
    p = part({}, ("H",), ("R",))
    assert threshold_map_independence(fn_bin, {"H": "T"}, p, 0.0).verdict is True


def test_threshold_suitable_s_separates_claims(fn_bin):
    # Pr(H, r) is 0.255 for the true per-value MAP and 0.245 for the other
    # assignment, so any s in between tells them apart.
    p = part({}, ("H",), ("R",))
    s = Fraction(1, 4)
    assert threshold_map_independence(fn_bin, {"H": "T"}, p, s).verdict is True
    assert threshold_map_independence(fn_bin, {"H": "F"}, p, s).verdict is False


def test_threshold_validates_h_star_and_s(fn_ter):
    p = part({}, ("H",), ("R",))
    with pytest.raises(InvalidQueryError):
        threshold_map_independence(fn_ter, {"R": "T"}, p, 0.1)
    with pytest.raises(InvalidQueryError):
        threshold_map_independence(fn_ter, {"H": "h1"}, p, 1.0)


def test_threshold_table(fn_ter):
    p = part({}, ("H",), ("R",))
    report = threshold_map_independence(fn_ter, {"H": "h1"}, p, 0.1, table_limit=10)
    assert [row.h_star_joint for row in report.per_assignment] == [
        pytest.approx(0.28, abs=1e-15),
        pytest.approx(0.22, abs=1e-15),
    ]
    assert all(row.map_assignment is None for row in report.per_assignment)


# ---------------------------------------------------------------------------
# quantification


def test_quantify_fig1b(fig1b):
    metrics = quantify(fig1b, part({"C": "T"}, ("A",), ("B", "E")))
    assert metrics.proportion == pytest.approx(0.75, abs=1e-9)
    assert metrics.mass == pytest.approx(0.76, abs=1e-9)
    assert metrics.mean_hamming == pytest.approx(0.25, abs=1e-9)


def test_quantify_strongly_independent_focus(fig1a):
    metrics = quantify(fig1a, part({"C": "T"}, ("A",), ("D",)))
    assert metrics.mass == pytest.approx(1.0, abs=1e-9)
    assert metrics.proportion == 1.0
    assert metrics.mean_hamming == 0.0


def test_quantify_consistent_with_verdict():
    rng = random.Random(211)
    for _ in range(20):
        net = random_binary_network(rng, rng.randint(4, 9))
        partition = random_partition(rng, net, n_focus=rng.randint(1, 3))
        verdict = strong_map_independence(net, partition).verdict
        metrics = quantify(net, partition)
        assert verdict == (metrics.proportion == 1.0)
        assert verdict == (abs(metrics.mass - 1.0) <= 1e-9)
        assert verdict == (metrics.mean_hamming == 0.0)


def test_quantify_with_skipped_assignments_stays_consistent():
    net = gated_network()
    metrics = quantify(net, part({"E": "T"}, ("H",), ("R",)))
    assert metrics.proportion == 1.0
    assert metrics.mass == pytest.approx(1.0, abs=1e-9)
    assert metrics.mean_hamming == 0.0


# ---------------------------------------------------------------------------
# relevance partition


def test_relevance_fig1a(fig1a):
    parts = relevance_partition(fig1a, {"C": "T"}, ("A",), ("B", "D"))
    assert parts.relevant == ("B",)
    assert parts.irrelevant == ("D",)
    assert parts.justification["B"].map_independent is False
    assert parts.justification["B"].counterexample == {"B": "T"}
    assert parts.justification["D"].map_independent is True


def test_relevance_fig1b(fig1b):
    parts = relevance_partition(fig1b, {"C": "T"}, ("A",), ("B", "E"))
    assert parts.relevant == ()
    assert parts.irrelevant == ("B", "E")


def test_relevance_empty_candidates(fig1b):
    parts = relevance_partition(fig1b, {"C": "T"}, ("A",), ())
    assert parts.relevant == ()
    assert parts.irrelevant == ()


def test_relevance_modes_coincide(fig1a):
    weak = relevance_partition(fig1a, {"C": "T"}, ("A",), ("B", "D"), mode="weak")
    strong = relevance_partition(fig1a, {"C": "T"}, ("A",), ("B", "D"), mode="strong-singleton")
    assert weak == strong
    with pytest.raises(InvalidQueryError):
        relevance_partition(fig1a, {"C": "T"}, ("A",), ("B",), mode="pairwise")


# ---------------------------------------------------------------------------
# structural properties


def test_strong_implies_weak():
    rng = random.Random(307)
    informative = 0
    for _ in range(40):
        net = random_binary_network(rng, rng.randint(4, 8), damp=0.05)
        partition = random_partition(rng, net, n_focus=rng.randint(2, 3))
        strong = strong_map_independence(net, partition)
        if strong.verdict and not strong.ties_encountered:
            assert weak_map_independence(net, partition).verdict is True
            informative += 1
    assert informative >= 15


def test_singleton_collapse_random():
    rng = random.Random(311)
    for _ in range(30):
        net = random_binary_network(rng, rng.randint(3, 8))
        partition = random_partition(rng, net, n_focus=1)
        assert (
            strong_map_independence(net, partition).verdict
            == weak_map_independence(net, partition).verdict
        )


def test_downward_closure_tie_free():
    rng = random.Random(313)
    informative = 0
    for _ in range(30):
        net = random_binary_network(rng, rng.randint(5, 8), damp=0.05)
        partition = random_partition(rng, net, n_focus=3)
        report = strong_map_independence(net, partition)
        if not report.verdict or report.ties_encountered:
            continue
        informative += 1
        focus = partition.focus
        for drop in range(3):
            subset = tuple(v for i, v in enumerate(focus) if i != drop)
            sub = QueryPartition(
                evidence=partition.evidence, hypothesis=partition.hypothesis, focus=subset
            )
            assert strong_map_independence(net, sub).verdict is True
    assert informative >= 10


def test_dseparation_implies_strong_independence():
    rng = random.Random(331)
    informative = 0
    for _ in range(60):
        net = random_binary_network(rng, rng.randint(4, 9))
        partition = random_partition(rng, net, n_focus=rng.randint(1, 2))
        hyp = set(partition.hypothesis)
        if not d_separated(net, hyp, set(partition.focus), set(partition.evidence)):
            continue
        report = strong_map_independence(net, partition)
        if report.ties_encountered:
            continue
        assert report.verdict is True
        informative += 1
    assert informative >= 10


def test_reports_deterministic_and_parallel_identical(fig1b):
    p = part({"C": "T"}, ("A",), ("B", "E"))
    kwargs = dict(short_circuit=False, with_metrics=True, table_limit=8)
    a = strong_map_independence(fig1b, p, **kwargs)
    b = strong_map_independence(fig1b, p, **kwargs)
    c = strong_map_independence(fig1b, p, workers=4, **kwargs)
    assert replace(a, elapsed=0.0) == replace(b, elapsed=0.0) == replace(c, elapsed=0.0)


def test_parallel_counterexample_is_canonical_first():
    rng = random.Random(401)
    for _ in range(15):
        net = random_binary_network(rng, rng.randint(5, 9))
        partition = random_partition(rng, net, n_focus=3)
        seq = strong_map_independence(net, partition)
        par = strong_map_independence(net, partition, workers=4)
        assert seq.verdict == par.verdict
        assert seq.counterexample == par.counterexample
