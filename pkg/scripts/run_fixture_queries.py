"""Run the headline queries against the committed fixture networks.

Reproduces the worked numbers the test suite pins: posteriors, the
strong/weak contrast on the four-node network, quantification, and the
threshold behaviour of the ternary footnote network.
"""

from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from mapindep import (  # noqa: E402
    QueryPartition,
    map_solve,
    posterior,
    quantify,
    strong_map_independence,
    threshold_map_independence,
    weak_map_independence,
)
from mapindep.cli import load_network  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")


def main() -> None:
    fig1a = load_network(os.path.join(FIXTURES, "fig1a.json"))
    fig1b = load_network(os.path.join(FIXTURES, "fig1b.json"))
    fn_ter = load_network(os.path.join(FIXTURES, "fn_ter.json"))

    print("== fig1b: posteriors under C=T ==")
    for extra in ({"B": "T"}, {"B": "F"}, {"E": "T"}, {"E": "F"}):
        evidence = {"C": "T", **extra}
        print(f"  Pr(A=T | {evidence}) = {posterior(fig1b, {'A': 'T'}, evidence):.4f}")

    print("\n== fig1b: MAP of A given C=T ==")
    result = map_solve(fig1b, ("A",), {"C": "T"})
    print(f"  h* = {result.assignment}, posterior {result.posterior:.4f}, tie={result.tie}")

    print("\n== fig1b: strong vs weak on {B, E} ==")
    partition = QueryPartition(evidence={"C": "T"}, hypothesis=("A",), focus=("B", "E"))
    strong = strong_map_independence(fig1b, partition)
    weak = weak_map_independence(fig1b, partition)
    print(f"  strong verdict: {strong.verdict}  counterexample: {strong.counterexample}")
    print(f"  weak verdict:   {weak.verdict}   (each variable alone cannot move the MAP)")
    metrics = quantify(fig1b, partition)
    print(f"  quantified: mass={metrics.mass:.4f} proportion={metrics.proportion:.4f} "
          f"mean_hamming={metrics.mean_hamming:.4f}")

    print("\n== fig1a: relevance of B vs the d-separated D ==")
    for focus in ("B", "D"):
        p = QueryPartition(evidence={"C": "T"}, hypothesis=("A",), focus=(focus,))
        report = strong_map_independence(fig1a, p)
        print(f"  {focus}: MAP-independent={report.verdict}  counterexample={report.counterexample}")

    print("\n== fn_ter: no suitable single threshold exists ==")
    partition = QueryPartition(evidence={}, hypothesis=("H",), focus=("R",))
    for s in (0.1875, 0.22):
        report = threshold_map_independence(fn_ter, {"H": "h1"}, partition, s)
        print(f"  s={s}: verdict={report.verdict}  min joint={report.min_joint}")


if __name__ == "__main__":
    main()
