"""Textbook CKY over a weighted CNF grammar.

This is an independent reference for the grammar compiler: it never
builds a diagram.  Charts are keyed by ``(X, i, k)`` with the same
1-based, end-exclusive spans as the compiler's variable names.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Sequence

from ..inference import NEG_INF, logsumexp
from ..pcfg import CnfGrammar, ParseTree


def _inside_chart(g: CnfGrammar, x: Sequence[str]):
    n = len(x)
    chart: dict[tuple, float] = {}
    for i in range(1, n + 1):
        for r in g.lexical:
            if r.rhs[0] == x[i - 1]:
                chart[r.lhs, i, i + 1] = -r.energy
    for length in range(2, n + 1):
        for i in range(1, n + 2 - length):
            k = i + length
            parts = defaultdict(list)
            for r in g.binary:
                Y, Z = r.rhs
                for j in range(i + 1, k):
                    a, b = chart.get((Y, i, j)), chart.get((Z, j, k))
                    if a is not None and b is not None:
                        parts[r.lhs].append(a + b - r.energy)
            for X, p in parts.items():
                chart[X, i, k] = logsumexp(p)
    return chart


def cky_inside(g: CnfGrammar, x: Sequence[str]) -> float:
    """log of the total weight of parses of ``x``; -inf if there are none."""
    return _inside_chart(g, x).get((g.start, 1, len(x) + 1), NEG_INF)


def cky_viterbi(g: CnfGrammar, x: Sequence[str]):
    """(minimum parse energy, one best tree) or (inf, None)."""
    n = len(x)
    best: dict[tuple, tuple[float, ParseTree]] = {}
    for i in range(1, n + 1):
        for r in g.lexical:
            if r.rhs[0] == x[i - 1]:
                cand = (r.energy, ParseTree(r, (i, i + 1)))
                if (r.lhs, i, i + 1) not in best or cand[0] < best[r.lhs, i, i + 1][0]:
                    best[r.lhs, i, i + 1] = cand
    for length in range(2, n + 1):
        for i in range(1, n + 2 - length):
            k = i + length
            for r in g.binary:
                Y, Z = r.rhs
                for j in range(i + 1, k):
                    a, b = best.get((Y, i, j)), best.get((Z, j, k))
                    if a is None or b is None:
                        continue
                    e = r.energy + a[0] + b[0]
                    cur = best.get((r.lhs, i, k))
                    if cur is None or e < cur[0]:
                        best[r.lhs, i, k] = (e, ParseTree(r, (i, k), (a[1], b[1])))
    hit = best.get((g.start, 1, n + 1))
    return (math.inf, None) if hit is None else hit


def cky_span_posteriors(g: CnfGrammar, x: Sequence[str]) -> dict[tuple, float]:
    """P(phrase X spans i..k-1 | x) for every labelled span with a derivation."""
    n = len(x)
    ins = _inside_chart(g, x)
    top = (g.start, 1, n + 1)
    if top not in ins:
        return {}
    log_z = ins[top]
    outs: dict[tuple, list[float]] = defaultdict(list)
    outs[top].append(0.0)
    out: dict[tuple, float] = {}
    for length in range(n, 0, -1):
        for i in range(1, n + 2 - length):
            k = i + length
            for X in g.nonterminals:
                if (X, i, k) not in outs:
                    continue
                o = logsumexp(outs.pop((X, i, k)))
                out[X, i, k] = o
                for r in g.binary_rules(X):
                    Y, Z = r.rhs
                    for j in range(i + 1, k):
                        a, b = ins.get((Y, i, j)), ins.get((Z, j, k))
                        if a is None or b is None:
                            continue
                        outs[Y, i, j].append(o - r.energy + b)
                        outs[Z, j, k].append(o - r.energy + a)
    return {key: math.exp(ins[key] + o - log_z)
            for key, o in out.items() if key in ins}


def enumerate_parses(g: CnfGrammar, x: Sequence[str]) -> list[ParseTree]:
    """Every parse tree of ``x`` rooted at the start symbol."""
    n = len(x)
    memo: dict[tuple, list[ParseTree]] = {}

    def trees(X, i, k):
        key = (X, i, k)
        if key in memo:
            return memo[key]
        out = []
        if k == i + 1:
            r = g.lexical_rule(X, x[i - 1])
            if r is not None:
                out.append(ParseTree(r, (i, k)))
        else:
            for r in g.binary_rules(X):
                Y, Z = r.rhs
                for j in range(i + 1, k):
                    for left in trees(Y, i, j):
                        for right in trees(Z, j, k):
                            out.append(ParseTree(r, (i, k), (left, right)))
        memo[key] = out
        return out

    return trees(g.start, 1, n + 1)
