"""Brute-force reference semantics for diagrams.

Everything here enumerates feasible sets explicitly.  Assignments are
handled internally as int bitmasks over variable ids (bit ``v`` set iff
``v`` is true); the public helpers convert to frozensets.
"""

from __future__ import annotations

import math
from typing import Mapping

from ..diagram import CASE, EMPTY, FACTOR, UNIT, CfdStore, NodeRef, bits, mask_of
from ..inference import EnergyFn

MAX_VARS = 20
MAX_ASSIGNMENTS = 1 << MAX_VARS


class TooLarge(RuntimeError):
    """The diagram is past the enumeration guard."""


def count_feasible(store: CfdStore, root: NodeRef) -> int:
    """|F(root)| by exact integer counting (no enumeration)."""
    nodes = store.nodes
    count: dict[NodeRef, int] = {}
    for n in store.reachable(root):
        node = nodes[n]
        if node.tag is CASE:
            count[n] = count[node.hi] + count[node.lo]
        elif node.tag is FACTOR:
            count[n] = count[node.hi] * count[node.lo]
        else:
            count[n] = 1 if n == UNIT else 0
    return count[root]


def _guard(store: CfdStore, root: NodeRef):
    # Diagrams over many variables (compiled grammars and fields) are still
    # enumerable when their feasible sets are small.
    nv = store.varmasks[root].bit_count()
    if nv > MAX_VARS and count_feasible(store, root) > MAX_ASSIGNMENTS:
        raise TooLarge(f"{nv} variables and more than {MAX_ASSIGNMENTS} "
                       "feasible assignments; refusing to enumerate")


def feasible_masks(store: CfdStore, root: NodeRef) -> dict[NodeRef, frozenset]:
    """F(n) as a set of int masks for every node reachable from ``root``."""
    _guard(store, root)
    nodes = store.nodes
    table: dict[NodeRef, frozenset] = {}
    for n in store.reachable(root):
        node = nodes[n]
        if node.tag is CASE:
            x = 1 << node.var
            table[n] = frozenset({r | x for r in table[node.hi]}) | table[node.lo]
        elif node.tag is FACTOR:
            table[n] = frozenset(a | b for a in table[node.hi] for b in table[node.lo])
        elif n == UNIT:
            table[n] = frozenset({0})
        else:
            table[n] = frozenset()
    return table


def feasible(store: CfdStore, root: NodeRef) -> frozenset:
    """F(root) as int masks."""
    return feasible_masks(store, root)[root]


def enumerate_cfd(store: CfdStore, root: NodeRef) -> set[frozenset]:
    """F(root) as a set of supports (frozensets of variable ids)."""
    return {frozenset(bits(m)) for m in feasible(store, root)}


def mask_energy(psi: EnergyFn, m: int) -> float:
    return math.fsum(psi[v] for v in bits(m))


def brute_z(store: CfdStore, root: NodeRef, psi: EnergyFn) -> float:
    """Z in the linear domain."""
    return math.fsum(math.exp(-mask_energy(psi, m)) for m in feasible(store, root))


def brute_log_z(store: CfdStore, root: NodeRef, psi: EnergyFn) -> float:
    es = [-mask_energy(psi, m) for m in feasible(store, root)]
    if not es:
        return float("-inf")
    top = max(es)
    return top + math.log(math.fsum(math.exp(e - top) for e in es))


def brute_viterbi(store: CfdStore, root: NodeRef, psi: EnergyFn):
    """(min energy, set of all minimising supports); (inf, empty set) if infeasible."""
    scored = [(mask_energy(psi, m), m) for m in feasible(store, root)]
    if not scored:
        return math.inf, set()
    best = min(e for e, _ in scored)
    return best, {frozenset(bits(m)) for e, m in scored if e == best}


def _sigma_masks(sigma: Mapping[int, int]) -> tuple[int, int]:
    pos = mask_of(v for v, b in sigma.items() if b)
    neg = mask_of(v for v, b in sigma.items() if not b)
    return pos, neg


def brute_conditioned_z(store: CfdStore, root: NodeRef, psi: EnergyFn,
                        sigma: Mapping[int, int]) -> float:
    pos, neg = _sigma_masks(sigma)
    return math.fsum(math.exp(-mask_energy(psi, m))
                     for m in feasible(store, root)
                     if m & pos == pos and not m & neg)


def brute_marginal(store: CfdStore, root: NodeRef, psi: EnergyFn,
                   sigma: Mapping[int, int], var: int) -> float:
    den = brute_conditioned_z(store, root, psi, sigma)
    if den == 0:
        raise ZeroDivisionError("conditioning event has zero mass")
    if sigma.get(var) == 0:
        return 0.0
    return brute_conditioned_z(store, root, psi, {**sigma, var: 1}) / den


def feasible_set_from_supports(store: CfdStore, supports, order=None) -> NodeRef:
    """Build a diagram whose feasible set is exactly ``supports``.

    Cases on the variables in ``order`` (default: ascending ids of the
    variables that are true somewhere), splitting the set on each.  Meant
    for tiny test instances; the result is exponential in general.
    """
    sets = {frozenset(s) for s in supports}
    if order is None:
        order = sorted(set().union(*sets)) if sets else []

    def build(group: frozenset, i: int) -> NodeRef:
        if not group:
            return EMPTY
        if i == len(order):
            return UNIT
        x = order[i]
        with_x = frozenset(s - {x} for s in group if x in s)
        without = frozenset(s for s in group if x not in s)
        if not with_x:
            return build(without, i + 1)
        return store.mk_case(x, build(with_x, i + 1), build(without, i + 1))

    return build(frozenset(sets), 0)
