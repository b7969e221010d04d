"""Inference on a diagram with per-variable energies.

Sum-product quantities are kept in the log domain (``log Z``), Viterbi in
the plain energy domain.  Every pass walks the reachable nodes once, in
ascending index order (bottom-up) or descending order (top-down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .diagram import (CASE, EMPTY, FACTOR, UNIT, Assignment, CfdStore, NodeRef,
                      VarId, bits)

NEG_INF = float("-inf")
INF = float("inf")


class InfeasibleAssignment(ValueError):
    """The assignment is not in the diagram's feasible set."""


class ConditionInfeasible(ZeroDivisionError):
    """The conditioning event has zero probability mass."""


@dataclass
class EnergyFn:
    """Energies per variable id; unlisted variables get ``default``."""

    energies: dict[VarId, float] = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        for v, e in self.energies.items():
            if not math.isfinite(e):
                raise ValueError(f"energy of variable {v} is not finite: {e}")
        if not math.isfinite(self.default):
            raise ValueError("default energy must be finite")

    def __getitem__(self, var: VarId) -> float:
        return self.energies.get(var, self.default)

    def of(self, rho: Assignment) -> float:
        """Energy of a truth assignment: sum over its true variables."""
        return math.fsum(self[v] for v in rho)

    @classmethod
    def from_names(cls, store: CfdStore, energies: Mapping[str, float],
                   default: float = 0.0) -> "EnergyFn":
        return cls({store.var(k): float(e) for k, e in energies.items()}, default)


def logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def logsumexp(xs) -> float:
    xs = list(xs)
    if not xs:
        return NEG_INF
    m = max(xs)
    if m == NEG_INF:
        return m
    return m + math.log(math.fsum(math.exp(x - m) for x in xs))


@dataclass
class InsideTable:
    root: NodeRef
    values: dict[NodeRef, float]  # log Z per reachable node
    order: list[NodeRef]          # reachable nodes, bottom-up
    visits: int = 0

    @property
    def log_z(self) -> float:
        return self.values[self.root]

    def __getitem__(self, n: NodeRef) -> float:
        return self.values[n]


@dataclass
class OutsideTable:
    root: NodeRef
    values: dict[NodeRef, float]  # log outside value, open nodes only
    visits: int = 0

    def __getitem__(self, n: NodeRef) -> float:
        return self.values[n]


@dataclass
class ViterbiResult:
    energy: float
    witness: Assignment | None
    visits: int = 0

    @property
    def feasible(self) -> bool:
        return self.witness is not None


def inside(store: CfdStore, root: NodeRef, psi: EnergyFn) -> InsideTable:
    nodes = store.nodes
    order = store.reachable(root)
    val: dict[NodeRef, float] = {}
    visits = 0
    for n in order:
        visits += 1
        node = nodes[n]
        tag = node.tag
        if tag is CASE:
            val[n] = logaddexp(val[node.hi] - psi[node.var], val[node.lo])
        elif tag is FACTOR:
            val[n] = val[node.hi] + val[node.lo]
        elif n == UNIT:
            val[n] = 0.0
        else:
            val[n] = NEG_INF
    return InsideTable(root, val, order, visits)


def z(store: CfdStore, root: NodeRef, psi: EnergyFn) -> float:
    """log of the partition function."""
    return inside(store, root, psi).log_z


def viterbi(store: CfdStore, root: NodeRef, psi: EnergyFn) -> ViterbiResult:
    """Minimum energy over the feasible set and one assignment achieving it.

    Ties at a case node go to the ``hi`` branch.
    """
    nodes = store.nodes
    best: dict[NodeRef, float] = {}
    take_hi: dict[NodeRef, bool] = {}
    visits = 0
    for n in store.reachable(root):
        visits += 1
        node = nodes[n]
        if node.tag is CASE:
            e_hi = psi[node.var] + best[node.hi]
            e_lo = best[node.lo]
            take_hi[n] = e_hi <= e_lo
            best[n] = e_hi if take_hi[n] else e_lo
        elif node.tag is FACTOR:
            best[n] = best[node.hi] + best[node.lo]
        elif n == UNIT:
            best[n] = 0.0
        else:
            best[n] = INF
    energy = best[root]
    if energy == INF:
        return ViterbiResult(INF, None, visits)

    witness = set()
    stack = [root]
    while stack:
        n = stack.pop()
        node = nodes[n]
        if node.tag is CASE:
            if take_hi[n]:
                witness.add(node.var)
                stack.append(node.hi)
            else:
                stack.append(node.lo)
        elif node.tag is FACTOR:
            stack.append(node.hi)
            stack.append(node.lo)
    return ViterbiResult(energy, frozenset(witness), visits)


def is_feasible(store: CfdStore, root: NodeRef, rho: Assignment) -> bool:
    """Membership test ``rho in F(root)`` in one top-down walk.

    Follows the branch ``rho`` selects at each case node and collects the
    case variables taken on the ``hi`` side; ``rho`` is feasible iff the walk
    never lands on ``empty`` and the collected set equals its support.
    """
    nodes = store.nodes
    taken = set()
    seen = set()
    stack = [root]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        node = nodes[n]
        if node.tag is CASE:
            if node.var in rho:
                taken.add(node.var)
                stack.append(node.hi)
            else:
                stack.append(node.lo)
        elif node.tag is FACTOR:
            stack.append(node.hi)
            stack.append(node.lo)
        elif n == EMPTY:
            return False
    return taken == set(rho)


def probability(store: CfdStore, root: NodeRef, psi: EnergyFn,
                rho: Assignment) -> float:
    if not is_feasible(store, root, rho):
        raise InfeasibleAssignment(
            f"assignment {store.names(rho)} is not feasible")
    return math.exp(-psi.of(rho) - z(store, root, psi))


def conditioned_z(store: CfdStore, root: NodeRef, psi: EnergyFn,
                  sigma: Mapping[VarId, int]) -> float:
    """log of the partition function restricted to assignments extending ``sigma``.

    ``sigma`` maps variable ids to 0/1.  Variables bound to 1 get a dense
    bit index; each node records which of them occur below it, so the
    "a true variable was dropped on this branch" test is one mask operation.
    """
    positive = [v for v, b in sigma.items() if b]
    bit_of = {v: 1 << i for i, v in enumerate(positive)}
    all_pos = (1 << len(positive)) - 1

    nodes = store.nodes
    order = store.reachable(root)
    occurs: dict[NodeRef, int] = {}
    val: dict[NodeRef, float] = {}
    for n in order:
        node = nodes[n]
        if node.tag is CASE:
            var = node.var
            m_hi, m_lo = occurs[node.hi], occurs[node.lo]
            here = m_hi | m_lo | bit_of.get(var, 0)
            occurs[n] = here
            # a true sigma variable other than var that occurs in this node but
            # not in the chosen child would be forced to 0 on that branch
            others = here & ~bit_of.get(var, 0)
            state = sigma.get(var)
            hi = NEG_INF
            lo = NEG_INF
            if state != 0 and not (others & ~m_hi):
                hi = val[node.hi] - psi[var]
            if state != 1 and not (others & ~m_lo):
                lo = val[node.lo]
            val[n] = logaddexp(hi, lo)
        elif node.tag is FACTOR:
            occurs[n] = occurs[node.hi] | occurs[node.lo]
            val[n] = val[node.hi] + val[node.lo]
        else:
            occurs[n] = 0
            val[n] = 0.0 if n == UNIT else NEG_INF
    if occurs[root] != all_pos:
        return NEG_INF
    return val[root]


def marginal(store: CfdStore, root: NodeRef, psi: EnergyFn,
             sigma: Mapping[VarId, int], var: VarId) -> float:
    """P(var = 1 | sigma) as a ratio of conditioned partition functions."""
    den = conditioned_z(store, root, psi, sigma)
    if den == NEG_INF:
        raise ConditionInfeasible("conditioning event has zero mass")
    if sigma.get(var) == 0:
        return 0.0
    num = conditioned_z(store, root, psi, {**sigma, var: 1})
    return math.exp(num - den)


def outside(store: CfdStore, root: NodeRef, psi: EnergyFn,
            ins: InsideTable) -> OutsideTable:
    """Top-down outside values for every open node below ``root``.

    Each parent pushes into each child slot separately, so a node that is
    both children of one case node receives both contributions.
    """
    nodes = store.nodes
    masks = store.varmasks
    acc: dict[NodeRef, list[float]] = {}
    out: dict[NodeRef, float] = {}
    visits = 0
    if masks[root]:
        acc[root] = [0.0]
    for n in reversed(ins.order):
        visits += 1
        parts = acc.pop(n, None)
        if parts is None:
            continue
        o = parts[0] if len(parts) == 1 else logsumexp(parts)
        out[n] = o
        node = nodes[n]
        if node.tag is CASE:
            if masks[node.hi]:
                acc.setdefault(node.hi, []).append(o - psi[node.var])
            if masks[node.lo]:
                acc.setdefault(node.lo, []).append(o)
        elif node.tag is FACTOR:
            if masks[node.hi]:
                acc.setdefault(node.hi, []).append(o + ins.values[node.lo])
            if masks[node.lo]:
                acc.setdefault(node.lo, []).append(o + ins.values[node.hi])
    return OutsideTable(root, out, visits)


def case_numerators(store: CfdStore, root: NodeRef, psi: EnergyFn,
                    ins: InsideTable, outs: OutsideTable) -> dict[VarId, float]:
    """log Z(root, psi, var := 1) for every variable, summed over its case nodes."""
    nodes = store.nodes
    parts: dict[VarId, list[float]] = {}
    for n, o in outs.values.items():
        node = nodes[n]
        if node.tag is CASE:
            parts.setdefault(node.var, []).append(
                o - psi[node.var] + ins.values[node.hi])
    return {v: logsumexp(p) for v, p in parts.items()}


def all_marginals(store: CfdStore, root: NodeRef, psi: EnergyFn) -> dict[VarId, float]:
    """P(var = 1) for every variable of the diagram via inside-outside."""
    ins = inside(store, root, psi)
    log_z = ins.log_z
    if log_z == NEG_INF:
        raise ConditionInfeasible("diagram has an empty feasible set")
    outs = outside(store, root, psi, ins)
    nums = case_numerators(store, root, psi, ins, outs)
    result = {}
    for v in bits(store.varmasks[root]):
        p = math.exp(nums.get(v, NEG_INF) - log_z)
        result[v] = min(p, 1.0)
    return result
