"""Lead-to sets, contexts and exhaustive checks of the outside-value lemmas.

For a root ``D`` and an assignment ``rho``, ``gamma(D, rho)`` is the set of
nodes the assignment "leads to": at a case node follow the branch selected
by ``rho``, at a factor node follow both children.  Contexts of a node are
the parts of leading assignments that fall outside the node's variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..diagram import CASE, EMPTY, FACTOR, CfdStore, NodeRef, bits, mask_of
from ..inference import EnergyFn, case_numerators, inside, outside
from .semantics import (brute_conditioned_z, feasible, feasible_masks,
                        mask_energy)


def _gamma_paths(store: CfdStore, root: NodeRef, rho: int) -> dict[NodeRef, int]:
    """Nodes of gamma(root, rho) mapped to the number of distinct lead paths."""
    nodes = store.nodes
    reached = {root}
    stack = [root]
    while stack:
        n = stack.pop()
        for c in _active_children(nodes[n], rho):
            if c not in reached:
                reached.add(c)
                stack.append(c)
    paths = dict.fromkeys(reached, 0)
    paths[root] = 1
    for n in sorted(reached, reverse=True):
        for c in _active_children(nodes[n], rho):
            paths[c] += paths[n]
    return paths


def _active_children(node, rho: int):
    if node.tag is CASE:
        return (node.hi,) if (rho >> node.var) & 1 else (node.lo,)
    if node.tag is FACTOR:
        return (node.hi, node.lo)
    return ()


def gamma(store: CfdStore, root: NodeRef, rho) -> set[NodeRef]:
    """Nodes that the truth assignment ``rho`` (support set or int mask) leads to."""
    if not isinstance(rho, int):
        rho = mask_of(rho)
    return set(_gamma_paths(store, root, rho))


def lead_table(store: CfdStore, root: NodeRef) -> dict[NodeRef, set[int]]:
    """F(D', root) for every node D' below ``root``, as int masks."""
    table: dict[NodeRef, set[int]] = {n: set() for n in store.reachable(root)}
    for rho in feasible(store, root):
        for n in gamma(store, root, rho):
            table[n].add(rho)
    return table


def leads_to(store: CfdStore, sub: NodeRef, root: NodeRef) -> set[int]:
    return lead_table(store, root).get(sub, set())


def contexts(store: CfdStore, sub: NodeRef, root: NodeRef) -> set[int]:
    """O(sub, root): outside parts of the assignments leading to ``sub``."""
    keep = ~store.varmasks[sub]
    return {rho & keep for rho in leads_to(store, sub, root)}


def context_table(store: CfdStore, root: NodeRef) -> dict[NodeRef, set[int]]:
    masks = store.varmasks
    return {n: {rho & ~masks[n] for rho in rhos}
            for n, rhos in lead_table(store, root).items()}


def brute_outside(store: CfdStore, sub: NodeRef, root: NodeRef, psi: EnergyFn) -> float:
    """Sum of context weights for ``sub`` in the linear domain."""
    return math.fsum(math.exp(-mask_energy(psi, s))
                     for s in contexts(store, sub, root))


@dataclass
class LemmaReport:
    checked: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def tick(self, lemma: str, n: int = 1):
        self.checked[lemma] = self.checked.get(lemma, 0) + n

    def fail(self, lemma: str, msg: str):
        self.failures.append(f"{lemma}: {msg}")


def check_appendix_lemmas(store: CfdStore, root: NodeRef) -> LemmaReport:
    """Exhaustively check the structural lemmas on ``root``.

    Covers unique lead paths to open nodes, ``empty`` never reached by a
    feasible assignment, inside parts being feasible, the context/inside
    product decomposition in both directions, every true variable passing
    a case node on it, and at most one such node per variable.  Counts
    and failures are keyed by those property names.
    """
    rep = LemmaReport()
    nodes = store.nodes
    masks = store.varmasks
    F = feasible_masks(store, root)
    leads: dict[NodeRef, set[int]] = {n: set() for n in F}

    for rho in F[root]:
        paths = _gamma_paths(store, root, rho)
        case_vars: dict[int, int] = {}
        for n, count in paths.items():
            leads[n].add(rho)
            if masks[n]:
                rep.tick("unique_path")
                if count != 1:
                    rep.fail("unique_path", f"{count} lead paths to node {n}")
            node = nodes[n]
            if node.tag is CASE:
                case_vars[node.var] = case_vars.get(node.var, 0) + 1
        rep.tick("no_empty")
        if EMPTY in paths:
            rep.fail("no_empty", f"feasible assignment {sorted(bits(rho))} reaches empty")
        for v in bits(rho):
            rep.tick("true_var_cased")
            if v not in case_vars:
                rep.fail("true_var_cased", f"true variable {v} has no case node on its lead set")
        for v, c in case_vars.items():
            rep.tick("single_case")
            if c > 1:
                rep.fail("single_case", f"{c} case nodes on variable {v}")

    for n, lead in leads.items():
        inner = masks[n]
        for rho in lead:
            rep.tick("inside_feasible")
            if rho & inner not in F[n]:
                rep.fail("inside_feasible", f"inside part at node {n} is not feasible there")
        ctx = {rho & ~inner for rho in lead}
        product = {s | r for s in ctx for r in F[n]}
        rep.tick("context_extension")
        if not product <= lead:
            rep.fail("context_extension", f"context x inside product escapes lead set at node {n}")
        rep.tick("decomposition")
        if product != lead:
            rep.fail("decomposition", f"lead set at node {n} is not context x inside")
    return rep


def check_outside(store: CfdStore, root: NodeRef, psi: EnergyFn,
                  rel_tol: float = 1e-9) -> LemmaReport:
    """Compare recursive outside values with context sums on live open nodes.

    Nodes whose own feasible set is empty are skipped: for them the
    recursion can carry weight even though no assignment leads there.
    """
    rep = LemmaReport()
    F = feasible_masks(store, root)
    ctx = context_table(store, root)
    ins = inside(store, root, psi)
    outs = outside(store, root, psi, ins)
    for n, o in outs.values.items():
        if not F[n]:
            continue
        rep.tick("outside")
        want = math.fsum(math.exp(-mask_energy(psi, s)) for s in ctx[n])
        got = math.exp(o)
        if not math.isclose(got, want, rel_tol=rel_tol, abs_tol=1e-300):
            rep.fail("outside", f"node {n}: outside {got!r} vs contexts {want!r}")
    return rep


def check_case_sums(store: CfdStore, root: NodeRef, psi: EnergyFn,
                   rel_tol: float = 1e-9) -> LemmaReport:
    """Case-node sums of outside x weight x inside against brute conditioning."""
    rep = LemmaReport()
    ins = inside(store, root, psi)
    outs = outside(store, root, psi, ins)
    nums = case_numerators(store, root, psi, ins, outs)
    for v in bits(store.varmasks[root]):
        rep.tick("case_sum")
        got = math.exp(nums.get(v, float("-inf")))
        want = brute_conditioned_z(store, root, psi, {v: 1})
        if not math.isclose(got, want, rel_tol=rel_tol, abs_tol=1e-300):
            rep.fail("case_sum", f"variable {v}: {got!r} vs {want!r}")
    return rep
