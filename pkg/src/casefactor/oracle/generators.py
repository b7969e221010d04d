"""Seeded random instances for property tests.

All generators take an explicit seed and keep their own ``random.Random``,
so the same arguments always give the same instance.
"""

from __future__ import annotations

import random

import numpy as np

from ..diagram import EMPTY, UNIT, CfdStore, NodeRef
from ..inference import EnergyFn
from ..mrf import EnergyTerm, Mrf
from ..pcfg import CnfGrammar, Rule


def random_cfd(seed: int, max_vars: int = 12, max_depth: int = 6,
               store: CfdStore | None = None) -> tuple[CfdStore, NodeRef]:
    """A well-formed random diagram over ``x1 .. x{m}``, ``m <= max_vars``.

    Factor children get disjoint slices of the available variables and a
    case variable is removed from what its children may use, so every
    result is well formed by construction.  Previously built subdiagrams
    are reused now and then to get genuine sharing.
    """
    rng = random.Random(seed)
    store = store if store is not None else CfdStore()
    m = rng.randint(1, max_vars)
    xs = [store.var(f"x{i + 1}") for i in range(m)]
    built: list[NodeRef] = []
    masks = store.varmasks

    def reuse(avail_mask):
        cands = [b for b in built if masks[b] & ~avail_mask == 0]
        return rng.choice(cands) if cands else None

    def gen(avail: list[int], depth: int) -> NodeRef:
        amask = 0
        for v in avail:
            amask |= 1 << v
        r = rng.random()
        if built and r < 0.15:
            hit = reuse(amask)
            if hit is not None:
                return hit
        if depth == 0 or not avail or r < 0.08:
            return EMPTY if rng.random() < 0.12 else UNIT
        if len(avail) >= 2 and rng.random() < 0.35:
            rest = avail[:]
            rng.shuffle(rest)
            cut = rng.randint(1, len(rest) - 1)
            node = store.mk_factor(gen(rest[:cut], depth - 1), gen(rest[cut:], depth - 1))
        else:
            x = rng.choice(avail)
            rest = [v for v in avail if v != x]
            hi = gen(rest, depth - 1)
            lo = hi if rng.random() < 0.2 else gen(rest, depth - 1)
            node = store.mk_case(x, hi, lo)
        built.append(node)
        return node

    return store, gen(xs, max_depth)


def random_energy(seed: int, store: CfdStore, low: float = -3.0,
                  high: float = 3.0) -> EnergyFn:
    rng = random.Random(seed)
    return EnergyFn({v: rng.uniform(low, high) for v in range(store.num_vars)})


def random_sigma(rng: random.Random, vars_: list[int], extra: list[int] = ()) -> dict[int, int]:
    """Random partial assignment over some of ``vars_`` and (rarely) ``extra``."""
    pool = list(vars_) + list(extra)
    if not pool:
        return {}
    k = rng.randint(0, min(3, len(pool)))
    return {v: rng.randint(0, 1) for v in rng.sample(pool, k)}


def random_mrf(seed: int, max_vars: int = 8, max_domain: int = 3,
               max_terms: int = 8, max_arity: int = 3) -> Mrf:
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    n = rng.randint(1, max_vars)
    sizes = [rng.randint(2, max_domain) for _ in range(n)]
    terms = []
    for _ in range(rng.randint(1, max_terms)):
        arity = rng.randint(1, min(max_arity, n))
        scope = tuple(rng.sample(range(n), arity))
        table = nrng.uniform(-2.0, 2.0, size=[sizes[y] for y in scope])
        if arity > 1 and rng.random() < 0.15:
            # make the table ignore one scope variable to exercise normalization
            a = rng.randrange(arity)
            table = np.broadcast_to(np.take(table, [0], axis=a), table.shape).copy()
        terms.append(EnergyTerm(scope, table))
    return Mrf.from_sizes(sizes, terms)


def random_grammar(seed: int, max_nonterminals: int = 5, max_rules: int = 8,
                   terminals=("a", "b")) -> CnfGrammar:
    rng = random.Random(seed)
    nts = [f"N{i}" for i in range(rng.randint(1, max_nonterminals))]
    nts[0] = "S"
    target = rng.randint(2, max_rules)
    rules: dict[tuple, Rule] = {}
    # at least one lexical rule so that some sentence parses
    lex_lhs = rng.choice(nts)
    rules[lex_lhs, (terminals[0],)] = Rule(lex_lhs, (terminals[0],), rng.uniform(-2, 2))
    attempts = 0
    while len(rules) < target and attempts < 100:
        attempts += 1
        lhs = rng.choice(nts)
        if rng.random() < 0.55:
            rhs = (rng.choice(nts), rng.choice(nts))
        else:
            rhs = (rng.choice(terminals),)
        if (lhs, rhs) not in rules:
            rules[lhs, rhs] = Rule(lhs, rhs, rng.uniform(-2, 2))
    ordered = list(rules.values())
    rng.shuffle(ordered)
    return CnfGrammar(ordered, start="S")


CATALAN = CnfGrammar([Rule("S", ("S", "S"), 0.0), Rule("S", ("a",), 0.0)])


def family_a(store: CfdStore, i: int) -> NodeRef:
    """``A_0 = unit``, ``A_j = case(x_j, A_{j-1}, A_{j-1})``: all 2^i assignments."""
    node = UNIT
    for j in range(1, i + 1):
        node = store.mk_case(store.var(f"x{j}"), node, node)
    return node


def family_b(store: CfdStore, i: int) -> NodeRef:
    """``B_j = factor(case(x_j, unit, unit), B_{j-1})``: same set as ``A_i``."""
    node = UNIT
    for j in range(1, i + 1):
        node = store.mk_factor(store.mk_case(store.var(f"x{j}"), UNIT, UNIT), node)
    return node


def family_c(store: CfdStore, i: int) -> NodeRef:
    """``C_j = case(x_j, C_{j-1}, empty)``: only the all-true assignment."""
    node = UNIT
    for j in range(1, i + 1):
        node = store.mk_case(store.var(f"x{j}"), node, EMPTY)
    return node


def chain_mrf(n: int, seed: int | None = None, domain: int = 2) -> Mrf:
    """Pairwise chain ``y0 - y1 - ... - y{n-1}``; zero tables when ``seed`` is None."""
    rng = np.random.default_rng(seed)
    terms = []
    for a in range(n - 1):
        table = (np.zeros((domain, domain)) if seed is None
                 else rng.uniform(-2, 2, size=(domain, domain)))
        terms.append(EnergyTerm((a, a + 1), table))
    return Mrf.from_sizes([domain] * n, terms)
