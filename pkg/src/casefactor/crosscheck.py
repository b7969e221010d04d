"""Cross-validation of the linear-time algorithms against the oracle.

Each ``check_*`` function returns a list of human-readable mismatch
strings; an empty list means the instance agrees everywhere.
"""

from __future__ import annotations

import itertools
import math
import random

from . import inference as inf
from .diagram import CASE, FACTOR, CfdStore, NodeRef, bits
from .mrf import Mrf, compile_field
from .oracle import semantics as sem
from .oracle.cky import cky_inside, cky_span_posteriors, cky_viterbi, enumerate_parses
from .oracle.fields import enumerate_mrf
from .oracle.generators import random_sigma
from .pcfg import (CnfGrammar, branch_name, compile_pcfg, decode_parse,
                   phrase_name, terminal_name)

REL = 1e-9
ENERGY_ABS = 1e-12


def _close(a: float, b: float, rel: float = REL) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)


def _close_log(a: float, b: float, rel: float = REL) -> bool:
    """Log-domain values whose linear values agree to ``rel``."""
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return False
    return abs(a - b) <= rel


def predicted_witness(store: CfdStore, root: NodeRef, psi: inf.EnergyFn) -> frozenset | None:
    """The argmin the hi-first tie rule must pick, from per-node enumeration."""
    F = sem.feasible_masks(store, root)
    nodes = store.nodes

    def best(n):
        return min((sem.mask_energy(psi, m) for m in F[n]), default=math.inf)

    if not F[root]:
        return None
    out = set()
    stack = [root]
    while stack:
        n = stack.pop()
        node = nodes[n]
        if node.tag is CASE:
            if psi[node.var] + best(node.hi) <= best(node.lo):
                out.add(node.var)
                stack.append(node.hi)
            else:
                stack.append(node.lo)
        elif node.tag is FACTOR:
            stack.extend((node.hi, node.lo))
    return frozenset(out)


def check_visits(store: CfdStore, root: NodeRef, psi: inf.EnergyFn) -> list[str]:
    size = store.size(root)
    ins = inf.inside(store, root, psi)
    outs = inf.outside(store, root, psi, ins)
    vit = inf.viterbi(store, root, psi)
    return [f"{name} visited {v} nodes, diagram has {size}"
            for name, v in (("inside", ins.visits), ("outside", outs.visits),
                            ("viterbi", vit.visits)) if v != size]


def check_cfd(store: CfdStore, root: NodeRef, psi: inf.EnergyFn,
              rng: random.Random, n_sigma: int = 5, tie_rule: bool = True) -> list[str]:
    errs = []
    vars_ = sorted(bits(store.varmasks[root]))
    others = [v for v in range(store.num_vars) if v not in set(vars_)]

    log_z = inf.z(store, root, psi)
    want = sem.brute_z(store, root, psi)
    if not _close(math.exp(log_z), want):
        errs.append(f"z: {math.exp(log_z)!r} vs brute {want!r}")

    vit = inf.viterbi(store, root, psi)
    best, argmins = sem.brute_viterbi(store, root, psi)
    if math.isinf(best):
        if vit.witness is not None or not math.isinf(vit.energy):
            errs.append("viterbi: infeasible diagram produced a witness")
    else:
        if abs(vit.energy - best) > ENERGY_ABS:
            errs.append(f"viterbi energy {vit.energy!r} vs brute {best!r}")
        if vit.witness not in argmins:
            errs.append("viterbi witness not among brute-force minimisers")
        elif abs(psi.of(vit.witness) - vit.energy) > ENERGY_ABS:
            errs.append("viterbi witness energy disagrees with reported energy")
        if tie_rule and vit.witness != predicted_witness(store, root, psi):
            errs.append("viterbi witness breaks the hi-first tie rule")

    for _ in range(n_sigma):
        sigma = random_sigma(rng, vars_, others if rng.random() < 0.2 else ())
        cz = inf.conditioned_z(store, root, psi, sigma)
        want = sem.brute_conditioned_z(store, root, psi, sigma)
        if not _close(math.exp(cz), want):
            errs.append(f"conditioned_z {sigma}: {math.exp(cz)!r} vs {want!r}")
        if want > 0 and vars_:
            v = rng.choice(vars_)
            got = inf.marginal(store, root, psi, sigma, v)
            ref = sem.brute_marginal(store, root, psi, sigma, v)
            if not _close(got, ref):
                errs.append(f"marginal x{v} | {sigma}: {got!r} vs {ref!r}")
        elif want == 0:
            try:
                inf.marginal(store, root, psi, sigma, vars_[0] if vars_ else 0)
                errs.append("marginal under a zero-mass condition did not raise")
            except inf.ConditionInfeasible:
                pass

    if sem.count_feasible(store, root) > 0:
        am = inf.all_marginals(store, root, psi)
        if set(am) != set(vars_):
            errs.append("all_marginals does not cover the diagram's variables")
        for v in vars_:
            ref = sem.brute_marginal(store, root, psi, {}, v)
            if not _close(am[v], ref):
                errs.append(f"all_marginals x{v}: {am[v]!r} vs brute {ref!r}")
            one = inf.marginal(store, root, psi, {}, v)
            if not _close(am[v], one):
                errs.append(f"all_marginals x{v}: {am[v]!r} vs marginal {one!r}")
    else:
        try:
            inf.all_marginals(store, root, psi)
            errs.append("all_marginals on an empty feasible set did not raise")
        except inf.ConditionInfeasible:
            pass
    errs.extend(check_visits(store, root, psi))
    return errs


def _parse_names(tree) -> frozenset:
    out = set()
    for t in tree.walk():
        i, k = t.span
        out.add(phrase_name(t.label, i, k))
        if t.rule.lexical:
            out.add(terminal_name(t.rule, i))
        else:
            out.add(branch_name(t.rule, i, t.children[0].span[1], k))
    return frozenset(out)


def check_pcfg(g: CnfGrammar, x, bijection: bool | None = None) -> list[str]:
    errs = []
    comp = compile_pcfg(g, x)
    store, root, psi = comp.store, comp.root, comp.energy
    n = len(x)

    bad = store.validate(root)
    if bad:
        errs.append(f"validate: {bad[0]}")

    log_z = inf.z(store, root, psi)
    ref = cky_inside(g, x)
    if not _close_log(log_z, ref):
        errs.append(f"z {log_z!r} vs cky {ref!r}")

    vit = inf.viterbi(store, root, psi)
    best, tree = cky_viterbi(g, x)
    if math.isinf(best) != math.isinf(vit.energy) or (
            not math.isinf(best) and abs(best - vit.energy) > ENERGY_ABS):
        errs.append(f"viterbi energy {vit.energy!r} vs cky {best!r}")
    if vit.witness is not None:
        parse = decode_parse(comp.scheme, vit.witness)
        if parse.yield_() != list(x):
            errs.append("viterbi parse has the wrong yield")
        if abs(parse.energy() - vit.energy) > ENERGY_ABS:
            errs.append("viterbi parse energy disagrees")

    if not math.isinf(log_z):
        am = inf.all_marginals(store, root, psi)
        post = cky_span_posteriors(g, x)
        for X in g.nonterminals:
            for i in range(1, n + 1):
                for k in range(i + 1, n + 2):
                    v = store.lookup(phrase_name(X, i, k))
                    got = am.get(v, 0.0) if v is not None else 0.0
                    want = post.get((X, i, k), 0.0)
                    if not _close(got, want):
                        errs.append(f"span {X},{i},{k}: {got!r} vs cky {want!r}")

    if bijection if bijection is not None else n <= 5:
        feas = {frozenset(store.name(v) for v in rho)
                for rho in sem.enumerate_cfd(store, root)}
        parses = [_parse_names(t) for t in enumerate_parses(g, x)]
        if len(set(parses)) != len(parses) or feas != set(parses):
            errs.append(f"feasible set ({len(feas)}) is not the parse set ({len(parses)})")

    errs.extend(check_visits(store, root, psi))
    return errs


def check_mrf(mrf: Mrf, bijection: bool = True) -> list[str]:
    errs = []
    comp = compile_field(mrf)
    store, root, psi = comp.store, comp.root, comp.energy
    enc = comp.encoding
    offset = enc.offset
    ref = enumerate_mrf(mrf)

    bad = store.validate(root)
    if bad:
        errs.append(f"validate: {bad[0]}")

    log_z = inf.z(store, root, psi) - offset
    if not _close_log(log_z, ref.log_z):
        errs.append(f"log z {log_z!r} vs enumeration {ref.log_z!r}")

    am = inf.all_marginals(store, root, psi)
    for (y, v), p in ref.marginals.items():
        got = am.get(enc.value_vars[y, v], 0.0)
        if not _close(got, p):
            errs.append(f"marginal y{y}={v}: {got!r} vs {p!r}")

    vit = inf.viterbi(store, root, psi)
    if abs(vit.energy + offset - ref.min_energy) > ENERGY_ABS:
        errs.append(f"viterbi energy {vit.energy + offset!r} vs {ref.min_energy!r}")
    config = enc.decode(vit.witness)
    if abs(mrf.energy(config) - ref.min_energy) > ENERGY_ABS:
        errs.append("decoded viterbi configuration is not a minimiser")

    if bijection:
        sizes = [len(d) for d in mrf.domains]
        norm = comp.mrf
        seen = set()
        for rho in sem.enumerate_cfd(store, root):
            cfg = enc.decode(rho)
            seen.add(cfg)
            want = {enc.value_vars[y, v] for y, v in enumerate(cfg)}
            want |= {enc.term_vars[k, tuple(cfg[y] for y in t.scope)]
                     for k, t in enumerate(norm.terms)}
            if set(rho) != want:
                errs.append(f"assignment for {cfg} sets the wrong variables")
                break
        total = math.prod(sizes)
        if len(seen) != total or seen != set(itertools.product(*map(range, sizes))):
            errs.append(f"{len(seen)} feasible assignments for {total} configurations")

    errs.extend(check_visits(store, root, psi))
    return errs
