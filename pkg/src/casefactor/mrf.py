"""Markov random fields as Boolean models, and their compilation to diagrams.

A configuration of the field is encoded with one Boolean variable per
(variable, value) pair, ``"y=v"``, and one per (term, scope tuple),
``"t{k}|y=v,..."``.  Value variables carry energy 0; a term variable
carries the term's table entry for its tuple.

Compilation follows the case-factor process over a fixed variable order:
split the remaining terms into independent groups when no unassigned
variable links them, emit a term's indicator once its whole scope is
assigned, and otherwise branch on the earliest unassigned variable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diagram import EMPTY, UNIT, CfdStore, NodeRef
from .inference import EnergyFn


class MrfFormatError(ValueError):
    pass


@dataclass
class EnergyTerm:
    scope: tuple[int, ...]
    table: np.ndarray  # axis a indexes the values of scope[a]

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float)
        if self.table.ndim != len(self.scope):
            raise ValueError("table rank does not match scope length")
        if len(set(self.scope)) != len(self.scope):
            raise ValueError("scope lists a variable twice")

    def energy(self, config: Sequence[int]) -> float:
        return float(self.table[tuple(config[y] for y in self.scope)])


@dataclass
class Mrf:
    names: list[str]
    domains: list[list]
    terms: list[EnergyTerm]
    offset: float = 0.0  # constant energy folded out of dropped terms

    def __post_init__(self):
        if len(self.names) != len(self.domains):
            raise ValueError("one domain per variable")
        for i, dom in enumerate(self.domains):
            if not dom:
                raise ValueError(f"variable {self.names[i]} has an empty domain")
        for t in self.terms:
            for a, y in enumerate(t.scope):
                if not 0 <= y < len(self.names):
                    raise ValueError(f"scope variable {y} out of range")
                if t.table.shape[a] != len(self.domains[y]):
                    raise ValueError("table shape does not match domain sizes")

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def energy(self, config: Sequence[int]) -> float:
        """Total energy of a configuration given as value indices."""
        return self.offset + math.fsum(t.energy(config) for t in self.terms)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], terms) -> "Mrf":
        names = [f"y{i}" for i in range(len(sizes))]
        domains = [list(range(d)) for d in sizes]
        return cls(names, domains, [t if isinstance(t, EnergyTerm) else EnergyTerm(*t)
                                    for t in terms])


def _depends_on(table: np.ndarray, axis: int) -> bool:
    first = np.take(table, [0], axis=axis)
    return not np.array_equal(table, np.broadcast_to(first, table.shape))


def normalize(mrf: Mrf) -> Mrf:
    """Canonical form used by the compiler.

    Scopes are sorted by variable order and reduced to the variables the
    table actually depends on.  Terms left with an empty scope become part
    of ``offset``.  Variables that no term mentions get a zero unary term,
    so the compiled diagram still picks exactly one value for them.
    """
    offset = mrf.offset
    terms = []
    for t in mrf.terms:
        perm = sorted(range(len(t.scope)), key=lambda a: t.scope[a])
        scope = [t.scope[a] for a in perm]
        table = np.transpose(t.table, perm) if perm else t.table
        for a in reversed(range(len(scope))):
            if not _depends_on(table, a):
                table = np.take(table, 0, axis=a)
                del scope[a]
        if scope:
            terms.append(EnergyTerm(tuple(scope), np.array(table)))
        else:
            offset += float(table)
    covered = {y for t in terms for y in t.scope}
    for y in range(mrf.num_vars):
        if y not in covered:
            terms.append(EnergyTerm((y,), np.zeros(len(mrf.domains[y]))))
    return Mrf(list(mrf.names), [list(d) for d in mrf.domains], terms, offset)


@dataclass
class BooleanEncoding:
    value_vars: dict[tuple[int, int], int]              # (y, value index) -> var
    term_vars: dict[tuple[int, tuple[int, ...]], int]   # (k, value tuple) -> var
    energy: EnergyFn
    offset: float = 0.0

    def decode(self, support) -> tuple[int, ...]:
        """Configuration (value indices) selected by a feasible assignment."""
        chosen = {}
        for (y, v), var in self.value_vars.items():
            if var in support:
                if y in chosen:
                    raise ValueError(f"variable {y} takes two values")
                chosen[y] = v
        n = 1 + max((y for y, _ in self.value_vars), default=-1)
        if len(chosen) != n:
            raise ValueError("assignment leaves a variable without a value")
        return tuple(chosen[y] for y in range(n))


def value_var_name(mrf: Mrf, y: int, v: int) -> str:
    return f"{mrf.names[y]}={mrf.domains[y][v]}"


def term_var_name(mrf: Mrf, k: int, scope, values) -> str:
    lits = ",".join(value_var_name(mrf, y, v) for y, v in zip(scope, values))
    return f"t{k}|{lits}"


def encode(mrf: Mrf, store: CfdStore) -> BooleanEncoding:
    """Intern the Boolean variables of a normalized field and assign energies."""
    value_vars = {}
    for y in range(mrf.num_vars):
        for v in range(len(mrf.domains[y])):
            value_vars[y, v] = store.var(value_var_name(mrf, y, v))
    term_vars = {}
    energies = {}
    for k, t in enumerate(mrf.terms):
        for values in itertools.product(*(range(len(mrf.domains[y])) for y in t.scope)):
            var = store.var(term_var_name(mrf, k, t.scope, values))
            term_vars[k, values] = var
            energies[var] = float(t.table[values])
    return BooleanEncoding(value_vars, term_vars, EnergyFn(energies), mrf.offset)


def compile_mrf(mrf: Mrf, encoding: BooleanEncoding, store: CfdStore) -> NodeRef:
    """Diagram whose feasible assignments are the field's configurations."""
    scopes = [t.scope for t in mrf.terms]
    sizes = [len(d) for d in mrf.domains]
    memo: dict[tuple, NodeRef] = {}

    def term_vars_of(terms):
        return sorted({y for k in terms for y in scopes[k]})

    def build(terms: frozenset, rho: dict) -> NodeRef:
        key = (terms, tuple(sorted(rho.items())))
        hit = memo.get(key)
        if hit is not None:
            return hit
        if not terms:
            node = UNIT
        else:
            groups = _components(terms, scopes, rho)
            if len(groups) > 1:
                subs = []
                for g in groups:
                    vs = {y for k in g for y in scopes[k]}
                    subs.append(build(g, {y: v for y, v in rho.items() if y in vs}))
                node = subs[-1]
                for s in reversed(subs[:-1]):
                    node = store.mk_factor(s, node)
            elif len(terms) == 1 and all(y in rho for y in scopes[next(iter(terms))]):
                k = next(iter(terms))
                values = tuple(rho[y] for y in scopes[k])
                node = store.mk_case(encoding.term_vars[k, values], UNIT, EMPTY)
            else:
                y = next(y for y in term_vars_of(terms) if y not in rho)
                node = store.multi_case([
                    (encoding.value_vars[y, v], build(terms, {**rho, y: v}))
                    for v in range(sizes[y])])
        memo[key] = node
        return node

    return build(frozenset(range(len(mrf.terms))), {})


def _components(terms: frozenset, scopes, rho: dict) -> list[frozenset]:
    """Groups of terms connected through unassigned variables, by smallest index."""
    parent = {k: k for k in terms}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    owner: dict[int, int] = {}
    for k in sorted(terms):
        for y in scopes[k]:
            if y in rho:
                continue
            if y in owner:
                a, b = find(owner[y]), find(k)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                owner[y] = k
    groups: dict[int, set] = {}
    for k in sorted(terms):
        groups.setdefault(find(k), set()).add(k)
    return [frozenset(g) for _, g in sorted(groups.items(), key=lambda kv: min(kv[1]))]


@dataclass
class CompiledMrf:
    mrf: Mrf  # normalized
    encoding: BooleanEncoding
    store: CfdStore
    root: NodeRef

    @property
    def energy(self) -> EnergyFn:
        return self.encoding.energy


def compile_field(mrf: Mrf, store: CfdStore | None = None) -> CompiledMrf:
    """Normalize, encode and compile in one go."""
    store = store if store is not None else CfdStore()
    norm = normalize(mrf)
    enc = encode(norm, store)
    root = compile_mrf(norm, enc, store)
    return CompiledMrf(norm, enc, store, root)


def tree_width(mrf: Mrf) -> int:
    """Width of the field under its given variable order.

    At step ``i`` two terms are linked when they share a variable ``y_j``
    with ``j >= i``; a linked group's width is the number of its variables
    with ``j <= i``.  The result is the largest width seen.
    """
    mrf = normalize(mrf)
    scopes = [set(t.scope) for t in mrf.terms]
    terms = frozenset(range(len(scopes)))
    w = 0
    for i in range(mrf.num_vars):
        past = {y: None for y in range(i)}  # "assigned" = strictly before i
        for g in _components(terms, [tuple(s) for s in scopes], past):
            vs = set().union(*(scopes[k] for k in g))
            w = max(w, sum(1 for y in vs if y <= i))
    return w


@dataclass
class SizeReport:
    nodes: int
    terms: int
    max_domain: int
    width: int
    bound: int      # terms * max_domain ** width

    @property
    def ratio(self) -> float:
        return self.nodes / self.bound


def size_bound_report(mrf: Mrf) -> SizeReport:
    comp = compile_field(mrf)
    d = max((len(dom) for dom in comp.mrf.domains), default=1)
    n_terms = len(comp.mrf.terms)
    w = tree_width(comp.mrf)
    return SizeReport(comp.store.size(comp.root), n_terms, d, w, n_terms * d ** w)


# -- UAI-style text format ----------------------------------------------------

def parse_uai(text: str) -> Mrf:
    """Read a field from UAI-style text holding energies.

    Layout: optional ``MARKOV`` token; variable count; one domain size per
    variable; term count; one scope line per term (arity then variable
    indices); then one table per term (entry count then entries in
    row-major order over the scope as written, last variable fastest).
    ``#`` starts a comment.
    """
    tokens = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    it = iter(tokens)

    def nxt(kind=int):
        try:
            tok = next(it)
        except StopIteration:
            raise MrfFormatError("unexpected end of input") from None
        try:
            return kind(tok)
        except ValueError:
            raise MrfFormatError(f"bad token {tok!r}") from None

    if tokens and tokens[0].upper() == "MARKOV":
        next(it)
    n = nxt()
    if n < 0:
        raise MrfFormatError("negative variable count")
    sizes = [nxt() for _ in range(n)]
    if any(d < 1 for d in sizes):
        raise MrfFormatError("domain sizes must be positive")
    n_terms = nxt()
    scopes = []
    for _ in range(n_terms):
        arity = nxt()
        scope = tuple(nxt() for _ in range(arity))
        for y in scope:
            if not 0 <= y < n:
                raise MrfFormatError(f"scope variable {y} out of range")
        if len(set(scope)) != len(scope):
            raise MrfFormatError("scope lists a variable twice")
        scopes.append(scope)
    terms = []
    for scope in scopes:
        count = nxt()
        shape = tuple(sizes[y] for y in scope)
        if count != int(np.prod(shape, dtype=int)):
            raise MrfFormatError(f"table for scope {scope} needs {np.prod(shape, dtype=int)} entries")
        vals = [nxt(float) for _ in range(count)]
        if not all(math.isfinite(v) for v in vals):
            raise MrfFormatError("energies must be finite")
        terms.append(EnergyTerm(scope, np.array(vals).reshape(shape)))
    if next(it, None) is not None:
        raise MrfFormatError("trailing tokens after the last table")
    return Mrf.from_sizes(sizes, terms)


def format_uai(mrf: Mrf) -> str:
    terms = list(mrf.terms)
    if mrf.offset:
        terms.append(EnergyTerm((), np.array(mrf.offset)))
    lines = ["MARKOV", str(mrf.num_vars),
             " ".join(str(len(d)) for d in mrf.domains), str(len(terms))]
    for t in terms:
        lines.append(" ".join(map(str, (len(t.scope), *t.scope))))
    for t in terms:
        lines.append(str(t.table.size))
        lines.append(" ".join(repr(float(x)) for x in t.table.ravel()))
    return "\n".join(lines) + "\n"
