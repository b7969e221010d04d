"""Weighted CNF grammars, their parse-forest encoding, and compilation.

For a sentence ``a_1 .. a_n`` the Boolean variables are

* phrase variables ``"X_i,j"`` (a phrase X spans positions i..j-1),
* branch variables ``"X_i,k->Y_i,j Z_j,k"`` for binary rules,
* terminal variables ``"X_i,i+1->'a'"`` for lexical rules,

with 1-based positions, ``1 <= i < j <= n + 1``.  Phrase variables cost
nothing; branch and terminal variables cost their rule's energy.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from .diagram import EMPTY, UNIT, CfdStore, NodeRef
from .inference import EnergyFn


class GrammarNotCnf(ValueError):
    pass


class EmptySentence(ValueError):
    pass


class MalformedAssignment(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[str, ...]  # (Y, Z) for binary rules, (a,) for lexical ones
    energy: float = 0.0

    @property
    def lexical(self) -> bool:
        return len(self.rhs) == 1

    def __str__(self):
        if self.lexical:
            return f"{self.lhs} -> {self.rhs[0]!r} @ {self.energy!r}"
        return f"{self.lhs} -> {self.rhs[0]} {self.rhs[1]} @ {self.energy!r}"


class CnfGrammar:
    """Rules in declaration order plus a start symbol."""

    def __init__(self, rules: Sequence[Rule], start: str | None = None):
        self.rules = list(rules)
        if not self.rules and start is None:
            raise GrammarNotCnf("grammar has no rules and no start symbol")
        self.start = start if start is not None else self.rules[0].lhs
        seen = set()
        for r in self.rules:
            if len(r.rhs) not in (1, 2):
                raise GrammarNotCnf(f"rule {r.lhs} -> {' '.join(r.rhs)} is not in CNF")
            if not math.isfinite(r.energy):
                raise GrammarNotCnf(f"rule {r} has a non-finite energy")
            if (r.lhs, r.rhs) in seen:
                raise GrammarNotCnf(f"duplicate rule {r}")
            seen.add((r.lhs, r.rhs))
        self.binary = [r for r in self.rules if not r.lexical]
        self.lexical = [r for r in self.rules if r.lexical]
        self.nonterminals = list(dict.fromkeys(
            [self.start] + [r.lhs for r in self.rules]
            + [s for r in self.binary for s in r.rhs]))
        self.terminals = list(dict.fromkeys(r.rhs[0] for r in self.lexical))
        self._binary_by_lhs = {X: [r for r in self.binary if r.lhs == X]
                               for X in self.nonterminals}
        self._lex = {(r.lhs, r.rhs[0]): r for r in self.lexical}

    def __len__(self):
        return len(self.rules)

    def __repr__(self):
        return f"CnfGrammar({len(self.rules)} rules, start={self.start!r})"

    def binary_rules(self, lhs: str) -> list[Rule]:
        return self._binary_by_lhs.get(lhs, [])

    def lexical_rule(self, lhs: str, terminal: str) -> Rule | None:
        return self._lex.get((lhs, terminal))


_RULE = re.compile(r"^\s*(\S+)\s*->\s*(.*?)\s*(?:@\s*(\S+))?\s*$")
_TERMINAL = re.compile(r"""^'([^']*)'$|^"([^"]*)"$""")


def parse_grammar(text: str) -> CnfGrammar:
    """Read ``X -> Y Z @ e`` / ``X -> 'a' @ e`` lines; ``start: S`` is optional.

    The energy suffix defaults to 0.  Blank lines and ``#`` comments are
    ignored.
    """
    start = None
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("start:"):
            start = line[len("start:"):].strip()
            if not start:
                raise GrammarNotCnf(f"line {lineno}: empty start symbol")
            continue
        m = _RULE.match(line)
        if not m:
            raise GrammarNotCnf(f"line {lineno}: cannot parse {raw!r}")
        lhs, rhs_text, energy = m.groups()
        try:
            e = float(energy) if energy is not None else 0.0
        except ValueError:
            raise GrammarNotCnf(f"line {lineno}: bad energy {energy!r}") from None
        rhs = rhs_text.split()
        if len(rhs) == 1 and _TERMINAL.match(rhs[0]):
            t = _TERMINAL.match(rhs[0])
            rules.append(Rule(lhs, (t.group(1) if t.group(1) is not None else t.group(2),), e))
        elif len(rhs) == 2 and not any(_TERMINAL.match(s) for s in rhs):
            rules.append(Rule(lhs, (rhs[0], rhs[1]), e))
        else:
            raise GrammarNotCnf(f"line {lineno}: {raw.strip()!r} is not a CNF rule")
    return CnfGrammar(rules, start)


def format_grammar(g: CnfGrammar) -> str:
    return f"start: {g.start}\n" + "".join(f"{r}\n" for r in g.rules)


@dataclass(frozen=True)
class ParseTree:
    rule: Rule
    span: tuple[int, int]
    children: tuple["ParseTree", ...] = ()

    @property
    def label(self) -> str:
        return self.rule.lhs

    def energy(self) -> float:
        return math.fsum(t.rule.energy for t in self.walk())

    def walk(self):
        stack = [self]
        while stack:
            t = stack.pop()
            yield t
            stack.extend(reversed(t.children))

    def yield_(self) -> list[str]:
        return [t.rule.rhs[0] for t in self.walk() if t.rule.lexical]

    def bracketed(self) -> str:
        if self.rule.lexical:
            return f"({self.label} {self.rule.rhs[0]})"
        return f"({self.label} {' '.join(c.bracketed() for c in self.children)})"


def phrase_name(X, i, j):
    return f"{X}_{i},{j}"


def branch_name(rule, i, j, k):
    Y, Z = rule.rhs
    return f"{rule.lhs}_{i},{k}->{Y}_{i},{j} {Z}_{j},{k}"


def terminal_name(rule, i):
    return f"{rule.lhs}_{i},{i + 1}->{rule.rhs[0]!r}"


class ParseVarScheme:
    """Interns phrase, branch and terminal variables for one sentence."""

    def __init__(self, grammar: CnfGrammar, sentence: Sequence[str], store: CfdStore):
        self.grammar = grammar
        self.sentence = list(sentence)
        self.store = store
        self.info: dict[int, tuple] = {}  # var -> ("phrase", X, i, j) | ("branch", rule, i, j, k) | ("terminal", rule, i)

    @property
    def n(self) -> int:
        return len(self.sentence)

    def _intern(self, name, info):
        v = self.store.var(name)
        self.info.setdefault(v, info)
        return v

    def phrase(self, X: str, i: int, j: int) -> int:
        return self._intern(phrase_name(X, i, j), ("phrase", X, i, j))

    def branch(self, rule: Rule, i: int, j: int, k: int) -> int:
        return self._intern(branch_name(rule, i, j, k), ("branch", rule, i, j, k))

    def terminal(self, rule: Rule, i: int) -> int:
        return self._intern(terminal_name(rule, i), ("terminal", rule, i))

    def energy(self) -> EnergyFn:
        """Rule energies on branch/terminal variables, 0 on phrases."""
        return EnergyFn({v: (info[1].energy if info[0] != "phrase" else 0.0)
                         for v, info in self.info.items()})


@dataclass
class CompiledParse:
    store: CfdStore
    root: NodeRef
    energy: EnergyFn
    scheme: ParseVarScheme
    spans: dict[tuple[str, int, int], NodeRef] = field(repr=False, default_factory=dict)


def compile_pcfg(grammar: CnfGrammar, sentence: Sequence[str],
                 store: CfdStore | None = None, prune: bool = True) -> CompiledParse:
    """Diagram whose feasible assignments are the parses of ``sentence``.

    ``D(X, i, k) = case(X_i,k, B(X, i, k), empty)`` where ``B`` is a chain
    of branch variables, one per (binary rule of X, split point j), each
    guarding ``factor(D(Y, i, j), D(Z, j, k))``.  Branches are ordered by
    rule declaration order, then ascending j.

    With ``prune`` (the default) a span that admits no derivation becomes
    ``empty`` outright and branches with an ``empty`` side are dropped;
    the feasible set is unchanged.
    """
    if not sentence:
        raise EmptySentence("cannot parse an empty sentence")
    store = store if store is not None else CfdStore()
    scheme = ParseVarScheme(grammar, sentence, store)
    n = len(sentence)
    D: dict[tuple[str, int, int], NodeRef] = {}
    nts = grammar.nonterminals

    for i in range(1, n + 1):
        for X in nts:
            rule = grammar.lexical_rule(X, sentence[i - 1])
            if rule is not None:
                B = store.mk_case(scheme.terminal(rule, i), UNIT, EMPTY)
            else:
                B = EMPTY
            D[X, i, i + 1] = _wrap(store, scheme, X, i, i + 1, B, prune)

    for length in range(2, n + 1):
        for i in range(1, n + 2 - length):
            k = i + length
            for X in nts:
                branches = []
                for rule in grammar.binary_rules(X):
                    Y, Z = rule.rhs
                    for j in range(i + 1, k):
                        left, right = D[Y, i, j], D[Z, j, k]
                        if prune and (left == EMPTY or right == EMPTY):
                            continue
                        branches.append((scheme.branch(rule, i, j, k),
                                         store.mk_factor(left, right)))
                D[X, i, k] = _wrap(store, scheme, X, i, k, store.multi_case(branches), prune)

    root = D.get((grammar.start, 1, n + 1), EMPTY)
    return CompiledParse(store, root, scheme.energy(), scheme, D)


def _wrap(store, scheme, X, i, k, B, prune):
    if prune and B == EMPTY:
        return EMPTY
    return store.mk_case(scheme.phrase(X, i, k), B, EMPTY)


def encode_tree(scheme: ParseVarScheme, tree: ParseTree) -> frozenset:
    """Support of the truth assignment a parse tree determines."""
    out = set()
    for t in tree.walk():
        i, k = t.span
        out.add(scheme.phrase(t.label, i, k))
        if t.rule.lexical:
            out.add(scheme.terminal(t.rule, i))
        else:
            out.add(scheme.branch(t.rule, i, t.children[0].span[1], k))
    return frozenset(out)


def decode_parse(scheme: ParseVarScheme, support) -> ParseTree:
    """Inverse of :func:`encode_tree` on the feasible set."""
    phrases = set()
    below: dict[tuple[str, int, int], list[int]] = {}
    for v in support:
        info = scheme.info.get(v)
        if info is None:
            raise MalformedAssignment(f"variable {scheme.store.name(v)!r} is not a parse variable")
        if info[0] == "phrase":
            phrases.add(info[1:])
        elif info[0] == "branch":
            rule, i, _, k = info[1:]
            below.setdefault((rule.lhs, i, k), []).append(v)
        else:
            rule, i = info[1:]
            below.setdefault((rule.lhs, i, i + 1), []).append(v)

    used = set()

    def build(X, i, k):
        if (X, i, k) not in phrases:
            raise MalformedAssignment(f"phrase {phrase_name(X, i, k)} is not set")
        kids = below.get((X, i, k), [])
        if len(kids) != 1:
            raise MalformedAssignment(
                f"phrase {phrase_name(X, i, k)} has {len(kids)} expansions")
        v = kids[0]
        used.add(scheme.phrase(X, i, k))
        used.add(v)
        info = scheme.info[v]
        rule = info[1]
        if info[0] == "terminal":
            if scheme.sentence[i - 1] != rule.rhs[0]:
                raise MalformedAssignment(f"terminal mismatch at position {i}")
            return ParseTree(rule, (i, k))
        j = info[3]
        return ParseTree(rule, (i, k), (build(rule.rhs[0], i, j), build(rule.rhs[1], j, k)))

    tree = build(scheme.grammar.start, 1, scheme.n + 1)
    if used != set(support):
        raise MalformedAssignment("assignment sets variables outside the parse")
    return tree


@dataclass
class ParseSizeReport:
    nodes: int
    rules: int
    n: int

    @property
    def bound(self) -> int:
        return self.rules * self.n ** 3

    @property
    def ratio(self) -> float:
        return self.nodes / self.bound


def size_bound_report(grammar: CnfGrammar, sentence: Sequence[str]) -> ParseSizeReport:
    comp = compile_pcfg(grammar, sentence)
    return ParseSizeReport(comp.store.size(comp.root), len(grammar), len(sentence))
