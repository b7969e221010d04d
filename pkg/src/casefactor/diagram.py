"""Hash-consed case-factor diagram store.

A diagram is a DAG over four node kinds::

    case(x, hi, lo) | factor(left, right) | unit | empty

Nodes live in an append-only table owned by a :class:`CfdStore` and are
referred to by integer indices.  Children are always created before their
parents, so ascending index order is a valid bottom-up order for every
reachable sub-DAG.

Variable sets are kept per node as Python ints used as bitsets (bit ``v``
set iff variable ``v`` occurs below the node).  They are immutable and
built by a single ``|`` at construction time, which keeps the
well-formedness checks of ``mk_case``/``mk_factor`` cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

UNIT = 0
EMPTY = 1

CASE = "case"
FACTOR = "factor"
UNIT_TAG = "unit"
EMPTY_TAG = "empty"

VarId = int
NodeRef = int
Assignment = frozenset  # support: the set of variable ids set to 1


class ConstraintViolation(ValueError):
    """A case or factor node would break the variable side conditions."""


class Node(NamedTuple):
    tag: str
    var: int = -1
    hi: int = -1  # factor: left child
    lo: int = -1  # factor: right child

    @property
    def left(self) -> int:
        return self.hi

    @property
    def right(self) -> int:
        return self.lo


@dataclass(frozen=True)
class Violation:
    node: NodeRef
    message: str

    def __str__(self):
        return f"node {self.node}: {self.message}"


def mask_of(vars_: Iterable[int]) -> int:
    m = 0
    for v in vars_:
        m |= 1 << v
    return m


def bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class CfdStore:
    """Append-only node table with a unique table and variable interning.

    With ``checked=True`` (the default) every constructor enforces the
    case/factor side conditions and raises :class:`ConstraintViolation`.
    Large compilations can pass ``checked=False`` and call
    :meth:`validate` once at the end.
    """

    def __init__(self, checked: bool = True):
        self.checked = checked
        self.nodes: list[Node] = [Node(UNIT_TAG), Node(EMPTY_TAG)]
        self.varmasks: list[int] = [0, 0]
        self._unique: dict[tuple, int] = {}
        self._var_names: list[str] = []
        self._var_ids: dict[str, int] = {}

    # -- variables -------------------------------------------------------

    def var(self, name: str) -> VarId:
        """Intern ``name`` and return its id."""
        vid = self._var_ids.get(name)
        if vid is None:
            vid = len(self._var_names)
            self._var_names.append(name)
            self._var_ids[name] = vid
        return vid

    def lookup(self, name: str) -> VarId | None:
        return self._var_ids.get(name)

    def name(self, var: VarId) -> str:
        return self._var_names[var]

    @property
    def num_vars(self) -> int:
        return len(self._var_names)

    def names(self, vars_: Iterable[VarId]) -> list[str]:
        return sorted(self._var_names[v] for v in vars_)

    # -- constructors ----------------------------------------------------

    def mk_unit(self) -> NodeRef:
        return UNIT

    def mk_empty(self) -> NodeRef:
        return EMPTY

    def mk_case(self, var: VarId, hi: NodeRef, lo: NodeRef) -> NodeRef:
        key = (CASE, var, hi, lo)
        ref = self._unique.get(key)
        if ref is not None:
            return ref
        m = self.varmasks[hi] | self.varmasks[lo]
        if self.checked and (m >> var) & 1:
            raise ConstraintViolation(
                f"case variable {self.name(var)!r} occurs in a child")
        return self._append(key, Node(CASE, var, hi, lo), m | (1 << var))

    def mk_factor(self, left: NodeRef, right: NodeRef) -> NodeRef:
        key = (FACTOR, left, right)
        ref = self._unique.get(key)
        if ref is not None:
            return ref
        ml, mr = self.varmasks[left], self.varmasks[right]
        if self.checked and ml & mr:
            shared = self.names(bits(ml & mr))
            raise ConstraintViolation(
                f"factor children share variables {shared}")
        return self._append(key, Node(FACTOR, -1, left, right), ml | mr)

    def multi_case(self, branches: Sequence[tuple[VarId, NodeRef]]) -> NodeRef:
        """Right-nested chain ``case(z1, D1, case(z2, D2, ... empty))``."""
        node = EMPTY
        for var, sub in reversed(branches):
            node = self.mk_case(var, sub, node)
        return node

    def _append(self, key, node, mask) -> NodeRef:
        ref = len(self.nodes)
        self.nodes.append(node)
        self.varmasks.append(mask)
        self._unique[key] = ref
        return ref

    # -- queries ---------------------------------------------------------

    def __len__(self):
        return len(self.nodes)

    def node(self, n: NodeRef) -> Node:
        return self.nodes[n]

    def varmask(self, n: NodeRef) -> int:
        return self.varmasks[n]

    def vars(self, n: NodeRef) -> frozenset:
        return frozenset(bits(self.varmasks[n]))

    def is_open(self, n: NodeRef) -> bool:
        return self.varmasks[n] != 0

    def children(self, n: NodeRef) -> tuple[NodeRef, ...]:
        node = self.nodes[n]
        if node.tag is CASE or node.tag is FACTOR:
            return (node.hi, node.lo)
        return ()

    def reachable(self, root: NodeRef) -> list[NodeRef]:
        """All nodes reachable from ``root``, in ascending (bottom-up) order."""
        seen = {root}
        stack = [root]
        nodes = self.nodes
        while stack:
            n = stack.pop()
            node = nodes[n]
            if node.tag is CASE or node.tag is FACTOR:
                for c in (node.hi, node.lo):
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
        return sorted(seen)

    def size(self, root: NodeRef) -> int:
        """Number of distinct nodes reachable from ``root``, leaves included.

        This counts ``unit`` and ``empty`` whenever they are reachable, so
        the chain ``A_i = case(x_i, A_{i-1}, A_{i-1})`` has ``i + 1`` nodes
        (``i`` cases plus ``unit``) and ``C_i`` has ``i + 2`` (it also
        reaches ``empty``).
        """
        return len(self.reachable(root))

    def validate(self, root: NodeRef) -> list[Violation]:
        """Re-check the side conditions on every node reachable from ``root``.

        Variable masks are recomputed from scratch rather than trusted, so
        this also catches corrupted caches.
        """
        out = []
        masks: dict[int, int] = {UNIT: 0, EMPTY: 0}
        for n in self.reachable(root):
            node = self.nodes[n]
            if node.tag is CASE:
                m = masks[node.hi] | masks[node.lo]
                if (m >> node.var) & 1:
                    out.append(Violation(
                        n, f"case variable {self.name(node.var)!r} occurs in a child"))
                masks[n] = m | (1 << node.var)
            elif node.tag is FACTOR:
                shared = masks[node.hi] & masks[node.lo]
                if shared:
                    out.append(Violation(
                        n, f"factor children share variables {self.names(bits(shared))}"))
                masks[n] = masks[node.hi] | masks[node.lo]
            if masks.get(n, 0) != self.varmasks[n]:
                out.append(Violation(n, "cached variable set is stale"))
        return out

    def count_by_kind(self, root: NodeRef) -> dict[str, int]:
        counts = {CASE: 0, FACTOR: 0, UNIT_TAG: 0, EMPTY_TAG: 0}
        for n in self.reachable(root):
            counts[self.nodes[n].tag] += 1
        return counts


def assignment(store: CfdStore, names: Iterable[str]) -> Assignment:
    """Build an assignment from variable names (interning unseen ones)."""
    return frozenset(store.var(x) for x in names)


def same_structure(s1: CfdStore, n1: NodeRef, s2: CfdStore, n2: NodeRef) -> bool:
    """Structural equality across stores, matching variables by name."""
    memo: dict[tuple[int, int], bool] = {}
    stack = [(n1, n2)]
    # iterative post-order so long case chains do not hit the recursion limit
    while stack:
        a, b = stack[-1]
        if (a, b) in memo:
            stack.pop()
            continue
        na, nb = s1.nodes[a], s2.nodes[b]
        if na.tag != nb.tag:
            return False
        if na.tag is UNIT_TAG or na.tag is EMPTY_TAG:
            memo[a, b] = True
            stack.pop()
            continue
        if na.tag is CASE and s1.name(na.var) != s2.name(nb.var):
            return False
        pending = [p for p in ((na.hi, nb.hi), (na.lo, nb.lo)) if p not in memo]
        if pending:
            stack.extend(pending)
            continue
        if not (memo[na.hi, nb.hi] and memo[na.lo, nb.lo]):
            return False
        memo[a, b] = True
        stack.pop()
    return True
