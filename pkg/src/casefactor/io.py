"""Text formats: diagrams as s-expressions, energy files, JSON results.

Diagram files hold zero or more shared definitions followed by the root::

    (def 0 (case "x1" unit unit))
    (def 1 (case "x2" (ref 0) (ref 0)))
    (factor (ref 1) (case "x3" unit empty))

The writer emits one ``def`` per internal node in bottom-up order and the
root as ``(ref k)``; the reader accepts any nesting.
"""

from __future__ import annotations

import json
import math
import re

from .diagram import CASE, EMPTY, UNIT, CfdStore, NodeRef
from .inference import EnergyFn


class FormatError(ValueError):
    pass


_TOKEN = re.compile(r'\s*(?:(\()|(\))|"((?:[^"\\]|\\.)*)"|([^\s()"]+))')


def _tokens(text: str):
    pos = 0
    text = re.sub(r";[^\n]*", "", text)
    while True:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise FormatError(f"unexpected input at offset {pos}: {text[pos:pos + 20]!r}")
            return
        pos = m.end()
        lp, rp, quoted, atom = m.groups()
        if lp:
            yield "("
        elif rp:
            yield ")"
        elif quoted is not None:
            yield ("str", re.sub(r"\\(.)", r"\1", quoted))
        else:
            yield atom


def _read_sexprs(text: str) -> list:
    """Parse into nested lists without recursion."""
    top: list = []
    stack = [top]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise FormatError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise FormatError("unbalanced '('")
    return top


def read_cfd(text: str, store: CfdStore | None = None) -> tuple[CfdStore, NodeRef]:
    store = store if store is not None else CfdStore()
    forms = _read_sexprs(text)
    if not forms:
        raise FormatError("no diagram in input")
    defs: dict[int, NodeRef] = {}
    for form in forms[:-1]:
        if not (isinstance(form, list) and len(form) == 3 and form[0] == "def"):
            raise FormatError("only (def k <node>) forms may precede the root")
        k = _int(form[1])
        if k in defs:
            raise FormatError(f"definition {k} given twice")
        defs[k] = _build(form[2], store, defs)
    return store, _build(forms[-1], store, defs)


def _int(tok) -> int:
    try:
        return int(tok)
    except (TypeError, ValueError):
        raise FormatError(f"expected an integer, got {tok!r}") from None


def _build(expr, store: CfdStore, defs: dict[int, NodeRef]) -> NodeRef:
    # explicit stack: nested chains can be deeper than the recursion limit
    results: dict[int, NodeRef] = {}
    stack = [(expr, False)]
    while stack:
        e, expanded = stack.pop()
        if e == "unit":
            results[id(e)] = UNIT
            continue
        if e == "empty":
            results[id(e)] = EMPTY
            continue
        if not isinstance(e, list) or not e:
            raise FormatError(f"bad node {e!r}")
        head = e[0]
        if head == "ref":
            if len(e) != 2 or _int(e[1]) not in defs:
                raise FormatError(f"undefined reference {e!r}")
            results[id(e)] = defs[_int(e[1])]
            continue
        if head == "case":
            if len(e) != 4 or not (isinstance(e[1], tuple) and e[1][0] == "str"):
                raise FormatError("case needs a quoted variable and two children")
            kids = e[2:]
        elif head == "factor":
            if len(e) != 3:
                raise FormatError("factor needs two children")
            kids = e[1:]
        else:
            raise FormatError(f"unknown node kind {head!r}")
        if not expanded:
            stack.append((e, True))
            stack.extend((k, False) for k in kids)
            continue
        a, b = (results[id(k)] for k in kids)
        if head == "case":
            results[id(e)] = store.mk_case(store.var(e[1][1]), a, b)
        else:
            results[id(e)] = store.mk_factor(a, b)
    return results[id(expr)]


def _quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_cfd(store: CfdStore, root: NodeRef) -> str:
    label = {UNIT: "unit", EMPTY: "empty"}
    lines = []
    for n in store.reachable(root):
        if n in label:
            continue
        node = store.nodes[n]
        k = len(lines)
        if node.tag is CASE:
            body = f"(case {_quote(store.name(node.var))} {label[node.hi]} {label[node.lo]})"
        else:
            body = f"(factor {label[node.hi]} {label[node.lo]})"
        lines.append(f"(def {k} {body})")
        label[n] = f"(ref {k})"
    lines.append(label[root])
    return "\n".join(lines) + "\n"


# -- energies -----------------------------------------------------------------

DEFAULT_KEY = "*default*"


def parse_energies(text: str) -> tuple[dict[str, float], float]:
    """``name energy`` per line; the name is everything before the last field.

    Returns the per-name energies and the default (0 unless a
    ``*default*`` line is present).
    """
    out: dict[str, float] = {}
    default = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.rsplit(None, 1)
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'name energy'")
        name, value = parts
        try:
            e = float(value)
        except ValueError:
            raise FormatError(f"line {lineno}: bad energy {value!r}") from None
        if not math.isfinite(e):
            raise FormatError(f"line {lineno}: energy must be finite")
        if name == DEFAULT_KEY:
            if default is not None:
                raise FormatError(f"line {lineno}: default given twice")
            default = e
            continue
        if name in out:
            raise FormatError(f"line {lineno}: duplicate variable {name!r}")
        out[name] = e
    return out, (0.0 if default is None else default)


def parse_energy_file(path, store: CfdStore) -> EnergyFn:
    with open(path) as fh:
        energies, default = parse_energies(fh.read())
    return EnergyFn.from_names(store, energies, default)


def format_energies(store: CfdStore, psi: EnergyFn) -> str:
    lines = [f"{store.name(v)} {e!r}" for v, e in sorted(psi.energies.items())]
    if psi.default:
        lines.append(f"{DEFAULT_KEY} {psi.default!r}")
    return "\n".join(lines) + ("\n" if lines else "")


# -- JSON ---------------------------------------------------------------------

def _num(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.17g}")


def result_json(log_z=None, viterbi=None, marginals=None, store=None) -> dict:
    """Result document; only the requested sections are present."""
    doc = {}
    if log_z is not None:
        doc["log_z"] = _num(log_z)
    if viterbi is not None:
        witness = None if viterbi.witness is None else store.names(viterbi.witness)
        doc["viterbi"] = {"energy": _num(viterbi.energy), "witness": witness}
    if marginals is not None:
        doc["marginals"] = {store.name(v): _num(p)
                            for v, p in sorted(marginals.items(), key=lambda kv: store.name(kv[0]))}
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)
