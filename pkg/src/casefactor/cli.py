"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 input-format error, 3 zero-mass
condition, 4 oracle check failure.  Results go to stdout as JSON; a
one-line diagnostic goes to stderr on failure.
"""

from __future__ import annotations

import argparse
import itertools
import random
import sys

from . import inference as inf
from . import io
from .crosscheck import check_cfd, check_mrf, check_pcfg
from .diagram import CfdStore, ConstraintViolation
from .mrf import MrfFormatError, compile_field, parse_uai, size_bound_report as mrf_report
from .oracle import (appendix, random_cfd, random_energy, random_grammar,
                     random_mrf)
from .pcfg import (EmptySentence, GrammarNotCnf, compile_pcfg, parse_grammar,
                   size_bound_report as pcfg_report)

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_INFEASIBLE, EXIT_CHECK = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="casefactor", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile-pcfg", help="compile grammar + sentence to a diagram")
    c.add_argument("--grammar", required=True)
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--sentence", help="whitespace-separated terminals")
    src.add_argument("--sentence-file", help="one terminal per line")
    c.add_argument("--out", required=True, help="diagram file to write")
    c.add_argument("--energies-out", help="energy file (default: OUT.energies)")

    c = sub.add_parser("compile-mrf", help="compile a UAI-style field to a diagram")
    c.add_argument("--mrf", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--energies-out")

    c = sub.add_parser("infer", help="run inference on a diagram")
    c.add_argument("--cfd", required=True)
    c.add_argument("--energies", help="energy file (default: all zero)")
    c.add_argument("--task", action="append", choices=["z", "viterbi", "marginals"],
                   required=True)
    c.add_argument("--condition", nargs="*", default=[], metavar="VAR=0|1")

    c = sub.add_parser("stats", help="size statistics for a diagram")
    c.add_argument("--cfd", required=True)
    c.add_argument("--grammar", help="report against |G| n^3 for this grammar")
    c.add_argument("--sentence")
    c.add_argument("--mrf", help="report against N d^w for this field")

    c = sub.add_parser("check", help="cross-check inference against the oracle")
    c.add_argument("--kind", choices=["cfd", "pcfg", "mrf"], default="cfd")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--count", type=int, default=20)
    c.add_argument("--max-len", type=int, default=5, help="pcfg: longest sentence")
    return p


def _read(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise io.FormatError(f"cannot read {path}: {e.strerror}") from None


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _sentence(args) -> list[str]:
    if args.sentence is not None:
        return args.sentence.split()
    return [w.strip() for w in _read(args.sentence_file).splitlines() if w.strip()]


def _condition(store: CfdStore, literals) -> dict[int, int]:
    sigma = {}
    for lit in literals:
        name, eq, val = lit.rpartition("=")
        if not eq or not name or val not in ("0", "1"):
            raise UsageError(f"condition {lit!r} is not VAR=0 or VAR=1")
        v = store.var(name)
        if v in sigma and sigma[v] != int(val):
            raise UsageError(f"variable {name!r} conditioned twice")
        sigma[v] = int(val)
    return sigma


def cmd_compile_pcfg(args):
    g = parse_grammar(_read(args.grammar))
    comp = compile_pcfg(g, _sentence(args))
    _write(args.out, io.write_cfd(comp.store, comp.root))
    energies_out = args.energies_out or args.out + ".energies"
    _write(energies_out, io.format_energies(comp.store, comp.energy))
    return {"out": args.out, "energies": energies_out,
            "nodes": comp.store.size(comp.root),
            "vars": comp.store.varmask(comp.root).bit_count()}


def cmd_compile_mrf(args):
    comp = compile_field(parse_uai(_read(args.mrf)))
    _write(args.out, io.write_cfd(comp.store, comp.root))
    energies_out = args.energies_out or args.out + ".energies"
    _write(energies_out, io.format_energies(comp.store, comp.energy))
    return {"out": args.out, "energies": energies_out,
            "nodes": comp.store.size(comp.root),
            "vars": comp.store.varmask(comp.root).bit_count(),
            "offset": comp.encoding.offset}


def cmd_infer(args):
    store, root = io.read_cfd(_read(args.cfd))
    if args.energies:
        energies, default = io.parse_energies(_read(args.energies))
        psi = inf.EnergyFn.from_names(store, energies, default)
    else:
        psi = inf.EnergyFn()
    sigma = _condition(store, args.condition)
    tasks = set(args.task)
    if sigma and "viterbi" in tasks:
        raise UsageError("viterbi does not take conditions")

    log_z = vit = marg = None
    if sigma:
        log_z = inf.conditioned_z(store, root, psi, sigma)
        if log_z == inf.NEG_INF:
            raise inf.ConditionInfeasible("condition has zero probability mass")
        if "marginals" in tasks:
            marg = {v: inf.marginal(store, root, psi, sigma, v)
                    for v in store.vars(root)}
    else:
        if "z" in tasks:
            log_z = inf.z(store, root, psi)
        if "marginals" in tasks:
            marg = inf.all_marginals(store, root, psi)
    if "viterbi" in tasks:
        vit = inf.viterbi(store, root, psi)
    return io.result_json(log_z if "z" in tasks else None, vit, marg, store)


def cmd_stats(args):
    store, root = io.read_cfd(_read(args.cfd))
    nodes = store.size(root)
    report = None
    if args.grammar:
        if args.sentence is None:
            raise UsageError("--grammar needs --sentence")
        r = pcfg_report(parse_grammar(_read(args.grammar)), args.sentence.split())
        report = {"kind": "pcfg", "rules": r.rules, "n": r.n, "bound": r.bound,
                  "ratio": nodes / r.bound}
    elif args.mrf:
        r = mrf_report(parse_uai(_read(args.mrf)))
        report = {"kind": "mrf", "terms": r.terms, "max_domain": r.max_domain,
                  "width": r.width, "bound": r.bound, "ratio": nodes / r.bound}
    return {"nodes": nodes, "vars": store.varmask(root).bit_count(),
            "kinds": store.count_by_kind(root), "bound_report": report}


def cmd_check(args):
    failures = []
    checked = 0
    for seed in range(args.seed, args.seed + args.count):
        if args.kind == "cfd":
            store, root = random_cfd(seed)
            psi = random_energy(seed, store)
            errs = check_cfd(store, root, psi, random.Random(seed))
            for rep in (appendix.check_appendix_lemmas(store, root),
                        appendix.check_outside(store, root, psi),
                        appendix.check_case_sums(store, root, psi)):
                errs.extend(rep.failures)
            checked += 1
        elif args.kind == "mrf":
            errs = check_mrf(random_mrf(seed))
            checked += 1
        else:
            g = random_grammar(seed)
            errs = []
            for n in range(1, args.max_len + 1):
                for x in itertools.product(g.terminals or ["a"], repeat=n):
                    errs.extend(check_pcfg(g, list(x)))
                    checked += 1
        failures.extend(f"seed {seed}: {e}" for e in errs)
    return {"kind": args.kind, "instances": checked, "failures": failures}


COMMANDS = {
    "compile-pcfg": cmd_compile_pcfg,
    "compile-mrf": cmd_compile_mrf,
    "infer": cmd_infer,
    "stats": cmd_stats,
    "check": cmd_check,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        doc = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (io.FormatError, ConstraintViolation, GrammarNotCnf, MrfFormatError,
            EmptySentence) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except inf.ConditionInfeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(io.dumps(doc))
    if args.command == "check" and doc["failures"]:
        print(f"check failed: {len(doc['failures'])} mismatches", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
