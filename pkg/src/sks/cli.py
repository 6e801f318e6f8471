"""Command-line surface: batch operations over structures, derivation files
and sequent files.  Results go to stdout, diagnostics to stderr; exit status
0 = success/positive, 1 = negative result, 2 = usage or input error."""

from __future__ import annotations

import argparse
import sys

from . import decompose, prover, sequent
from .atomize import to_atomic, to_general
from .derivation import Derivation, check, cut_count, deserialize, dualize, serialize
from .rules import RuleError, SYSTEMS, match_down, match_up
from .semantics import countermodel, prop_atoms
from .structure import StructureError, normalize, parse, to_text


class _Usage(Exception):
    pass


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e}") from None


def _parse_expr(text: str):
    try:
        return normalize(parse(text))
    except StructureError as e:
        raise _Usage(f"bad structure: {e}") from None


def _load_derivation(path: str) -> Derivation:
    from .derivation import DerivationError

    try:
        return deserialize(_read_file(path))
    except (DerivationError, StructureError) as e:
        raise _Usage(f"bad derivation file: {e}") from None


def _load_sequent(path: str):
    try:
        return sequent.deserialize_sequent(_read_file(path))
    except (sequent.SequentError, StructureError) as e:
        raise _Usage(f"bad sequent file: {e}") from None


def cmd_normalize(args) -> int:
    print(to_text(_parse_expr(args.expr)))
    return 0


def cmd_check(args) -> int:
    if args.system not in SYSTEMS:
        raise _Usage(f"unknown system {args.system!r}; one of {', '.join(sorted(SYSTEMS))}")
    d = _load_derivation(args.file)
    report = check(d, args.system)
    print(report)
    print(f"premise: {to_text(d.premise)}")
    print(f"conclusion: {to_text(d.conclusion)}")
    print(f"cuts: {cut_count(d)}")
    return 0 if report.ok else 1


def cmd_check_seq(args) -> int:
    tree = _load_sequent(args.file)
    report = sequent.check_sequent(tree, allow_cut=args.cut, first_order=args.fo)
    print(report)
    return 0 if report.ok else 1


def cmd_apply(args) -> int:
    s = _parse_expr(args.expr)
    match = match_down if args.down or not args.up else match_up
    try:
        instances = match(args.rule, s, budget=args.budget)
    except RuleError as e:
        raise _Usage(str(e)) from None
    for inst in instances:
        print(to_text(inst.conclusion if match is match_down else inst.premise))
    return 0 if instances else 1


def cmd_prove(args) -> int:
    s = _parse_expr(args.expr)
    try:
        if args.search is not None:
            d = prover.bounded_search(s, args.search, args.search)
            if d is None:
                print("no proof found within the bounds", file=sys.stderr)
                return 1
        elif args.local:
            d = prover.local_proof(s)
        else:
            d = prover.semantic_proof(s)
    except prover.NotValid as e:
        text = ", ".join(f"{k}={int(v)}" for k, v in sorted(e.model.items()))
        print(f"countermodel: {text}")
        return 1
    except prover.ProverError as e:
        raise _Usage(str(e)) from None
    sys.stdout.write(serialize(d))
    return 0


def cmd_translate(args) -> int:
    if args.to == "cos":
        tree = _load_sequent(args.file)
        try:
            d = sequent.seq_to_cos(tree, allow_cut=args.cut)
        except sequent.SequentError as e:
            raise _Usage(str(e)) from None
        sys.stdout.write(serialize(d))
        return 0
    d = _load_derivation(args.file)
    try:
        tree = sequent.cos_to_seq(d)
    except sequent.SequentError as e:
        raise _Usage(str(e)) from None
    sys.stdout.write(sequent.serialize_sequent(tree))
    return 0


def cmd_atomize(args) -> int:
    from .atomize import AtomizeError

    d = _load_derivation(args.file)
    try:
        sys.stdout.write(serialize(to_atomic(d)))
    except AtomizeError as e:
        raise _Usage(str(e)) from None
    return 0


def cmd_generalize(args) -> int:
    from .atomize import AtomizeError

    d = _load_derivation(args.file)
    try:
        sys.stdout.write(serialize(to_general(d)))
    except AtomizeError as e:
        raise _Usage(str(e)) from None
    return 0


_MODES = {
    "ic": decompose.separate_identity_cut,
    "contraction": decompose.separate_contraction,
    "contraction-proof": decompose.separate_contraction_proof,
    "weakening": decompose.separate_weakening,
    "weakening-proof": decompose.separate_weakening_proof,
    "all": decompose.separate_all,
}


def cmd_decompose(args) -> int:
    d = _load_derivation(args.file)
    try:
        out = _MODES[args.mode](d)
    except decompose.DecomposeError as e:
        raise _Usage(str(e)) from None
    sys.stdout.write(serialize(out))
    return 0


def cmd_dual(args) -> int:
    d = _load_derivation(args.file)
    sys.stdout.write(serialize(dualize(d)))
    return 0


def cmd_countermodel(args) -> int:
    s = _parse_expr(args.expr)
    try:
        prop_atoms(s)
        model = countermodel(s)
    except Exception as e:
        raise _Usage(str(e)) from None
    if model is None:
        print("valid")
        return 0
    text = ", ".join(f"{k}={int(v)}" for k, v in sorted(model.items()))
    print(f"countermodel: {text}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sks",
        description="Proof toolkit for classical logic in the calculus of structures.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="print the canonical normal form of a structure")
    p.add_argument("expr")
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("check", help="check a derivation file against a system")
    p.add_argument("--system", required=True)
    p.add_argument("file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("check-seq", help="check a sequent proof file")
    p.add_argument("--cut", action="store_true", help="admit the cut rule")
    p.add_argument("--fo", action="store_true", help="admit the quantifier rules")
    p.add_argument("file")
    p.set_defaults(fn=cmd_check_seq)

    p = sub.add_parser("apply", help="enumerate rule instances on a structure")
    p.add_argument("--rule", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--down", action="store_true", help="match the structure as premise (default)")
    g.add_argument("--up", action="store_true", help="match the structure as conclusion")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("expr")
    p.set_defaults(fn=cmd_apply)

    p = sub.add_parser("prove", help="construct a cut-free proof, or report a countermodel")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--local", action="store_true", help="produce a KS proof (atomic rules only)")
    g.add_argument("--search", type=int, metavar="N",
                   help="bounded bottom-up search (N bounds contractions and steps)")
    p.add_argument("expr")
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("translate", help="translate between sequent trees and derivations")
    p.add_argument("--to", choices=("cos", "gs1"), required=True)
    p.add_argument("--cut", action="store_true", help="admit cut when checking sequent input")
    p.add_argument("file")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("atomize", help="expand general rules into atomic ones")
    p.add_argument("file")
    p.set_defaults(fn=cmd_atomize)

    p = sub.add_parser("generalize", help="expand medials into contraction/weakening")
    p.add_argument("file")
    p.set_defaults(fn=cmd_generalize)

    p = sub.add_parser("decompose", help="rearrange a derivation into phases")
    p.add_argument("--mode", choices=sorted(_MODES), required=True)
    p.add_argument("file")
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("dual", help="dualize a derivation file")
    p.add_argument("file")
    p.set_defaults(fn=cmd_dual)

    p = sub.add_parser("countermodel", help="find a falsifying assignment")
    p.add_argument("expr")
    p.set_defaults(fn=cmd_countermodel)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except _Usage as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
