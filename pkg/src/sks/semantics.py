"""Classical propositional semantics: the independent oracle used by the
prover and the rule-soundness tests."""

from __future__ import annotations

from itertools import product

from .structure import (
    Atom,
    Copar,
    Par,
    Quant,
    Structure,
    Unit,
    negate,
)

Assignment = dict[str, bool]

ATOM_BUDGET = 20


class SemanticsError(Exception):
    pass


class NotPropositional(SemanticsError):
    pass


class AtomBudgetExceeded(SemanticsError):
    pass


def prop_atoms(s: Structure) -> frozenset[str]:
    """Atom names of a propositional structure; error on quantifiers or
    predicate arguments."""
    match s:
        case Unit():
            return frozenset()
        case Atom(name, args, _):
            if args:
                raise NotPropositional(f"atom {name} has term arguments")
            return frozenset((name,))
        case Par(parts) | Copar(parts):
            out: frozenset[str] = frozenset()
            for p in parts:
                out |= prop_atoms(p)
            return out
        case Quant():
            raise NotPropositional("quantifier in propositional structure")
    raise SemanticsError(f"cannot evaluate {s!r}")


def evaluate(s: Structure, v: Assignment) -> bool:
    """Truth value under v (par is disjunction, copar conjunction)."""
    match s:
        case Unit(value):
            return value
        case Atom(name, args, negated):
            if args:
                raise NotPropositional(f"atom {name} has term arguments")
            if name not in v:
                raise SemanticsError(f"assignment missing atom {name!r}")
            return v[name] != negated
        case Par(parts):
            return any(evaluate(p, v) for p in parts)
        case Copar(parts):
            return all(evaluate(p, v) for p in parts)
        case Quant():
            raise NotPropositional("quantifier in propositional structure")
    raise SemanticsError(f"cannot evaluate {s!r}")


def assignments(names: frozenset[str]):
    """All assignments, atoms sorted lexicographically, counting up from
    all-false."""
    ordered = sorted(names)
    for bits in product((False, True), repeat=len(ordered)):
        yield dict(zip(ordered, bits))


def countermodel(s: Structure) -> Assignment | None:
    """First falsifying assignment in enumeration order, or None."""
    names = prop_atoms(s)
    if len(names) > ATOM_BUDGET:
        raise AtomBudgetExceeded(f"{len(names)} atoms exceed budget {ATOM_BUDGET}")
    for v in assignments(names):
        if not evaluate(s, v):
            return v
    return None


def valid(s: Structure) -> bool:
    return countermodel(s) is None


def implies(p: Structure, q: Structure) -> bool:
    """Classical implication, checked as validity of [negate(p), q]."""
    from .structure import par

    return valid(par(negate(p), q))
