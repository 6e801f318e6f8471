"""Structures of the calculus of structures: terms, parsing, normal forms,
negation, one-hole contexts and capture-checked substitution.

The ASCII grammar (whitespace-insensitive):

    structure ::= "f" | "t" | atom | "-" structure
                | "[" structure ("," structure)+ "]"
                | "(" structure ("," structure)+ ")"
                | "!" ident "." structure | "?" ident "." structure
    atom      ::= ident [ "(" term ("," term)* ")" ]
    term      ::= ident [ "(" term ("," term)* ")" ]
    ident     ::= [a-z][a-zA-Z0-9_]*

"!" is the universal and "?" the existential quantifier, "-" is negation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator


class StructureError(Exception):
    """Base error for this module."""


class ParseError(StructureError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class CaptureError(StructureError):
    def __init__(self, binder: str, term: "Term"):
        super().__init__(f"substitution would be captured by binder {binder!r} for term {term}")
        self.binder = binder


class HoleError(StructureError):
    """A context had zero or several holes, or a hole under negation."""


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Term:
    """First-order term: a variable, or a function symbol applied to terms.

    Constants are arity-0 applications.  The variable flag distinguishes
    free variables from constants; normalization marks every occurrence
    bound by an enclosing quantifier as a variable.
    """

    name: str
    args: tuple[Term, ...] = ()
    variable: bool = False

    def __post_init__(self):
        if self.variable and self.args:
            raise StructureError(f"variable {self.name!r} cannot take arguments")

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(str(a) for a in self.args)})"


def var(name: str) -> Term:
    return Term(name, (), True)


def const(name: str, *args: Term) -> Term:
    return Term(name, tuple(args), False)


# ---------------------------------------------------------------------------
# structures


class Structure:
    """Base class; instances are immutable and hashable."""

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"<{to_text(self)}>"


@dataclass(frozen=True, repr=False)
class Unit(Structure):
    value: bool  # True is the unit "t", False is "f"


@dataclass(frozen=True, repr=False)
class Atom(Structure):
    name: str
    args: tuple[Term, ...] = ()
    negated: bool = False


@dataclass(frozen=True, repr=False)
class Par(Structure):
    parts: tuple[Structure, ...]


@dataclass(frozen=True, repr=False)
class Copar(Structure):
    parts: tuple[Structure, ...]


@dataclass(frozen=True, repr=False)
class Quant(Structure):
    universal: bool
    name: str
    body: Structure


@dataclass(frozen=True, repr=False)
class Neg(Structure):
    """Transient negation node; only exists between parse and normalize."""

    body: Structure


@dataclass(frozen=True, repr=False)
class Hole(Structure):
    pass


TRUE = Unit(True)
FALSE = Unit(False)
HOLE = Hole()


def atom(name: str, *args: Term, negated: bool = False) -> Atom:
    return Atom(name, tuple(args), negated)


# ---------------------------------------------------------------------------
# parsing

_IDENT_START = set("abcdefghijklmnopqrstuvwxyz")
_IDENT_CONT = _IDENT_START | set("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        if self.pos >= len(self.text) or self.text[self.pos] not in _IDENT_START:
            raise self.error("expected identifier")
        self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos] in _IDENT_CONT:
            self.pos += 1
        return self.text[start : self.pos]

    def term(self) -> Term:
        name = self.ident()
        if self.peek() == "(":
            self.pos += 1
            args = [self.term()]
            while self.peek() == ",":
                self.pos += 1
                args.append(self.term())
            self.expect(")")
            return Term(name, tuple(args))
        return Term(name)

    def structure(self) -> Structure:
        c = self.peek()
        if c == "":
            raise self.error("unexpected end of input")
        if c == "-":
            self.pos += 1
            return Neg(self.structure())
        if c == "[":
            self.pos += 1
            parts = [self.structure()]
            while self.peek() == ",":
                self.pos += 1
                parts.append(self.structure())
            self.expect("]")
            if len(parts) < 2:
                raise self.error("a disjunction needs at least two parts")
            return Par(tuple(parts))
        if c == "(":
            self.pos += 1
            parts = [self.structure()]
            while self.peek() == ",":
                self.pos += 1
                parts.append(self.structure())
            self.expect(")")
            if len(parts) < 2:
                raise self.error("a conjunction needs at least two parts")
            return Copar(tuple(parts))
        if c in "!?":
            self.pos += 1
            name = self.ident()
            self.expect(".")
            return Quant(c == "!", name, self.structure())
        name = self.ident()
        if name == "t":
            return TRUE
        if name == "f":
            return FALSE
        if self.peek() == "(":
            self.pos += 1
            args = [self.term()]
            while self.peek() == ",":
                self.pos += 1
                args.append(self.term())
            self.expect(")")
            return Atom(name, tuple(args))
        return Atom(name)


def parse(text: str) -> Structure:
    """Parse the ASCII grammar into a raw (unnormalized) structure tree."""
    p = _Parser(text)
    s = p.structure()
    p.skip_ws()
    if p.pos != len(p.text):
        raise p.error("trailing input")
    return s


# ---------------------------------------------------------------------------
# printing


def _term_text(t: Term) -> str:
    return str(t)


def to_text(s: Structure) -> str:
    """Canonical text; normalized input round-trips through parse."""
    match s:
        case Unit(value):
            return "t" if value else "f"
        case Atom(name, args, negated):
            body = name if not args else f"{name}({','.join(map(_term_text, args))})"
            return ("-" if negated else "") + body
        case Par(parts):
            return "[" + ",".join(to_text(p) for p in parts) + "]"
        case Copar(parts):
            return "(" + ",".join(to_text(p) for p in parts) + ")"
        case Quant(universal, name, body):
            return ("!" if universal else "?") + name + "." + to_text(body)
        case Neg(body):
            return "-" + to_text(body)
        case Hole():
            return "_"
    raise StructureError(f"cannot print {s!r}")


# ---------------------------------------------------------------------------
# ordering key (alpha-insensitive, used for canonical child order and
# equivalence); bound variables are keyed by binder depth, De Bruijn style

_KIND = {Unit: 0, Atom: 1, Par: 2, Copar: 3, Quant: 4, Hole: 6, Neg: 7}


def _term_key(t: Term, env: dict[str, int]):
    if t.name in env and not t.args:
        return ("b", env[t.name])
    if t.variable:
        return ("v", t.name)
    return ("f", t.name, tuple(_term_key(a, env) for a in t.args))


def _key(s: Structure, env: dict[str, int], depth: int):
    match s:
        case Unit(value):
            return (0, value)
        case Atom(name, args, negated):
            return (1, name, tuple(_term_key(a, env) for a in args), negated)
        case Par(parts):
            return (2, tuple(sorted(_key(p, env, depth) for p in parts)))
        case Copar(parts):
            return (3, tuple(sorted(_key(p, env, depth) for p in parts)))
        case Quant(universal, name, body):
            return (5 if universal else 4, _key(body, {**env, name: depth}, depth + 1))
        case Hole():
            return (6,)
        case Neg(body):
            return (7, _key(body, env, depth))
    raise StructureError(f"cannot key {s!r}")


def structure_key(s: Structure):
    """Total, alpha-insensitive ordering key (unit < atom < par < copar <
    exists < forall, then lexicographic)."""
    return _key(s, {}, 0)


# ---------------------------------------------------------------------------
# negation-normal form and normalization


def _push_neg(s: Structure, positive: bool) -> Structure:
    match s:
        case Neg(body):
            return _push_neg(body, not positive)
        case _ if positive:
            match s:
                case Par(parts):
                    return Par(tuple(_push_neg(p, True) for p in parts))
                case Copar(parts):
                    return Copar(tuple(_push_neg(p, True) for p in parts))
                case Quant(u, n, b):
                    return Quant(u, n, _push_neg(b, True))
                case _:
                    return s
        case Unit(value):
            return Unit(not value)
        case Atom(name, args, negated):
            return Atom(name, args, not negated)
        case Par(parts):
            return Copar(tuple(_push_neg(p, False) for p in parts))
        case Copar(parts):
            return Par(tuple(_push_neg(p, False) for p in parts))
        case Quant(u, n, b):
            return Quant(not u, n, _push_neg(b, False))
        case Hole():
            raise HoleError("hole must not appear in the scope of a negation")
    raise StructureError(f"cannot negate {s!r}")


def _occurring_unbound(s: Structure, bound: frozenset[str]) -> frozenset[str]:
    """Names occurring (in term position) not bound within s, flag-blind."""

    def term_names(t: Term) -> Iterator[str]:
        if not t.args:
            yield t.name
        else:
            for a in t.args:
                yield from term_names(a)

    match s:
        case Atom(_, args, _):
            return frozenset(n for a in args for n in term_names(a)) - bound
        case Par(parts) | Copar(parts):
            out: frozenset[str] = frozenset()
            for p in parts:
                out |= _occurring_unbound(p, bound)
            return out
        case Quant(_, name, body):
            return _occurring_unbound(body, bound | {name})
        case Neg(body):
            return _occurring_unbound(body, bound)
        case _:
            return frozenset()


def _rebind_term(t: Term, bound: frozenset[str]) -> Term:
    if not t.args:
        if t.name in bound:
            return t if t.variable else Term(t.name, (), True)
        return t
    return Term(t.name, tuple(_rebind_term(a, bound) for a in t.args), False)


def _norm(s: Structure, bound: frozenset[str]) -> Structure:
    match s:
        case Unit():
            return s
        case Hole():
            return s
        case Atom(name, args, negated):
            return Atom(name, tuple(_rebind_term(a, bound) for a in args), negated)
        case Quant(universal, name, body):
            b = _norm(body, bound | {name})
            if name not in _occurring_unbound(b, frozenset()):
                return b
            return Quant(universal, name, b)
        case Par(parts) | Copar(parts):
            is_par = isinstance(s, Par)
            flat: list[Structure] = []
            for p in parts:
                q = _norm(p, bound)
                if isinstance(q, Par) and is_par:
                    flat.extend(q.parts)
                elif isinstance(q, Copar) and not is_par:
                    flat.extend(q.parts)
                else:
                    flat.append(q)
            # unit laws: [f,R]=R, (t,R)=R, [t,t]=t, (f,f)=f
            absorbed = TRUE if is_par else FALSE
            dropped = FALSE if is_par else TRUE
            kept = [q for q in flat if q != dropped]
            n_absorbed = sum(1 for q in kept if q == absorbed)
            if n_absorbed > 1:
                kept = [q for q in kept if q != absorbed]
                kept.append(absorbed)
            if not kept:
                return dropped
            if len(kept) == 1:
                return kept[0]
            kept.sort(key=structure_key)
            return Par(tuple(kept)) if is_par else Copar(tuple(kept))
        case Neg():
            raise StructureError("negation must be pushed before _norm")
    raise StructureError(f"cannot normalize {s!r}")


def normalize(s: Structure) -> Structure:
    """Equivalence-preserving normal form: negation on atoms only, nested
    pars/copars flattened, unit laws applied, vacuous quantifiers dropped,
    children in canonical order."""
    return _norm(_push_neg(s, True), frozenset())


def negate(s: Structure) -> Structure:
    """De Morgan dual of a normalized structure, normalized."""
    return normalize(Neg(s))


def equivalent(a: Structure, b: Structure) -> bool:
    """Syntactic equivalence: equal normal forms up to bound-variable names."""
    return structure_key(normalize(a)) == structure_key(normalize(b))


# ---------------------------------------------------------------------------
# free variables and substitution


def free_vars(s: Structure) -> frozenset[str]:
    """Names of variable occurrences not bound within s."""

    def walk_term(t: Term, bound: frozenset[str]) -> Iterator[str]:
        if not t.args:
            if t.variable and t.name not in bound:
                yield t.name
        else:
            for a in t.args:
                yield from walk_term(a, bound)

    def walk(s: Structure, bound: frozenset[str]) -> Iterator[str]:
        match s:
            case Atom(_, args, _):
                for a in args:
                    yield from walk_term(a, bound)
            case Par(parts) | Copar(parts):
                for p in parts:
                    yield from walk(p, bound)
            case Quant(_, name, body):
                yield from walk(body, bound | {name})
            case Neg(body):
                yield from walk(body, bound)

    return frozenset(walk(s, frozenset()))


def _term_names(t: Term) -> frozenset[str]:
    if not t.args:
        return frozenset((t.name,))
    out: frozenset[str] = frozenset()
    for a in t.args:
        out |= _term_names(a)
    return out


def _subst_term(t: Term, name: str, repl: Term) -> Term:
    if not t.args:
        return repl if t.name == name else t
    return Term(t.name, tuple(_subst_term(a, name, repl) for a in t.args), False)


def substitute(s: Structure, name: str, repl: Term) -> Structure:
    """Replace free occurrences of name by repl; error when a quantifier in s
    would capture a variable of repl (repl must be free for name in s)."""
    repl_names = _term_names(repl)

    def contains_free(s: Structure) -> bool:
        return name in _occurring_unbound(s, frozenset())

    def walk(s: Structure) -> Structure:
        match s:
            case Atom(an, args, negated):
                return Atom(an, tuple(_subst_term(a, name, repl) for a in args), negated)
            case Par(parts):
                return Par(tuple(walk(p) for p in parts))
            case Copar(parts):
                return Copar(tuple(walk(p) for p in parts))
            case Quant(u, qn, body):
                if qn == name:
                    return s
                if qn in repl_names and contains_free(body):
                    raise CaptureError(qn, repl)
                return Quant(u, qn, walk(body))
            case Neg(body):
                return Neg(walk(body))
            case _:
                return s

    return normalize(walk(s))


def rename_binder(s: Structure, old: str, new: str) -> Structure:
    """Alpha-rename: every quantifier binding old is rebound to new.
    new must not occur in the respective body."""

    def walk(s: Structure) -> Structure:
        match s:
            case Quant(u, qn, body):
                if qn == old:
                    return Quant(u, new, walk_subst(body))
                return Quant(u, qn, walk(body))
            case Par(parts):
                return Par(tuple(walk(p) for p in parts))
            case Copar(parts):
                return Copar(tuple(walk(p) for p in parts))
            case Neg(body):
                return Neg(walk(body))
            case _:
                return s

    def walk_subst(s: Structure) -> Structure:
        match s:
            case Atom(an, args, negated):
                return Atom(an, tuple(_subst_term(a, old, var(new)) for a in args), negated)
            case Quant(u, qn, body):
                if qn == old:
                    return s
                return Quant(u, qn, walk_subst(body))
            case Par(parts):
                return Par(tuple(walk_subst(p) for p in parts))
            case Copar(parts):
                return Copar(tuple(walk_subst(p) for p in parts))
            case Neg(body):
                return Neg(walk_subst(body))
            case _:
                return s

    return normalize(walk(s))


# ---------------------------------------------------------------------------
# contexts: one-hole structures, plugging, decompositions


def count_holes(s: Structure) -> int:
    match s:
        case Hole():
            return 1
        case Par(parts) | Copar(parts):
            return sum(count_holes(p) for p in parts)
        case Quant(_, _, body) | Neg(body):
            return count_holes(body)
        case _:
            return 0


def _fill(s: Structure, filler: Structure) -> Structure:
    match s:
        case Hole():
            return filler
        case Par(parts):
            return Par(tuple(_fill(p, filler) for p in parts))
        case Copar(parts):
            return Copar(tuple(_fill(p, filler) for p in parts))
        case Quant(u, n, body):
            return Quant(u, n, _fill(body, filler))
        case Neg(body):
            return Neg(_fill(body, filler))
        case _:
            return s


def plug(context: Structure, filler: Structure) -> Structure:
    """Fill the unique hole of context with filler and normalize.  Quantifiers
    in the context may capture free variables of the filler."""
    n = count_holes(context)
    if n != 1:
        raise HoleError(f"context must have exactly one hole, found {n}")
    return normalize(_fill(context, filler))


def hole_path(context: Structure) -> tuple[int, ...]:
    """Child-index path from the root of the context to its hole."""

    def walk(s: Structure) -> tuple[int, ...] | None:
        match s:
            case Hole():
                return ()
            case Par(parts) | Copar(parts):
                for i, p in enumerate(parts):
                    sub = walk(p)
                    if sub is not None:
                        return (i,) + sub
                return None
            case Quant(_, _, body) | Neg(body):
                sub = walk(body)
                return None if sub is None else (0,) + sub
            case _:
                return None

    path = walk(context)
    if path is None:
        raise HoleError("context has no hole")
    return path


def _subsets(n: int) -> Iterator[tuple[int, ...]]:
    # proper sub-multisets of size >= 2 (by index), deterministic order
    for mask in range(1, 1 << n):
        idx = tuple(i for i in range(n) if mask >> i & 1)
        if 2 <= len(idx) < n:
            yield idx


@lru_cache(maxsize=65536)
def decompositions(s: Structure) -> tuple[tuple[Structure, Structure], ...]:
    """All (context, filler) pairs with plug(context, filler) == s, including
    the trivial pair and sub-multiset regroupings of par/copar children."""
    out: list[tuple[Structure, Structure]] = [(HOLE, s)]
    seen = {(HOLE, s)}

    def add(ctx: Structure, fill: Structure):
        if (ctx, fill) not in seen:
            seen.add((ctx, fill))
            out.append((ctx, fill))

    match s:
        case Par(parts) | Copar(parts):
            cls = type(s)
            for i, p in enumerate(parts):
                rest = parts[:i] + parts[i + 1 :]
                for sub_ctx, fill in decompositions(p):
                    add(cls(rest + (sub_ctx,)), fill)
            n = len(parts)
            for idx in _subsets(n):
                chosen = tuple(parts[i] for i in idx)
                rest = tuple(parts[i] for i in range(n) if i not in idx)
                add(cls(rest + (HOLE,)), cls(chosen))
        case Quant(u, name, body):
            for sub_ctx, fill in decompositions(body):
                add(Quant(u, name, sub_ctx), fill)
    return tuple(out)


# ---------------------------------------------------------------------------
# small helpers used across the package


def count_leaves(s: Structure) -> int:
    """Number of unit and atom occurrences."""
    match s:
        case Par(parts) | Copar(parts):
            return sum(count_leaves(p) for p in parts)
        case Quant(_, _, body) | Neg(body):
            return count_leaves(body)
        case _:
            return 1


def atoms_of(s: Structure) -> frozenset[Atom]:
    match s:
        case Atom():
            return frozenset((s,))
        case Par(parts) | Copar(parts):
            out: frozenset[Atom] = frozenset()
            for p in parts:
                out |= atoms_of(p)
            return out
        case Quant(_, _, body) | Neg(body):
            return atoms_of(body)
        case _:
            return frozenset()


def atom_names(s: Structure) -> frozenset[str]:
    return frozenset(a.name for a in atoms_of(s))


def subterms_of(s: Structure) -> frozenset[Term]:
    """All terms (with their subterms) occurring in atom arguments."""

    def term_closure(t: Term) -> Iterator[Term]:
        yield t
        for a in t.args:
            yield from term_closure(a)

    out: set[Term] = set()
    for a in atoms_of(s):
        for t in a.args:
            out.update(term_closure(t))
    return frozenset(out)


def function_signature(s: Structure) -> frozenset[tuple[str, int]]:
    """Function symbols with arities occurring in atom arguments."""
    return frozenset((t.name, len(t.args)) for t in subterms_of(s) if not t.variable)


def binder_names(s: Structure) -> frozenset[str]:
    match s:
        case Quant(_, name, body):
            return binder_names(body) | {name}
        case Par(parts) | Copar(parts):
            out: frozenset[str] = frozenset()
            for p in parts:
                out |= binder_names(p)
            return out
        case Neg(body):
            return binder_names(body)
        case _:
            return frozenset()


def is_quantified(s: Structure) -> bool:
    match s:
        case Quant():
            return True
        case Par(parts) | Copar(parts):
            return any(is_quantified(p) for p in parts)
        case Neg(body):
            return is_quantified(body)
        case _:
            return False


def par(*parts: Structure) -> Structure:
    """Normalized n-ary disjunction (identity on a single part)."""
    if len(parts) == 1:
        return normalize(parts[0])
    return normalize(Par(tuple(parts))) if parts else FALSE


def copar(*parts: Structure) -> Structure:
    """Normalized n-ary conjunction (identity on a single part)."""
    if len(parts) == 1:
        return normalize(parts[0])
    return normalize(Copar(tuple(parts))) if parts else TRUE


def fresh_name(base: str, taken: frozenset[str] | set[str]) -> str:
    if base not in taken:
        return base
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"
