"""Inference-rule catalogue for the SKS family: duality, system membership,
instance validation, and deep matching modulo the equational theory.

Rule ids (premise over conclusion, read top-down):

    id   S{t} -> S[R,-R]            iu   S(R,-R) -> S{f}
    aid  S{t} -> S[a,-a]            aiu  S(a,-a) -> S{f}
    s    S([R,U],T) -> S[(R,T),U]
    m    S[(R,U),(T,V)] -> S([R,T],[U,V])
    wd   S{f} -> S{R}               wu   S{R} -> S{t}
    awd  S{f} -> S{a}               awu  S{a} -> S{t}
    cd   S[R,R] -> S{R}             cu   S{R} -> S(R,R)
    acd  S[a,a] -> S{a}             acu  S{a} -> S(a,a)
    ud   S{!x[R,T]} -> S[!xR,?xT]   uu   S(?xR,!xT) -> S{?x(R,T)}
    nd   S{R(x/t)} -> S{?xR}        nu   S{!xR} -> S{R(x/t)}
    m1d  S[?xR,?xT] -> S{?x[R,T]}   m1u  S{!x(R,T)} -> S(!xR,!xT)
    m2d  S[!xR,!xT] -> S{!x[R,T]}   m2u  S{?x(R,T)} -> S(?xR,?xT)
    dd   S([R,T],[R,U]) -> S[R,(T,U)]
    du   S(R,[T,U]) -> S[(R,T),(R,U)]
    ssd  S{T{R}} -> S[R,T{f}]       ssu  S(R,T{t}) -> S{T{R}}
    aisd S -> (S,A[a,-a])           aisu [S,E(a,-a)] -> S
    n1d  S{?y1..yn R(x/f(y1..yn))} -> S{?xR}
    n1u  S{!xR} -> S{!y1..yn R(x/f(y1..yn))}
    n2d  S{R} -> S{?xR} (x not in R)    n2u  S{R} -> S{!xR} dually
    eq   R -> T for equivalent R, T

aisd/aisu are shallow (root only); a "A"/"E" prefix closes the atom pair
universally/existentially over its free variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .structure import (
    FALSE,
    HOLE,
    TRUE,
    Atom,
    Copar,
    Hole,
    Par,
    Quant,
    Structure,
    Term,
    Unit,
    _fill,
    _occurring_unbound,
    atoms_of,
    binder_names,
    copar,
    count_holes,
    decompositions,
    equivalent,
    fresh_name,
    function_signature,
    hole_path,
    negate,
    par,
    plug,
    rename_binder,
    structure_key,
    substitute,
    subterms_of,
    var,
)

RuleId = str
SystemId = str


class RuleError(Exception):
    pass


DUAL: dict[RuleId, RuleId] = {
    "id": "iu", "aid": "aiu", "wd": "wu", "awd": "awu", "cd": "cu", "acd": "acu",
    "s": "s", "m": "m", "ud": "uu", "nd": "nu", "m1d": "m1u", "m2d": "m2u",
    "dd": "du", "ssd": "ssu", "aisd": "aisu", "n1d": "n1u", "n2d": "n2u",
    "eq": "eq",
}
DUAL.update({v: k for k, v in list(DUAL.items())})

ALL_RULES: frozenset[RuleId] = frozenset(DUAL)

# exact figure contents; eq belongs to every system
SYSTEMS: dict[SystemId, frozenset[RuleId]] = {
    "SKSg": frozenset({"id", "iu", "s", "wd", "wu", "cd", "cu", "eq"}),
    "KSg": frozenset({"id", "s", "wd", "cd", "eq"}),
    "SKS": frozenset({"aid", "aiu", "s", "m", "awd", "awu", "acd", "acu", "eq"}),
    "KS": frozenset({"aid", "awd", "acd", "s", "m", "eq"}),
}
SYSTEMS["SKSgq"] = SYSTEMS["SKSg"] | {"ud", "uu", "nd", "nu"}
SYSTEMS["KSgq"] = SYSTEMS["KSg"] | {"ud", "nd"}
SYSTEMS["SKSq"] = SYSTEMS["SKS"] | {"ud", "uu", "nd", "nu", "m1d", "m1u", "m2d", "m2u"}
SYSTEMS["KSq"] = SYSTEMS["KS"] | {"ud", "nd", "m1d", "m2d"}
# extended variants admitting the derived/auxiliary rules
SYSTEMS["SKSx"] = SYSTEMS["SKS"] | {"aisd", "aisu", "ssd", "ssu", "dd", "du"}
SYSTEMS["SKSqx"] = SYSTEMS["SKSq"] | {"aisd", "aisu", "ssd", "ssu", "n1d", "n1u", "n2d", "n2u"}


def system_rules(sys: SystemId | frozenset[RuleId]) -> frozenset[RuleId]:
    if isinstance(sys, frozenset):
        return sys | {"eq"}
    try:
        return SYSTEMS[sys]
    except KeyError:
        raise RuleError(f"unknown system {sys!r}") from None


def dual_rule(r: RuleId) -> RuleId:
    try:
        return DUAL[r]
    except KeyError:
        raise RuleError(f"unknown rule {r!r}") from None


@dataclass(frozen=True)
class RuleInstance:
    rule: RuleId
    premise: Structure
    conclusion: Structure
    position: tuple[int, ...] | None = field(default=None, compare=False)
    binding: tuple[tuple[str, object], ...] | None = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"{self.premise}  --{self.rule}-->  {self.conclusion}"


# rules whose schema variables may all be instantiated with units, making
# premise and conclusion equivalent; such degenerate instances are accepted
_UNIT_DEGENERATE = ALL_RULES - {"aid", "aiu", "awd", "awu", "acd", "acu", "aisd", "aisu"}


def _same(a: Structure, b: Structure) -> bool:
    return a == b or structure_key(a) == structure_key(b)


def _splits2(parts: tuple[Structure, ...]) -> Iterator[tuple[Structure, Structure]]:
    """Ordered two-part multiset splits, each part rebuilt with par/copar by
    the caller."""
    n = len(parts)
    for mask in range(1, (1 << n) - 1):
        left = tuple(parts[i] for i in range(n) if mask >> i & 1)
        right = tuple(parts[i] for i in range(n) if not mask >> i & 1)
        yield left, right


def _is_unit(s: Structure) -> bool:
    return isinstance(s, Unit)


def _pairs(parts: tuple[Structure, ...]) -> Iterator[tuple[Structure, Structure]]:
    for i in range(len(parts)):
        for j in range(len(parts)):
            if i != j:
                yield parts[i], parts[j]


def _atom_universe(ss: tuple[Structure, ...], extra) -> list[Atom]:
    seen: dict = {}
    for s in ss:
        for a in sorted(atoms_of(s), key=structure_key):
            seen.setdefault((a.name, a.args), None)
    for a in extra:
        if isinstance(a, str):
            seen.setdefault((a, ()), None)
        elif isinstance(a, Atom):
            seen.setdefault((a.name, a.args), None)
    return [Atom(name, args) for name, args in seen]


def _term_universe(ss: tuple[Structure, ...], extra) -> list[Term]:
    out: dict[Term, None] = {}
    for s in ss:
        for t in sorted(subterms_of(s), key=str):
            out.setdefault(t, None)
        for n in sorted(binder_names(s)):
            out.setdefault(var(n), None)
    for t in extra:
        out.setdefault(t, None)
    return list(out)


def _dual_atom(a: Atom) -> Atom:
    return Atom(a.name, a.args, not a.negated)


def _complementary(x: Structure, y: Structure) -> bool:
    return (
        isinstance(x, Atom)
        and isinstance(y, Atom)
        and x.name == y.name
        and x.args == y.args
        and x.negated != y.negated
    )


def _unit_positions(s: Structure, unit: Unit) -> Iterator[Structure]:
    """Contexts c with plug(c, unit) equivalent to s: literal occurrences
    plus invisible positions absorbed by the unit laws."""
    wrapper = Par if unit is FALSE else Copar
    for ctx, fill in decompositions(s):
        if fill == unit:
            yield ctx
        yield _fill(ctx, wrapper((HOLE, fill)))


def _quant_body(s: Structure, universal: bool, want: str | None = None):
    """View s as Q-want-bound body, treating missing quantifiers as vacuous.

    Returns (x, body) or None; when want is given the binder is renamed to it.
    """
    if isinstance(s, Quant) and s.universal == universal:
        if want is None or want == s.name:
            return s.name, s.body
        if want in _occurring_unbound(s.body, frozenset()):
            return None
        renamed = rename_binder(Quant(s.universal, s.name, s.body), s.name, want)
        if isinstance(renamed, Quant):
            return want, renamed.body
        return want, renamed  # binder became vacuous
    if want is not None:
        if want in _occurring_unbound(s, frozenset()):
            return None
        return want, s
    return None


def _nested_exists(names: list[str], body: Structure) -> Structure:
    for n in reversed(names):
        body = Quant(False, n, body)
    return body


def _nested_forall(names: list[str], body: Structure) -> Structure:
    for n in reversed(names):
        body = Quant(True, n, body)
    return body


def _binders_on_hole_path(ctx: Structure) -> frozenset[str]:
    match ctx:
        case Quant(_, name, body):
            if count_holes(body):
                return _binders_on_hole_path(body) | {name}
            return frozenset()
        case Par(parts) | Copar(parts):
            for p in parts:
                if count_holes(p):
                    return _binders_on_hole_path(p)
            return frozenset()
        case _:
            return frozenset()


def _free_names(s: Structure) -> frozenset[str]:
    return _occurring_unbound(s, frozenset())


def _strip_closure(s: Structure, universal: bool) -> tuple[list[str], Structure]:
    names: list[str] = []
    while isinstance(s, Quant) and s.universal == universal:
        names.append(s.name)
        s = s.body
    return names, s


def _closed_atom_pair(s: Structure, universal: bool) -> Atom | None:
    """Recognize a (possibly quantifier-closed) complementary atom pair."""
    _, body = _strip_closure(s, universal)
    cls = Par if universal else Copar
    if isinstance(body, cls) and len(body.parts) == 2 and _complementary(*body.parts):
        if not _free_names(s):
            return body.parts[0] if not body.parts[0].negated else body.parts[1]
    return None


def _close_atom_pair(a: Atom, universal: bool) -> Structure:
    pair = Par((a, _dual_atom(a))) if universal else Copar((a, _dual_atom(a)))
    names = sorted(_free_names(pair))
    return _nested_forall(names, pair) if universal else _nested_exists(names, pair)


# ---------------------------------------------------------------------------
# per-rule enumeration
#
# _down(rule, P, ...) yields instances with the given premise;
# _up(rule, C, ...) yields instances with the given conclusion.
# Instances are constructed by plugging, so both sides are normalized and
# definitionally correct for the schema.


def _inst(rule, premise, conclusion, ctx=None, binding=None) -> RuleInstance:
    pos = hole_path(ctx) if ctx is not None and not isinstance(ctx, Hole) else ()
    b = tuple(binding.items()) if binding else None
    return RuleInstance(rule, premise, conclusion, pos if ctx is not None else None, b)


def _down(rule: RuleId, P: Structure, atoms=(), terms=(), degenerate=False) -> Iterator[RuleInstance]:
    D = decompositions(P)
    if rule == "eq":
        yield _inst("eq", P, P)
        return
    if rule in ("id", "aid"):
        for a in _atom_universe((P,), atoms):
            pair = Par((a, _dual_atom(a)))
            for ctx in _unit_positions(P, TRUE):
                yield _inst(rule, P, plug(ctx, pair), ctx, {"a": a})
        return
    if rule in ("iu", "aiu"):
        for ctx, fill in D:
            if isinstance(fill, Copar) and len(fill.parts) == 2 and _complementary(*fill.parts):
                yield _inst(rule, P, plug(ctx, FALSE), ctx, {"a": fill.parts[0]})
        if rule == "iu":
            for ctx, fill in D:
                if isinstance(fill, Copar):
                    for left, right in _splits2(fill.parts):
                        L, R = copar(*left), copar(*right)
                        if _same(negate(L), R):
                            yield _inst("iu", P, plug(ctx, FALSE), ctx, {"R": L})
        return
    if rule in ("wd", "awd"):
        universe = _atom_universe((P,), atoms)
        fillers: list[Structure] = [a for u in universe for a in (u, _dual_atom(u))]
        for ctx in _unit_positions(P, FALSE):
            for R in fillers:
                yield _inst(rule, P, plug(ctx, R), ctx, {"R": R})
        return
    if rule in ("wu", "awu"):
        for ctx, fill in D:
            if rule == "awu" and not isinstance(fill, Atom):
                continue
            if rule == "wu" and _is_unit(fill) and not degenerate:
                continue
            yield _inst(rule, P, plug(ctx, TRUE), ctx, {"R": fill})
        return
    if rule in ("cd", "acd"):
        for ctx, fill in D:
            if isinstance(fill, Par):
                if rule == "acd":
                    if len(fill.parts) == 2 and isinstance(fill.parts[0], Atom) and fill.parts[0] == fill.parts[1]:
                        yield _inst("acd", P, plug(ctx, fill.parts[0]), ctx, {"a": fill.parts[0]})
                else:
                    for left, right in _splits2(fill.parts):
                        L, R = par(*left), par(*right)
                        if _same(L, R):
                            yield _inst("cd", P, plug(ctx, L), ctx, {"R": L})
        return
    if rule in ("cu", "acu"):
        for ctx, fill in D:
            if rule == "acu":
                if isinstance(fill, Atom):
                    yield _inst("acu", P, plug(ctx, Copar((fill, fill))), ctx, {"a": fill})
            else:
                if _is_unit(fill) and not degenerate:
                    continue
                yield _inst("cu", P, plug(ctx, copar(fill, fill)), ctx, {"R": fill})
        return
    if rule == "s":
        for ctx, fill in D:
            if not isinstance(fill, Copar):
                continue
            for i, child in enumerate(fill.parts):
                if not isinstance(child, Par):
                    continue
                rest = fill.parts[:i] + fill.parts[i + 1 :]
                T = copar(*rest)
                if _is_unit(T) and not degenerate:
                    continue
                for left, right in _splits2(child.parts):
                    R, U = par(*left), par(*right)
                    if not degenerate and (_is_unit(R) or _is_unit(U)):
                        continue
                    yield _inst("s", P, plug(ctx, par(copar(R, T), U)), ctx, {"R": R, "U": U, "T": T})
        return
    if rule == "m":
        for ctx, fill in D:
            if not isinstance(fill, Par) or len(fill.parts) != 2:
                continue
            c1, c2 = fill.parts
            if not (isinstance(c1, Copar) and isinstance(c2, Copar)):
                continue
            for l1, r1 in _splits2(c1.parts):
                for l2, r2 in _splits2(c2.parts):
                    R, U = copar(*l1), copar(*r1)
                    T, V = copar(*l2), copar(*r2)
                    if not degenerate and any(map(_is_unit, (R, U, T, V))):
                        continue
                    yield _inst("m", P, plug(ctx, copar(par(R, T), par(U, V))), ctx,
                                {"R": R, "U": U, "T": T, "V": V})
        return
    if rule == "ud":
        for ctx, fill in D:
            got = _quant_body(fill, True)
            if not got:
                continue
            x, body = got
            if not isinstance(body, Par):
                continue
            for left, right in _splits2(body.parts):
                R, T = par(*left), par(*right)
                conc = plug(ctx, par(Quant(True, x, R), Quant(False, x, T)))
                yield _inst("ud", P, conc, ctx, {"x": x, "R": R, "T": T})
        return
    if rule == "uu":
        for ctx, fill in D:
            if not isinstance(fill, Copar) or len(fill.parts) != 2:
                continue
            for c1, c2 in _pairs(fill.parts):
                g1 = _quant_body(c1, False)
                if not g1:
                    continue
                x, R = g1
                g2 = _quant_body(c2, True, want=x)
                if not g2:
                    continue
                _, T = g2
                conc = plug(ctx, Quant(False, x, copar(R, T)))
                yield _inst("uu", P, conc, ctx, {"x": x, "R": R, "T": T})
        return
    if rule == "nd":
        for ctx, fill in D:
            for t in _term_universe((fill,), terms):
                for R, x in _abstractions(fill, t):
                    conc = plug(ctx, Quant(False, x, R))
                    try:
                        back = substitute(R, x, t)
                    except Exception:
                        continue
                    if _same(back, fill):
                        yield _inst("nd", P, conc, ctx, {"x": x, "t": t})
        return
    if rule == "nu":
        for ctx, fill in D:
            got = _quant_body(fill, True)
            if not got:
                continue
            x, R = got
            for t in _term_universe((P,), terms):
                try:
                    conc = plug(ctx, substitute(R, x, t))
                except Exception:
                    continue
                yield _inst("nu", P, conc, ctx, {"x": x, "t": t})
        return
    if rule in ("m1d", "m2d"):
        universal = rule == "m2d"
        for ctx, fill in D:
            if not isinstance(fill, Par) or len(fill.parts) != 2:
                continue
            for c1, c2 in _pairs(fill.parts):
                g1 = _quant_body(c1, universal)
                if not g1:
                    continue
                x, R = g1
                g2 = _quant_body(c2, universal, want=x)
                if not g2:
                    continue
                _, T = g2
                conc = plug(ctx, Quant(universal, x, par(R, T)))
                yield _inst(rule, P, conc, ctx, {"x": x, "R": R, "T": T})
        return
    if rule in ("m1u", "m2u"):
        universal = rule == "m1u"
        for ctx, fill in D:
            got = _quant_body(fill, universal)
            if not got:
                continue
            x, body = got
            if not isinstance(body, Copar):
                continue
            for left, right in _splits2(body.parts):
                R, T = copar(*left), copar(*right)
                conc = plug(ctx, copar(Quant(universal, x, R), Quant(universal, x, T)))
                yield _inst(rule, P, conc, ctx, {"x": x, "R": R, "T": T})
        return
    if rule == "dd":
        for ctx, fill in D:
            if not isinstance(fill, Copar) or len(fill.parts) != 2:
                continue
            c1, c2 = fill.parts
            if not (isinstance(c1, Par) and isinstance(c2, Par)):
                continue
            for l1, r1 in _splits2(c1.parts):
                R1, T = par(*l1), par(*r1)
                for l2, r2 in _splits2(c2.parts):
                    R2, U = par(*l2), par(*r2)
                    if not _same(R1, R2):
                        continue
                    if not degenerate and any(map(_is_unit, (R1, T, U))):
                        continue
                    yield _inst("dd", P, plug(ctx, par(R1, copar(T, U))), ctx, {"R": R1, "T": T, "U": U})
        return
    if rule == "du":
        for ctx, fill in D:
            if not isinstance(fill, Copar):
                continue
            for i, child in enumerate(fill.parts):
                if not isinstance(child, Par):
                    continue
                R = copar(*(fill.parts[:i] + fill.parts[i + 1 :]))
                for left, right in _splits2(child.parts):
                    T, U = par(*left), par(*right)
                    if not degenerate and any(map(_is_unit, (R, T, U))):
                        continue
                    yield _inst("du", P, plug(ctx, par(copar(R, T), copar(R, U))), ctx,
                                {"R": R, "T": T, "U": U})
        return
    if rule == "ssd":
        for ctx, fill in D:
            for tctx, R in decompositions(fill):
                if isinstance(tctx, Hole):
                    continue
                if _binders_on_hole_path(tctx) & _free_names(R):
                    continue
                if _is_unit(R) and not degenerate:
                    continue
                conc = plug(ctx, par(R, plug(tctx, FALSE)))
                yield _inst("ssd", P, conc, ctx, {"R": R})
        return
    if rule == "ssu":
        for ctx, fill in D:
            if not isinstance(fill, Copar):
                continue
            for left, right in _splits2(fill.parts):
                R = copar(*left)
                W = copar(*right)
                if _is_unit(R) and not degenerate:
                    continue
                for tctx in _unit_positions(W, TRUE):
                    if _binders_on_hole_path(tctx) & _free_names(R):
                        continue
                    yield _inst("ssu", P, plug(ctx, plug(tctx, R)), ctx, {"R": R})
        return
    if rule == "aisd":
        for a in _atom_universe((P,), atoms):
            block = _close_atom_pair(a, True)
            yield _inst("aisd", P, copar(P, block), None, {"a": a})
        return
    if rule == "aisu":
        if isinstance(P, Par):
            for i, child in enumerate(P.parts):
                a = _closed_atom_pair(child, False)
                if a is not None:
                    rest = P.parts[:i] + P.parts[i + 1 :]
                    yield _inst("aisu", P, par(*rest), None, {"a": a})
        else:
            a = _closed_atom_pair(P, False)
            if a is not None:
                yield _inst("aisu", P, FALSE, None, {"a": a})
        return
    if rule == "n1d":
        sig = sorted(function_signature(P) | {(t.name, len(t.args)) for t in terms if not t.variable})
        for ctx, fill in D:
            names, body = _strip_closure(fill, False)
            for k in range(len(names) + 1):
                ys, inner = names[:k], _nested_exists(names[k:], body)
                for fname, arity in sig:
                    if arity != k:
                        continue
                    t = Term(fname, tuple(var(y) for y in ys))
                    for R, x in _abstractions(inner, t):
                        if any(y in _free_names(Quant(False, x, R)) for y in ys):
                            continue
                        conc = plug(ctx, Quant(False, x, R))
                        try:
                            back = substitute(R, x, t)
                        except Exception:
                            continue
                        if _same(_nested_exists(ys, back), fill):
                            yield _inst("n1d", P, conc, ctx, {"x": x, "t": t})
        return
    if rule == "n1u":
        sig = sorted(function_signature(P) | {(t.name, len(t.args)) for t in terms if not t.variable})
        for ctx, fill in D:
            got = _quant_body(fill, True)
            if not got:
                continue
            x, R = got
            taken = _free_names(R) | binder_names(R) | {x}
            for fname, arity in sig:
                ys = []
                for _ in range(arity):
                    y = fresh_name("y", taken | set(ys))
                    ys.append(y)
                t = Term(fname, tuple(var(y) for y in ys))
                try:
                    body = substitute(R, x, t)
                except Exception:
                    continue
                yield _inst("n1u", P, plug(ctx, _nested_forall(ys, body)), ctx, {"x": x, "t": t})
        return
    if rule in ("n2d", "n2u"):
        yield _inst(rule, P, P)
        return
    raise RuleError(f"unknown rule {rule!r}")


def _up(rule: RuleId, C: Structure, atoms=(), terms=(), degenerate=False) -> Iterator[RuleInstance]:
    D = decompositions(C)
    if rule == "eq":
        yield _inst("eq", C, C)
        return
    if rule in ("id", "aid"):
        for ctx, fill in D:
            if isinstance(fill, Par):
                if len(fill.parts) == 2 and _complementary(*fill.parts):
                    yield _inst(rule, plug(ctx, TRUE), C, ctx, {"a": fill.parts[0]})
                if rule == "id":
                    for left, right in _splits2(fill.parts):
                        L, R = par(*left), par(*right)
                        if _same(negate(L), R):
                            yield _inst("id", plug(ctx, TRUE), C, ctx, {"R": L})
        return
    if rule in ("iu", "aiu"):
        for a in _atom_universe((C,), atoms):
            pair = Copar((a, _dual_atom(a)))
            for ctx in _unit_positions(C, FALSE):
                yield _inst(rule, plug(ctx, pair), C, ctx, {"a": a})
        return
    if rule in ("wd", "awd"):
        for ctx, fill in D:
            if rule == "awd" and not isinstance(fill, Atom):
                continue
            if rule == "wd" and _is_unit(fill) and not degenerate:
                continue
            yield _inst(rule, plug(ctx, FALSE), C, ctx, {"R": fill})
        return
    if rule in ("wu", "awu"):
        universe = _atom_universe((C,), atoms)
        fillers: list[Structure] = [a for u in universe for a in (u, _dual_atom(u))]
        for ctx in _unit_positions(C, TRUE):
            for R in fillers:
                yield _inst(rule, plug(ctx, R), C, ctx, {"R": R})
        return
    if rule in ("cd", "acd"):
        for ctx, fill in D:
            if rule == "acd":
                if isinstance(fill, Atom):
                    yield _inst("acd", plug(ctx, Par((fill, fill))), C, ctx, {"a": fill})
            else:
                if _is_unit(fill) and not degenerate:
                    continue
                yield _inst("cd", plug(ctx, par(fill, fill)), C, ctx, {"R": fill})
        return
    if rule in ("cu", "acu"):
        for ctx, fill in D:
            if isinstance(fill, Copar):
                if rule == "acu":
                    if len(fill.parts) == 2 and isinstance(fill.parts[0], Atom) and fill.parts[0] == fill.parts[1]:
                        yield _inst("acu", plug(ctx, fill.parts[0]), C, ctx, {"a": fill.parts[0]})
                else:
                    for left, right in _splits2(fill.parts):
                        L, R = copar(*left), copar(*right)
                        if _same(L, R):
                            yield _inst("cu", plug(ctx, L), C, ctx, {"R": L})
        return
    if rule == "s":
        for ctx, fill in D:
            if not isinstance(fill, Par):
                continue
            for i, child in enumerate(fill.parts):
                if not isinstance(child, Copar):
                    continue
                rest = fill.parts[:i] + fill.parts[i + 1 :]
                U = par(*rest)
                if _is_unit(U) and not degenerate:
                    continue
                for left, right in _splits2(child.parts):
                    R, T = copar(*left), copar(*right)
                    if not degenerate and (_is_unit(R) or _is_unit(T)):
                        continue
                    yield _inst("s", plug(ctx, copar(par(R, U), T)), C, ctx, {"R": R, "U": U, "T": T})
        return
    if rule == "m":
        for ctx, fill in D:
            if not isinstance(fill, Copar) or len(fill.parts) != 2:
                continue
            p1, p2 = fill.parts
            if not (isinstance(p1, Par) and isinstance(p2, Par)):
                continue
            for l1, r1 in _splits2(p1.parts):
                for l2, r2 in _splits2(p2.parts):
                    R, T = par(*l1), par(*r1)
                    U, V = par(*l2), par(*r2)
                    if not degenerate and any(map(_is_unit, (R, T, U, V))):
                        continue
                    yield _inst("m", plug(ctx, par(copar(R, U), copar(T, V))), C, ctx,
                                {"R": R, "U": U, "T": T, "V": V})
        return
    if rule == "ud":
        for ctx, fill in D:
            if not isinstance(fill, Par) or len(fill.parts) != 2:
                continue
            for c1, c2 in _pairs(fill.parts):
                g1 = _quant_body(c1, True)
                if not g1:
                    continue
                x, R = g1
                g2 = _quant_body(c2, False, want=x)
                if not g2:
                    continue
                _, T = g2
                yield _inst("ud", plug(ctx, Quant(True, x, par(R, T))), C, ctx, {"x": x, "R": R, "T": T})
        return
    if rule == "uu":
        for ctx, fill in D:
            got = _quant_body(fill, False)
            if not got:
                continue
            x, body = got
            if not isinstance(body, Copar):
                continue
            for left, right in _splits2(body.parts):
                R, T = copar(*left), copar(*right)
                prem = plug(ctx, copar(Quant(False, x, R), Quant(True, x, T)))
                yield _inst("uu", prem, C, ctx, {"x": x, "R": R, "T": T})
        return
    if rule == "nd":
        for ctx, fill in D:
            got = _quant_body(fill, False)
            if not got:
                continue
            x, R = got
            for t in _term_universe((C,), terms):
                try:
                    prem = plug(ctx, substitute(R, x, t))
                except Exception:
                    continue
                yield _inst("nd", prem, C, ctx, {"x": x, "t": t})
        return
    if rule == "nu":
        for ctx, fill in D:
            for t in _term_universe((fill,), terms):
                for R, x in _abstractions(fill, t):
                    prem = plug(ctx, Quant(True, x, R))
                    try:
                        back = substitute(R, x, t)
                    except Exception:
                        continue
                    if _same(back, fill):
                        yield _inst("nu", prem, C, ctx, {"x": x, "t": t})
        return
    if rule in ("m1d", "m2d"):
        universal = rule == "m2d"
        for ctx, fill in D:
            got = _quant_body(fill, universal)
            if not got:
                continue
            x, body = got
            if not isinstance(body, Par):
                continue
            for left, right in _splits2(body.parts):
                R, T = par(*left), par(*right)
                prem = plug(ctx, par(Quant(universal, x, R), Quant(universal, x, T)))
                yield _inst(rule, prem, C, ctx, {"x": x, "R": R, "T": T})
        return
    if rule in ("m1u", "m2u"):
        universal = rule == "m1u"
        for ctx, fill in D:
            if not isinstance(fill, Copar) or len(fill.parts) != 2:
                continue
            for c1, c2 in _pairs(fill.parts):
                g1 = _quant_body(c1, universal)
                if not g1:
                    continue
                x, R = g1
                g2 = _quant_body(c2, universal, want=x)
                if not g2:
                    continue
                _, T = g2
                yield _inst(rule, plug(ctx, Quant(universal, x, copar(R, T))), C, ctx,
                            {"x": x, "R": R, "T": T})
        return
    if rule == "dd":
        for ctx, fill in D:
            if not isinstance(fill, Par):
                continue
            for i, child in enumerate(fill.parts):
                if not isinstance(child, Copar):
                    continue
                R = par(*(fill.parts[:i] + fill.parts[i + 1 :]))
                for left, right in _splits2(child.parts):
                    T, U = copar(*left), copar(*right)
                    if not degenerate and any(map(_is_unit, (R, T, U))):
                        continue
                    yield _inst("dd", plug(ctx, copar(par(R, T), par(R, U))), C, ctx,
                                {"R": R, "T": T, "U": U})
        return
    if rule == "du":
        for ctx, fill in D:
            if not isinstance(fill, Par) or len(fill.parts) != 2:
                continue
            c1, c2 = fill.parts
            if not (isinstance(c1, Copar) and isinstance(c2, Copar)):
                continue
            for l1, r1 in _splits2(c1.parts):
                R1, T = copar(*l1), copar(*r1)
                for l2, r2 in _splits2(c2.parts):
                    R2, U = copar(*l2), copar(*r2)
                    if not _same(R1, R2):
                        continue
                    if not degenerate and any(map(_is_unit, (R1, T, U))):
                        continue
                    yield _inst("du", plug(ctx, copar(R1, par(T, U))), C, ctx,
                                {"R": R1, "T": T, "U": U})
        return
    if rule == "ssd":
        for ctx, fill in D:
            if not isinstance(fill, Par):
                continue
            for left, right in _splits2(fill.parts):
                R = par(*left)
                if _is_unit(R) and not degenerate:
                    continue
                W = par(*right)
                for tctx in _unit_positions(W, FALSE):
                    if _binders_on_hole_path(tctx) & _free_names(R):
                        continue
                    yield _inst("ssd", plug(ctx, plug(tctx, R)), C, ctx, {"R": R})
        return
    if rule == "ssu":
        for ctx, fill in D:
            for tctx, R in decompositions(fill):
                if isinstance(tctx, Hole):
                    continue
                if _binders_on_hole_path(tctx) & _free_names(R):
                    continue
                if _is_unit(R) and not degenerate:
                    continue
                prem = plug(ctx, copar(R, plug(tctx, TRUE)))
                yield _inst("ssu", prem, C, ctx, {"R": R})
        return
    if rule == "aisd":
        if isinstance(C, Copar):
            for i, child in enumerate(C.parts):
                a = _closed_atom_pair(child, True)
                if a is not None:
                    rest = C.parts[:i] + C.parts[i + 1 :]
                    yield _inst("aisd", copar(*rest), C, None, {"a": a})
        a = _closed_atom_pair(C, True)
        if a is not None:
            yield _inst("aisd", TRUE, C, None, {"a": a})
        return
    if rule == "aisu":
        for a in _atom_universe((C,), atoms):
            block = _close_atom_pair(a, False)
            yield _inst("aisu", par(C, block), C, None, {"a": a})
        return
    if rule == "n1d":
        sig = sorted(function_signature(C) | {(t.name, len(t.args)) for t in terms if not t.variable})
        for ctx, fill in D:
            got = _quant_body(fill, False)
            if not got:
                continue
            x, R = got
            taken = _free_names(R) | binder_names(R) | {x}
            for fname, arity in sig:
                ys = []
                for _ in range(arity):
                    y = fresh_name("y", taken | set(ys))
                    ys.append(y)
                t = Term(fname, tuple(var(y) for y in ys))
                try:
                    body = substitute(R, x, t)
                except Exception:
                    continue
                yield _inst("n1d", plug(ctx, _nested_exists(ys, body)), C, ctx, {"x": x, "t": t})
        return
    if rule == "n1u":
        sig = sorted(function_signature(C) | {(t.name, len(t.args)) for t in terms if not t.variable})
        for ctx, fill in D:
            names, body = _strip_closure(fill, True)
            for k in range(len(names) + 1):
                ys, inner = names[:k], _nested_forall(names[k:], body)
                for fname, arity in sig:
                    if arity != k:
                        continue
                    t = Term(fname, tuple(var(y) for y in ys))
                    for R, x in _abstractions(inner, t):
                        if any(y in _free_names(Quant(True, x, R)) for y in ys):
                            continue
                        prem = plug(ctx, Quant(True, x, R))
                        try:
                            back = substitute(R, x, t)
                        except Exception:
                            continue
                        if _same(_nested_forall(ys, back), fill):
                            yield _inst("n1u", prem, C, ctx, {"x": x, "t": t})
        return
    if rule in ("n2d", "n2u"):
        yield _inst(rule, C, C)
        return
    raise RuleError(f"unknown rule {rule!r}")


def _abstractions(s: Structure, t: Term) -> Iterator[tuple[Structure, str]]:
    """Ways of writing s as R(x/t) for a fresh x: replace all occurrences of
    t, or a single one."""
    taken = _free_names(s) | binder_names(s) | {t.name}
    x = fresh_name("x", taken)

    occurrences = 0

    def count_term(u: Term) -> int:
        if u == t or (not u.variable and not t.variable and u.name == t.name and u.args == t.args):
            return 1
        return sum(count_term(a) for a in u.args)

    def count(s: Structure) -> int:
        match s:
            case Atom(_, args, _):
                return sum(count_term(a) for a in args)
            case Par(parts) | Copar(parts):
                return sum(count(p) for p in parts)
            case Quant(_, name, body):
                if name == t.name or (t.variable and name == t.name):
                    return 0
                return count(body)
            case _:
                return 0

    occurrences = count(s)
    if occurrences == 0:
        return

    def replace(s: Structure, picks: set[int] | None, counter: list[int]) -> Structure:
        def rep_term(u: Term) -> Term:
            if u == t or (not u.variable and u.name == t.name and u.args == t.args and not t.variable):
                counter[0] += 1
                if picks is None or (counter[0] - 1) in picks:
                    return var(x)
                return u
            if u.args:
                return Term(u.name, tuple(rep_term(a) for a in u.args), False)
            return u

        match s:
            case Atom(name, args, negated):
                return Atom(name, tuple(rep_term(a) for a in args), negated)
            case Par(parts):
                return Par(tuple(replace(p, picks, counter) for p in parts))
            case Copar(parts):
                return Copar(tuple(replace(p, picks, counter) for p in parts))
            case Quant(u_, name, body):
                if name == t.name:
                    return s
                return Quant(u_, name, replace(body, picks, counter))
            case _:
                return s

    from .structure import normalize

    yield normalize(replace(s, None, [0])), x
    if occurrences > 1:
        for i in range(occurrences):
            yield normalize(replace(s, {i}, [0])), x


# ---------------------------------------------------------------------------
# public surface


def _degenerate_switch_witness(P: Structure, C: Structure) -> RuleInstance | None:
    # s with R = U = t and T = f turns one f into t (sepaw2's unit trick)
    for ctx, fill in decompositions(C):
        if fill == TRUE and _same(P, plug(ctx, FALSE)):
            return _inst("s", P, C, ctx, {"R": TRUE, "U": TRUE, "T": FALSE})
    for ctx, fill in decompositions(P):
        if fill == FALSE and _same(C, plug(ctx, TRUE)):
            return _inst("s", P, C, ctx, {"R": TRUE, "U": TRUE, "T": FALSE})
    return None


def find_witness(rule: RuleId, premise: Structure, conclusion: Structure,
                 atoms=(), terms=()) -> RuleInstance | None:
    """First witness that (rule, premise, conclusion) realizes the schema."""
    if rule not in ALL_RULES:
        raise RuleError(f"unknown rule {rule!r}")
    if rule == "eq":
        if equivalent(premise, conclusion):
            return _inst("eq", premise, conclusion)
        return None
    if rule in _UNIT_DEGENERATE and _same(premise, conclusion):
        return _inst(rule, premise, conclusion)
    if rule == "s":
        w = _degenerate_switch_witness(premise, conclusion)
        if w is not None:
            return w
    terms = tuple(terms) + tuple(
        t for t in _term_universe((premise, conclusion), ()) if True
    )
    for inst in _up(rule, conclusion, atoms=atoms, terms=terms, degenerate=True):
        if _same(inst.premise, premise):
            return _inst(rule, premise, conclusion, None, dict(inst.binding) if inst.binding else None)
    for inst in _down(rule, premise, atoms=atoms, terms=terms, degenerate=True):
        if _same(inst.conclusion, conclusion):
            return _inst(rule, premise, conclusion, None, dict(inst.binding) if inst.binding else None)
    return None


def validate_instance(inst: RuleInstance, atoms=(), terms=()) -> tuple[bool, str]:
    """Check a rule instance against its schema, modulo the equational
    theory.  Returns (ok, diagnostic)."""
    try:
        w = find_witness(inst.rule, inst.premise, inst.conclusion, atoms=atoms, terms=terms)
    except RuleError as e:
        return False, str(e)
    if w is None:
        return False, f"no context and binding realize {inst.rule} here"
    return True, "ok"


def _search_filter(instances: Iterator[RuleInstance], rule: RuleId, budget: int | None) -> list[RuleInstance]:
    out: list[RuleInstance] = []
    seen: set = set()
    for inst in instances:
        if rule != "eq" and _same(inst.premise, inst.conclusion):
            continue
        k = (structure_key(inst.premise), structure_key(inst.conclusion))
        if k in seen:
            continue
        seen.add(k)
        out.append(inst)
        if budget is not None and len(out) >= budget:
            break
    return out


def match_down(rule: RuleId, premise: Structure, budget: int | None = None,
               *, atoms=(), terms=()) -> list[RuleInstance]:
    """Rule instances with the given premise (skips degenerate unit
    bindings; complete over the drawn atom/term universe)."""
    if rule not in ALL_RULES:
        raise RuleError(f"unknown rule {rule!r}")
    return _search_filter(_down(rule, premise, atoms=atoms, terms=terms), rule, budget)


def match_up(rule: RuleId, conclusion: Structure, budget: int | None = None,
             *, atoms=(), terms=()) -> list[RuleInstance]:
    """Rule instances with the given conclusion; mirror of match_down."""
    if rule not in ALL_RULES:
        raise RuleError(f"unknown rule {rule!r}")
    return _search_filter(_up(rule, conclusion, atoms=atoms, terms=terms), rule, budget)
