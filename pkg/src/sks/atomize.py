"""Constructive equivalences between general and atomic systems: expanding
general identity/cut/weakening/contraction into atomic rules (plus switch,
medial and the quantifier medials), medials back into contraction/weakening,
super-switch and shallow-identity expansions, and the decomposition of
instantiation into single-function-symbol steps."""

from __future__ import annotations

from .derivation import Derivation, DerivationError, compose, dualize, from_steps, single
from .rules import RuleInstance, _splits2, dual_rule, find_witness
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
    binder_names,
    copar,
    count_holes,
    decompositions,
    fresh_name,
    negate,
    par,
    plug,
    structure_key,
    substitute,
    var,
)


class AtomizeError(Exception):
    pass


class UnsupportedTermError(AtomizeError):
    """Instantiation terms must be built from function symbols only."""


def _same(a: Structure, b: Structure) -> bool:
    return a == b or structure_key(a) == structure_key(b)


def _reconcile(d: Derivation, premise: Structure, conclusion: Structure) -> Derivation:
    """Force exact endpoints, bridging alpha-variants with eq steps."""
    if d.premise != premise:
        if not _same(d.premise, premise):
            raise AtomizeError("expansion produced wrong premise")
        d = compose(from_steps(premise, [RuleInstance("eq", premise, d.premise)]), d)
    if d.conclusion != conclusion:
        if not _same(d.conclusion, conclusion):
            raise AtomizeError("expansion produced wrong conclusion")
        d = compose(d, from_steps(d.conclusion, [RuleInstance("eq", d.conclusion, conclusion)]))
    return d


def _validated(inst: RuleInstance) -> None:
    from .rules import validate_instance

    ok, why = validate_instance(inst)
    if not ok:
        raise AtomizeError(f"invalid {inst.rule} instance: {why}")


# ---------------------------------------------------------------------------
# witnesses (context + schema binding) for the rules we expand


def _id_witness(P: Structure, C: Structure):
    for ctx, fill in decompositions(C):
        if isinstance(fill, Par):
            for left, right in _splits2(fill.parts):
                L, R = par(*left), par(*right)
                if _same(negate(L), R) and _same(P, plug(ctx, TRUE)):
                    return ctx, L
    return None


def _wd_witness(P: Structure, C: Structure):
    for ctx, fill in decompositions(C):
        if _same(P, plug(ctx, FALSE)):
            return ctx, fill
    return None


def _cd_witness(P: Structure, C: Structure):
    for ctx, fill in decompositions(P):
        if isinstance(fill, Par):
            for left, right in _splits2(fill.parts):
                L, R = par(*left), par(*right)
                if _same(L, R) and _same(C, plug(ctx, L)):
                    return ctx, L
    return None


def _m_witness(P: Structure, C: Structure):
    for ctx, fill in decompositions(P):
        if isinstance(fill, Par) and len(fill.parts) == 2:
            c1, c2 = fill.parts
            if isinstance(c1, Copar) and isinstance(c2, Copar):
                for l1, r1 in _splits2(c1.parts):
                    for l2, r2 in _splits2(c2.parts):
                        R, U = copar(*l1), copar(*r1)
                        T, V = copar(*l2), copar(*r2)
                        if _same(C, plug(ctx, copar(par(R, T), par(U, V)))):
                            return ctx, R, U, T, V
    return None


def _qmedial_down_witness(P: Structure, C: Structure, universal: bool):
    from .rules import _pairs, _quant_body

    for ctx, fill in decompositions(P):
        if isinstance(fill, Par) and len(fill.parts) == 2:
            for c1, c2 in _pairs(fill.parts):
                g1 = _quant_body(c1, universal)
                if not g1:
                    continue
                x, R = g1
                g2 = _quant_body(c2, universal, want=x)
                if not g2:
                    continue
                _, T = g2
                if _same(C, plug(ctx, Quant(universal, x, par(R, T)))):
                    return ctx, x, R, T
    return None


def _ss_up_witness(P: Structure, C: Structure):
    from .rules import _binders_on_hole_path, _free_names, _unit_positions

    for ctx, fill in decompositions(C):
        for tctx, R in decompositions(fill):
            if isinstance(tctx, Hole):
                continue
            if _binders_on_hole_path(tctx) & _free_names(R):
                continue
            if _same(P, plug(ctx, copar(R, plug(tctx, TRUE)))):
                return ctx, tctx, R
    return None


def _nd_witness(P: Structure, C: Structure):
    from .rules import _term_universe

    for ctx, fill in decompositions(C):
        if isinstance(fill, Quant) and not fill.universal:
            x, R = fill.name, fill.body
            for t in _term_universe((P, C), ()):
                try:
                    if _same(P, plug(ctx, substitute(R, x, t))):
                        return ctx, x, R, t
                except Exception:
                    continue
    return None


# ---------------------------------------------------------------------------
# general identity / weakening / contraction


def _derive_id(ctx: Structure, R: Structure) -> Derivation:
    prem = plug(ctx, TRUE)
    conc = plug(ctx, par(R, negate(R)))
    if prem == conc:
        return single(prem)
    match R:
        case Atom():
            return from_steps(prem, [RuleInstance("aid", prem, conc)])
        case Unit():
            return single(prem) if prem == conc else from_steps(
                prem, [RuleInstance("eq", prem, conc)]
            )
        case Par(parts):
            first, rest = parts[0], par(*parts[1:])
            d = _derive_id(ctx, rest)
            ctx2 = _fill(ctx, Copar((HOLE, par(rest, negate(rest)))))
            d = compose(d, _derive_id(ctx2, first))
            pair_f = par(first, negate(first))
            mid1 = d.conclusion  # S([F,-F],[Rest,-Rest])
            mid2 = plug(ctx, par(rest, copar(pair_f, negate(rest))))
            out = [] if mid1 == mid2 else [RuleInstance("s", mid1, mid2)]
            if mid2 != conc:
                out.append(RuleInstance("s", mid2, conc))
            return compose(d, from_steps(mid1, out))
        case Copar(parts):
            first, rest = parts[0], copar(*parts[1:])
            d = _derive_id(ctx, rest)
            ctx2 = _fill(ctx, Copar((HOLE, par(rest, negate(rest)))))
            d = compose(d, _derive_id(ctx2, first))
            pair_f = par(first, negate(first))
            mid1 = d.conclusion  # S([F,-F],[Rest,-Rest])
            mid2 = plug(ctx, par(copar(pair_f, rest), negate(rest)))
            out = [] if mid1 == mid2 else [RuleInstance("s", mid1, mid2)]
            if mid2 != conc:
                out.append(RuleInstance("s", mid2, conc))
            return compose(d, from_steps(mid1, out))
        case Quant(_, x, body):
            # S{t} = S{!x t} -> S{!x [B,-B]} -> S[QxB, -QxB] by ud
            ctx2 = _fill(ctx, Quant(True, x, HOLE))
            d = _derive_id(ctx2, body)
            mid = d.conclusion
            if mid == conc:
                return d
            return compose(d, from_steps(mid, [RuleInstance("ud", mid, conc)]))
    raise AtomizeError(f"cannot expand identity over {R!r}")


def _derive_wd(ctx: Structure, R: Structure) -> Derivation:
    prem = plug(ctx, FALSE)
    conc = plug(ctx, R)
    if prem == conc:
        return single(prem)
    match R:
        case Atom():
            return from_steps(prem, [RuleInstance("awd", prem, conc)])
        case Unit(True):
            # S{f} -> S{t} is the unit switch (s with R=U=t, T=f)
            return from_steps(prem, [RuleInstance("s", prem, conc)])
        case Unit(False):
            return single(prem)
        case Par(parts):
            d = single(prem)
            n = len(parts)
            for i in range(n - 1, -1, -1):
                done = parts[i + 1 :]
                ctx_i = _fill(ctx, Par((HOLE,) + done)) if done else ctx
                d = compose(d, _derive_wd(ctx_i, parts[i]))
            return d
        case Copar(parts):
            d = single(prem)
            n = len(parts)
            for i in range(n - 1, -1, -1):
                done = parts[i + 1 :]
                if i > 0:
                    ctx_i = _fill(ctx, Copar((FALSE, HOLE) + done))
                else:
                    ctx_i = _fill(ctx, Copar((HOLE,) + done))
                d = compose(d, _derive_wd(ctx_i, parts[i]))
            return d
        case Quant(u, x, body):
            ctx2 = _fill(ctx, Quant(u, x, HOLE))
            return _derive_wd(ctx2, body)
    raise AtomizeError(f"cannot expand weakening over {R!r}")


def _derive_cd(ctx: Structure, R: Structure) -> Derivation:
    prem = plug(ctx, par(R, R))
    conc = plug(ctx, R)
    if prem == conc:
        return single(prem)
    match R:
        case Atom():
            return from_steps(prem, [RuleInstance("acd", prem, conc)])
        case Unit():
            return single(prem)
        case Par(parts):
            d = single(prem)
            n = len(parts)
            for k in range(n):
                singles = parts[:k]
                doubles = parts[k + 1 :]
                ctx_k = _fill(ctx, Par(singles + (HOLE,) + doubles + doubles))
                d = compose(d, _derive_cd(ctx_k, parts[k]))
            return d
        case Copar(parts):
            first, rest = parts[0], copar(*parts[1:])
            m_conc = plug(ctx, copar(par(first, first), par(rest, rest)))
            d = from_steps(prem, [RuleInstance("m", prem, m_conc)]) if prem != m_conc else single(prem)
            ctx_f = _fill(ctx, Copar((HOLE, par(rest, rest))))
            d = compose(d, _derive_cd(ctx_f, first))
            ctx_r = _fill(ctx, Copar((first, HOLE)))
            d = compose(d, _derive_cd(ctx_r, rest))
            return d
        case Quant(universal, x, body):
            step = "m2d" if universal else "m1d"
            mid = plug(ctx, Quant(universal, x, par(body, body)))
            d = from_steps(prem, [RuleInstance(step, prem, mid)]) if prem != mid else single(prem)
            ctx2 = _fill(ctx, Quant(universal, x, HOLE))
            return compose(d, _derive_cd(ctx2, body))
    raise AtomizeError(f"cannot expand contraction over {R!r}")


def _expand_by_duality(inst: RuleInstance) -> Derivation:
    dual = RuleInstance(dual_rule(inst.rule), negate(inst.conclusion), negate(inst.premise))
    return dualize(expand_general(dual))


def expand_general(inst: RuleInstance) -> Derivation:
    """Expand a general identity/cut/weakening/contraction instance into the
    atomic rules (with switch, medial and the quantifier medials)."""
    P, C = inst.premise, inst.conclusion
    if inst.rule == "id":
        w = _id_witness(P, C)
        if w is None:
            if _same(P, C):
                return _reconcile(single(P), P, C)
            raise AtomizeError("not a valid id instance")
        ctx, R = w
        return _reconcile(_derive_id(ctx, R), P, C)
    if inst.rule == "wd":
        w = _wd_witness(P, C)
        if w is None:
            raise AtomizeError("not a valid wd instance")
        ctx, R = w
        return _reconcile(_derive_wd(ctx, R), P, C)
    if inst.rule == "cd":
        w = _cd_witness(P, C)
        if w is None:
            if _same(P, C):
                return _reconcile(single(P), P, C)
            raise AtomizeError("not a valid cd instance")
        ctx, R = w
        return _reconcile(_derive_cd(ctx, R), P, C)
    if inst.rule in ("iu", "wu", "cu"):
        return _reconcile(_expand_by_duality(inst), P, C)
    raise AtomizeError(f"expand_general does not handle {inst.rule}")


# ---------------------------------------------------------------------------
# medials


def expand_medial(inst: RuleInstance) -> Derivation:
    """Realize a medial (or quantifier medial) with one general contraction
    and weakenings (dually for the co-medials)."""
    P, C = inst.premise, inst.conclusion
    if inst.rule == "m":
        w = _m_witness(P, C)
        if w is None:
            if _same(P, C):
                return _reconcile(single(P), P, C)
            raise AtomizeError("not a valid m instance")
        ctx, R, U, T, V = w
        rt, uv = par(R, T), par(U, V)
        stages = [
            plug(ctx, par(copar(R, U), copar(T, uv))),
            plug(ctx, par(copar(R, U), copar(rt, uv))),
            plug(ctx, par(copar(R, uv), copar(rt, uv))),
            plug(ctx, par(copar(rt, uv), copar(rt, uv))),
        ]
        steps: list[RuleInstance] = []
        cur = P
        for st in stages:
            if st != cur:
                steps.append(RuleInstance("wd", cur, st))
                cur = st
        if cur != C:
            steps.append(RuleInstance("cd", cur, C))
        return _reconcile(from_steps(P, steps), P, C)
    if inst.rule in ("m1d", "m2d"):
        universal = inst.rule == "m2d"
        w = _qmedial_down_witness(P, C, universal)
        if w is None:
            if _same(P, C):
                return _reconcile(single(P), P, C)
            raise AtomizeError(f"not a valid {inst.rule} instance")
        ctx, x, R, T = w
        stage1 = plug(ctx, par(Quant(universal, x, R), Quant(universal, x, par(R, T))))
        stage2 = plug(ctx, par(Quant(universal, x, par(R, T)), Quant(universal, x, par(R, T))))
        steps = []
        cur = P
        for st in (stage1, stage2):
            if st != cur:
                steps.append(RuleInstance("wd", cur, st))
                cur = st
        if cur != C:
            steps.append(RuleInstance("cd", cur, C))
        return _reconcile(from_steps(P, steps), P, C)
    if inst.rule in ("m1u", "m2u"):
        dual = RuleInstance(dual_rule(inst.rule), negate(C), negate(P))
        return _reconcile(dualize(expand_medial(dual)), P, C)
    raise AtomizeError(f"expand_medial does not handle {inst.rule}")


# ---------------------------------------------------------------------------
# whole-derivation transformations

GENERAL_RULES = frozenset({"id", "iu", "wd", "wu", "cd", "cu"})
MEDIAL_RULES = frozenset({"m", "m1d", "m1u", "m2d", "m2u"})
_RELABEL = {"aid": "id", "aiu": "iu", "awd": "wd", "awu": "wu", "acd": "cd", "acu": "cu"}


def to_atomic(d: Derivation) -> Derivation:
    """Translate a general-system derivation into the atomic system with the
    same endpoints (general steps expanded per the structural recursion)."""
    out = single(d.premise)
    for st in d.steps:
        if st.rule in GENERAL_RULES:
            seg = expand_general(st)
        else:
            seg = from_steps(st.premise, [st])
        out = compose(out, seg)
    return out


def to_general(d: Derivation) -> Derivation:
    """Translate an atomic-system derivation into the general system: medials
    expand into contraction/weakening, atomic rules become general ones."""
    out = single(d.premise)
    for st in d.steps:
        if st.rule in MEDIAL_RULES:
            seg = expand_medial(st)
        elif st.rule in _RELABEL:
            seg = from_steps(st.premise, [RuleInstance(_RELABEL[st.rule], st.premise, st.conclusion)])
        else:
            seg = from_steps(st.premise, [st])
        out = compose(out, seg)
    return out


# ---------------------------------------------------------------------------
# super switch


def _derive_ssu(ctx: Structure, tctx: Structure, R: Structure) -> Derivation:
    prem = plug(ctx, copar(R, plug(tctx, TRUE)))
    conc = plug(ctx, plug(tctx, R))
    if isinstance(tctx, Hole):
        return single(prem)
    match tctx:
        case Par(parts):
            hole_i = next(i for i, p in enumerate(parts) if count_holes(p))
            vctx = parts[hole_i]
            rest = parts[:hole_i] + parts[hole_i + 1 :]
            ctx2 = _fill(ctx, Par(rest + (HOLE,)))
            mid = plug(ctx2, copar(R, plug(vctx, TRUE)))
            d = from_steps(prem, [RuleInstance("s", prem, mid)]) if prem != mid else single(prem)
            return compose(d, _derive_ssu(ctx2, vctx, R))
        case Copar(parts):
            hole_i = next(i for i, p in enumerate(parts) if count_holes(p))
            vctx = parts[hole_i]
            rest = parts[:hole_i] + parts[hole_i + 1 :]
            ctx2 = _fill(ctx, Copar(rest + (HOLE,)))
            return _derive_ssu(ctx2, vctx, R)
        case Quant(universal, x, vctx):
            ctx2 = _fill(ctx, Quant(universal, x, HOLE))
            mid = plug(ctx2, copar(R, plug(vctx, TRUE)))
            rule = "nu" if universal else "uu"
            d = from_steps(prem, [RuleInstance(rule, prem, mid)]) if prem != mid else single(prem)
            return compose(d, _derive_ssu(ctx2, vctx, R))
    raise AtomizeError(f"cannot traverse context {tctx!r}")


def expand_superswitch(inst: RuleInstance) -> Derivation:
    """Realize a super switch with plain switches (plus nu/uu resp. nd/ud for
    quantified contexts)."""
    P, C = inst.premise, inst.conclusion
    if inst.rule == "ssu":
        w = _ss_up_witness(P, C)
        if w is None:
            if _same(P, C):
                return _reconcile(single(P), P, C)
            raise AtomizeError("not a valid ssu instance")
        ctx, tctx, R = w
        return _reconcile(_derive_ssu(ctx, tctx, R), P, C)
    if inst.rule == "ssd":
        dual = RuleInstance("ssu", negate(C), negate(P))
        return _reconcile(dualize(expand_superswitch(dual)), P, C)
    raise AtomizeError(f"expand_superswitch does not handle {inst.rule}")


# ---------------------------------------------------------------------------
# shallow atomic identity / cut


def _aid_witness(P: Structure, C: Structure):
    for ctx, fill in decompositions(C):
        if (
            isinstance(fill, Par)
            and len(fill.parts) == 2
            and isinstance(fill.parts[0], Atom)
            and isinstance(fill.parts[1], Atom)
            and fill.parts[0].name == fill.parts[1].name
            and fill.parts[0].args == fill.parts[1].args
            and fill.parts[0].negated != fill.parts[1].negated
        ):
            if _same(P, plug(ctx, TRUE)):
                a = fill.parts[0] if not fill.parts[0].negated else fill.parts[1]
                return ctx, a
    return None


def expand_shallow(inst: RuleInstance) -> Derivation:
    """Turn a deep atomic identity into a shallow one followed by a
    super-switch expansion (closing the atom pair universally and
    re-instantiating for predicate atoms); dually for cut.  Shallow
    instances pass through unchanged."""
    P, C = inst.premise, inst.conclusion
    if inst.rule in ("aisd", "aisu"):
        _validated(inst)
        return from_steps(P, [inst])
    if inst.rule == "aid":
        w = _aid_witness(P, C)
        if w is None:
            raise AtomizeError("not a valid aid instance")
        ctx, a = w
        from .structure import free_vars

        pair = par(a, Atom(a.name, a.args, not a.negated))
        names = sorted(free_vars(pair))
        block: Structure = pair
        for n in reversed(names):
            block = Quant(True, n, block)
        shallow_conc = copar(P, block)
        d = from_steps(P, [RuleInstance("aisd", P, shallow_conc)])
        d = compose(d, _derive_ssu(HOLE, ctx, block))
        # peel the closure back off with nu instances (t = the variable itself)
        cur = d.conclusion
        while isinstance(block, Quant):
            block = block.body
            nxt = plug(ctx, block)
            if nxt != cur:
                d = compose(d, from_steps(cur, [RuleInstance("nu", cur, nxt)]))
                cur = nxt
        return _reconcile(d, P, C)
    if inst.rule == "aiu":
        dual = RuleInstance("aid", negate(C), negate(P))
        return _reconcile(dualize(expand_shallow(dual)), P, C)
    raise AtomizeError(f"expand_shallow does not handle {inst.rule}")


# ---------------------------------------------------------------------------
# instantiation splitting (nd into n1d / n2d)


def _ground(t: Term) -> bool:
    if t.variable:
        return False
    return all(_ground(a) for a in t.args)


def _derive_nd(ctx: Structure, x: str, R: Structure, t: Term) -> Derivation:
    prem = plug(ctx, substitute(R, x, t))
    conc = plug(ctx, Quant(False, x, R))
    if x not in _occurring_unbound(R, frozenset()):
        return from_steps(prem, [RuleInstance("n2d", prem, conc)])
    if not _ground(t):
        raise UnsupportedTermError(f"instantiation term {t} contains variables")
    if not t.args:
        return from_steps(prem, [RuleInstance("n1d", prem, conc)])
    taken = set(_occurring_unbound(R, frozenset()) | binder_names(R) | {x})
    ys: list[str] = []
    for _ in t.args:
        y = fresh_name("y", taken | set(ys))
        ys.append(y)
    base = substitute(R, x, Term(t.name, tuple(var(y) for y in ys)))
    d = single(prem)
    # instantiate y_k .. y_1, innermost first
    for j in range(len(ys) - 1, -1, -1):
        body = base
        for i in range(len(ys) - 1, j, -1):
            body = Quant(False, ys[i], body)
        sigma = body
        for i in range(j):
            sigma = substitute(sigma, ys[i], t.args[i])
        d = compose(d, _derive_nd(ctx, ys[j], sigma, t.args[j]))
    closed = base
    for y in reversed(ys):
        closed = Quant(False, y, closed)
    mid = plug(ctx, closed)
    if mid != conc:
        d = compose(d, from_steps(mid, [RuleInstance("n1d", mid, conc)]))
    return d


def expand_instantiation(inst: RuleInstance) -> Derivation:
    """Decompose an instantiation step one function symbol at a time."""
    if inst.rule != "nd":
        raise AtomizeError(f"expand_instantiation handles nd, not {inst.rule}")
    P, C = inst.premise, inst.conclusion
    w = _nd_witness(P, C)
    if w is None:
        raise AtomizeError("not a valid nd instance")
    ctx, x, R, t = w
    if x in _occurring_unbound(R, frozenset()) and not _ground(t):
        raise UnsupportedTermError(f"instantiation term {t} contains variables")
    return _reconcile(_derive_nd(ctx, x, R, t), P, C)
