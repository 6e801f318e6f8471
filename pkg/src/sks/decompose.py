"""Executable decomposition theorems for the propositional systems:
rule-permutation as a single-step transformer and the five separation
procedures (identity/cut, contraction for proofs and derivations, weakening
for proofs and derivations, and the full seven-phase normal form), plus the
phase-shape predicate that verifies their output."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from .atomize import expand_shallow
from .derivation import Derivation, check, compose, from_steps, single
from .prover import eliminate_up_rules
from .derivation import derivation_to_proof, proof_to_derivation
from .rules import RuleInstance, _down, dual_rule, find_witness, match_down, system_rules
from .structure import (
    FALSE,
    Atom,
    Copar,
    Par,
    Structure,
    copar,
    decompositions,
    is_quantified,
    par,
    plug,
    structure_key,
)


class DecomposeError(Exception):
    pass


PhaseSpec = tuple[frozenset[str], ...]


def phases(*sets: Iterable[str]) -> PhaseSpec:
    return tuple(frozenset(s) for s in sets)


SKS = system_rules("SKS") - {"eq"}

PHASE_IC = phases({"aid"}, SKS - {"aid", "aiu"}, {"aiu"})
PHASE_AC_PROOF = phases(system_rules("KS") - {"acd", "eq"}, {"acd"})
PHASE_AC = phases({"acu"}, SKS - {"acd", "acu"}, {"acd"})
PHASE_AW_PROOF = phases(system_rules("KS") - {"awd", "eq"}, {"awd"})
PHASE_AW = phases({"awu"}, SKS - {"awd", "awu"}, {"awd"})
PHASE_ALL = phases({"acu"}, {"awu"}, {"aid"}, {"s", "m"}, {"aiu"}, {"awd"}, {"acd"})


def phase_check(d: Derivation, spec: Sequence[Iterable[str]]) -> bool:
    """True iff the non-eq rule sequence factors through the phases in
    order."""
    spec = tuple(frozenset(s) for s in spec)
    i = 0
    for st in d.steps:
        if st.rule == "eq":
            continue
        while i < len(spec) and st.rule not in spec[i]:
            i += 1
        if i == len(spec):
            return False
    return True


# ---------------------------------------------------------------------------
# reordering two adjacent steps


def _reorder(first: RuleInstance, second: RuleInstance,
             allowed: frozenset[str] | None = None) -> list[RuleInstance] | None:
    """Replacement steps for the adjacent pair [first; second] in which the
    two rules exchange places (or collapse), same endpoints; None when no
    validated replacement exists.  Every candidate is checked against the
    rule schemas, so a non-None result is always correct."""
    P, L = first.premise, second.conclusion

    def ok(rules: Iterable[str]) -> bool:
        return allowed is None or set(rules) <= set(allowed)

    if P == L:
        return []
    # straight swap, searched from both ends (the intermediate may only be
    # reachable with invisible-unit contexts from one side)
    if ok((second.rule, first.rule)):
        from .rules import _up, match_up

        def pair(mid: Structure) -> list[RuleInstance]:
            return [RuleInstance(second.rule, P, mid), RuleInstance(first.rule, mid, L)]

        for cand in match_down(second.rule, P):
            if find_witness(first.rule, cand.conclusion, L):
                return pair(cand.conclusion)
        for cand in match_up(first.rule, L):
            if find_witness(second.rule, P, cand.premise):
                return pair(cand.premise)
        # unit-degenerate bindings may be needed for the swap
        seen = set()
        for gen, attr, other in ((_down(second.rule, P, degenerate=True), "conclusion", None),
                                 (_up(first.rule, L, degenerate=True), "premise", None)):
            for cand in gen:
                mid = getattr(cand, attr)
                if mid == P and attr == "conclusion":
                    continue
                if mid == L and attr == "premise":
                    continue
                k = structure_key(mid)
                if k in seen:
                    continue
                seen.add(k)
                if attr == "conclusion" and find_witness(first.rule, mid, L):
                    return pair(mid)
                if attr == "premise" and find_witness(second.rule, P, mid):
                    return pair(mid)
    # one of the two steps absorbs the other
    for rule in (first.rule, second.rule, dual_rule(first.rule), dual_rule(second.rule)):
        if ok((rule,)) and find_witness(rule, P, L):
            return [RuleInstance(rule, P, L)]
    # one rule doubles (a contraction meeting a weakening, and dually)
    for rule in (second.rule, first.rule):
        if not ok((rule,)):
            continue
        for cand in match_down(rule, P):
            if find_witness(rule, cand.conclusion, L):
                return [
                    RuleInstance(rule, P, cand.conclusion),
                    RuleInstance(rule, cand.conclusion, L),
                ]
    # the unit switch f -> t
    if ok(("s",)) and find_witness("s", P, L):
        return [RuleInstance("s", P, L)]
    return None


DOWN_SCOPE = {"acd": frozenset({"awd", "aid", "s", "m"}), "awd": frozenset({"aid", "s", "m"})}
UP_SCOPE = {"acu": frozenset({"awu", "aiu", "s", "m"}), "awu": frozenset({"aiu", "s", "m"})}


def permute_step(upper: RuleInstance, lower: RuleInstance, direction: str) -> Derivation | None:
    """Permute the designated rule past its neighbour per the permutation
    lemmas; None when the pair is outside the lemmas' scope."""
    if upper.conclusion != lower.premise:
        raise DecomposeError("steps are not adjacent")
    if direction == "down":
        scope = DOWN_SCOPE.get(upper.rule, frozenset())
        if lower.rule not in scope:
            return None
    elif direction == "up":
        scope = UP_SCOPE.get(lower.rule, frozenset())
        if upper.rule not in scope:
            return None
    else:
        raise DecomposeError(f"direction must be 'down' or 'up', not {direction!r}")
    rep = _reorder(upper, lower, allowed=frozenset({upper.rule, lower.rule, "s"}))
    if rep is None:
        return None
    return from_steps(upper.premise, rep)


# ---------------------------------------------------------------------------
# shared plumbing


def _require_propositional(d: Derivation, op: str):
    if any(is_quantified(s) for s in d.structures):
        raise DecomposeError(f"{op} handles propositional derivations only")


def _require_check(d: Derivation, sysname: str, op: str):
    rep = check(d, sysname)
    if not rep.ok:
        raise DecomposeError(f"{op}: input does not check in {sysname}: {rep}")


def _drop_noops(steps: list[RuleInstance]) -> list[RuleInstance]:
    return [st for st in steps if st.premise != st.conclusion]


def _rebuild(premise: Structure, steps: list[RuleInstance]) -> Derivation:
    return from_steps(premise, steps)


def _dual_atom(a: Atom) -> Atom:
    return Atom(a.name, a.args, not a.negated)


def _ais_block(inst: RuleInstance, down: bool) -> Structure:
    """Recover the closed atom pair of a shallow identity/cut instance."""
    whole = inst.conclusion if down else inst.premise
    other = inst.premise if down else inst.conclusion
    cls = Copar if down else Par
    pair_cls = Par if down else Copar
    if isinstance(whole, cls):
        for i, child in enumerate(whole.parts):
            if isinstance(child, pair_cls) and len(child.parts) == 2:
                a, b = child.parts
                if (
                    isinstance(a, Atom)
                    and isinstance(b, Atom)
                    and a.name == b.name
                    and a.args == b.args
                    and a.negated != b.negated
                ):
                    rest = whole.parts[:i] + whole.parts[i + 1 :]
                    rebuilt = copar(*rest) if down else par(*rest)
                    if rebuilt == other:
                        return child
    if isinstance(whole, pair_cls) and len(whole.parts) == 2:
        return whole
    raise DecomposeError("cannot recover the shallow atom pair")


# ---------------------------------------------------------------------------
# separating identity and cut


def separate_identity_cut(d: Derivation) -> Derivation:
    """Top phase of atomic identities, bottom phase of atomic cuts, the rest
    in between: shallow the identities/cuts, float them out, relabel."""
    _require_propositional(d, "separate_identity_cut")
    _require_check(d, "SKS", "separate_identity_cut")
    if phase_check(d, PHASE_IC):
        return d
    steps: list[RuleInstance] = []
    for st in _drop_noops(list(d.steps)):
        if st.rule in ("aid", "aiu"):
            steps.extend(expand_shallow(st).steps)
        else:
            steps.append(st)

    # bubble every shallow identity to the top
    changed = True
    while changed:
        changed = False
        for i, st in enumerate(steps):
            if st.rule != "aisd":
                continue
            if i == 0 or steps[i - 1].rule == "aisd":
                continue
            prev = steps[i - 1]
            block = _ais_block(st, down=True)
            mid = copar(prev.premise, block)
            steps[i - 1 : i + 1] = [
                RuleInstance("aisd", prev.premise, mid),
                RuleInstance(prev.rule, mid, st.conclusion),
            ]
            changed = True
            break

    # bubble every shallow cut to the bottom
    changed = True
    while changed:
        changed = False
        for i in range(len(steps) - 1, -1, -1):
            st = steps[i]
            if st.rule != "aisu":
                continue
            if i == len(steps) - 1 or steps[i + 1].rule == "aisu":
                continue
            nxt = steps[i + 1]
            block = _ais_block(st, down=False)
            mid = par(nxt.conclusion, block)
            steps[i : i + 2] = [
                RuleInstance(nxt.rule, st.premise, mid),
                RuleInstance("aisu", mid, nxt.conclusion),
            ]
            changed = True
            break

    relabeled = [
        RuleInstance({"aisd": "aid", "aisu": "aiu"}.get(st.rule, st.rule), st.premise, st.conclusion)
        for st in steps
    ]
    out = _rebuild(d.premise, _drop_noops(relabeled))
    if out.conclusion != d.conclusion:
        raise DecomposeError("separation changed the conclusion")
    return out


# ---------------------------------------------------------------------------
# separating contraction


def _done_below(steps: list[RuleInstance], i: int, rule: str) -> bool:
    return all(s.rule == rule for s in steps[i + 1 :])


def _push_rule_down(steps: list[RuleInstance], rule: str,
                    allowed: frozenset[str] | None = None,
                    stuck_handler=None) -> list[RuleInstance]:
    """Move every instance of the rule into a maximal suffix, bottommost
    first.  Neighbour pairs are replaced via _reorder; the interaction
    cases may absorb, convert or double steps, all validator-checked."""
    guard = 0
    while True:
        idx = None
        for i in range(len(steps) - 1, -1, -1):
            if steps[i].rule == rule and not _done_below(steps, i, rule):
                idx = i
                break
        if idx is None:
            return steps
        i = idx
        while i < len(steps) - 1 and not _done_below(steps, i, rule):
            guard += 1
            if guard > 20000:
                raise DecomposeError("separation did not terminate")
            rep = _reorder(steps[i], steps[i + 1], allowed=allowed)
            if rep is not None:
                rules = [r.rule for r in rep]
                steps[i : i + 2] = rep
                if rule not in rules:
                    break  # the instance dissolved
                i += max(j for j, r in enumerate(rules) if r == rule)
                continue
            if stuck_handler is not None and stuck_handler(steps, i):
                break
            raise DecomposeError(f"cannot move {rule} past {steps[i + 1].rule}")
    return steps


def separate_contraction_proof(p: Derivation) -> Derivation:
    """Permute all contractions of a cut-free proof into a final phase."""
    _require_propositional(p, "separate_contraction_proof")
    _require_check(p, "KS", "separate_contraction_proof")
    if not p.is_proof():
        raise DecomposeError("input is not a proof")
    if phase_check(p, PHASE_AC_PROOF):
        return p
    steps = _drop_noops(list(p.steps))
    steps = _push_rule_down(steps, "acd")
    out = _rebuild(p.premise, steps)
    if out.conclusion != p.conclusion or not phase_check(out, PHASE_AC_PROOF):
        raise DecomposeError("contraction separation failed")
    return out


def _find_acd_witness(st: RuleInstance):
    for ctx, fill in decompositions(st.premise):
        if (
            isinstance(fill, Par)
            and len(fill.parts) == 2
            and isinstance(fill.parts[0], Atom)
            and fill.parts[0] == fill.parts[1]
        ):
            if plug(ctx, fill.parts[0]) == st.conclusion:
                return ctx, fill.parts[0]
    raise DecomposeError("not an atomic contraction")


def _transform_stuck_contraction(steps: list[RuleInstance], i: int) -> bool:
    """Replace [acd; aiu] where the contraction feeds the cut by
    [acu; s; s; aiu; aiu] and float the new co-contraction to the top."""
    st, nxt = steps[i], steps[i + 1]
    if st.rule != "acd" or nxt.rule != "aiu":
        return False
    P, M, L = st.premise, st.conclusion, nxt.conclusion
    _, c = _find_acd_witness(st)
    for ctx2, fill in decompositions(M):
        if not (isinstance(fill, Copar) and len(fill.parts) == 2):
            continue
        x, y = fill.parts
        if not (isinstance(x, Atom) and isinstance(y, Atom)):
            continue
        for d_at, c_at in ((x, y), (y, x)):
            if c_at != c or _dual_atom(d_at) != c_at:
                continue
            if plug(ctx2, FALSE) != L:
                continue
            if plug(ctx2, copar(d_at, par(c, c))) != P:
                continue
            v1 = plug(ctx2, copar(d_at, d_at, par(c, c)))
            v2 = plug(ctx2, copar(d_at, par(copar(d_at, c), c)))
            v3 = plug(ctx2, par(copar(d_at, c), copar(d_at, c)))
            v4 = plug(ctx2, copar(d_at, c))
            chain = []
            cur = P
            for nxt_s, rule in ((v1, "acu"), (v2, "s"), (v3, "s"), (v4, "aiu"), (L, "aiu")):
                if nxt_s != cur:
                    chain.append(RuleInstance(rule, cur, nxt_s))
                    cur = nxt_s
            if cur != L:
                continue
            steps[i : i + 2] = chain
            return True
    return False


def _done_above(steps: list[RuleInstance], i: int, rule: str) -> bool:
    return all(s.rule == rule for s in steps[:i])


def _push_rule_up(steps: list[RuleInstance], rule: str,
                  allowed: frozenset[str] | None = None,
                  stuck_handler=None) -> list[RuleInstance]:
    """Mirror of _push_rule_down: collect the rule in a maximal prefix."""
    guard = 0
    while True:
        idx = None
        for i in range(len(steps)):
            if steps[i].rule == rule and not _done_above(steps, i, rule):
                idx = i
                break
        if idx is None:
            return steps
        i = idx
        while i > 0 and not _done_above(steps, i, rule):
            guard += 1
            if guard > 20000:
                raise DecomposeError("separation did not terminate")
            rep = _reorder(steps[i - 1], steps[i], allowed=allowed)
            if rep is not None:
                rules = [r.rule for r in rep]
                steps[i - 1 : i + 1] = rep
                if rule not in rules:
                    break
                i = i - 1 + min(j for j, r in enumerate(rules) if r == rule)
                continue
            if stuck_handler is not None and stuck_handler(steps, i - 1):
                break
            raise DecomposeError(f"cannot move {rule} past {steps[i - 1].rule}")
    return steps


def separate_contraction(d: Derivation) -> Derivation:
    """Co-contractions first, contractions last: rebuild through a cut-free
    proof, re-derive with a cut, then push the contractions outward."""
    _require_propositional(d, "separate_contraction")
    _require_check(d, "SKS", "separate_contraction")
    if phase_check(d, PHASE_AC):
        return d
    p = derivation_to_proof(d, "SKS")
    p2 = eliminate_up_rules(p)
    d2 = proof_to_derivation(p2, d.premise, "SKS")
    steps = _drop_noops(list(d2.steps))
    steps = _push_rule_down(steps, "acd", stuck_handler=_transform_stuck_contraction)
    steps = _push_rule_up(steps, "acu")
    out = _rebuild(d.premise, steps)
    if out.conclusion != d.conclusion:
        raise DecomposeError("contraction separation changed the endpoints")
    if not phase_check(out, PHASE_AC):
        raise DecomposeError("contraction separation failed to reach its shape")
    return out


# ---------------------------------------------------------------------------
# separating weakening


def separate_weakening_proof(p: Derivation) -> Derivation:
    """Eager weakening: all weakenings of a cut-free proof in a final phase
    (exhibits the weakening-free proof of the stronger statement)."""
    _require_propositional(p, "separate_weakening_proof")
    _require_check(p, "KS", "separate_weakening_proof")
    if not p.is_proof():
        raise DecomposeError("input is not a proof")
    if phase_check(p, PHASE_AW_PROOF):
        return p
    steps = _drop_noops(list(p.steps))
    steps = _push_rule_down(steps, "awd")
    out = _rebuild(p.premise, steps)
    if out.conclusion != p.conclusion or not phase_check(out, PHASE_AW_PROOF):
        raise DecomposeError("weakening separation failed")
    return out


def separate_weakening(d: Derivation, stats: dict | None = None) -> Derivation:
    """Co-weakenings to the top, weakenings to the bottom, iterating the
    push-up/push-down rounds; the identity/cut count bounds the rounds."""
    _require_propositional(d, "separate_weakening")
    _require_check(d, "SKS", "separate_weakening")
    if phase_check(d, PHASE_AW):
        if stats is not None:
            stats["rounds"] = 0
        return d
    steps = _drop_noops(list(d.steps))
    initial_ai = sum(1 for st in steps if st.rule in ("aid", "aiu"))
    allowed_aw = frozenset({"awu", "awd", "aid", "aiu", "acd", "acu", "s", "m"})
    rounds = 0  # rounds that did not yet produce the shape (the ai measure)
    while True:
        steps = _push_rule_up(steps, "awu", allowed=allowed_aw)
        steps = _push_rule_down(steps, "awd", allowed=allowed_aw)
        if phase_check(_rebuild(d.premise, steps), PHASE_AW):
            break
        rounds += 1
        if rounds > initial_ai:
            raise DecomposeError("weakening separation exceeded its termination bound")
    if stats is not None:
        stats["rounds"] = rounds
        stats["initial_ai"] = initial_ai
    out = _rebuild(d.premise, steps)
    if out.conclusion != d.conclusion:
        raise DecomposeError("weakening separation changed the endpoints")
    return out


# ---------------------------------------------------------------------------
# the full seven-phase decomposition


def _split_prefix(steps: list[RuleInstance], rule: str) -> tuple[list[RuleInstance], list[RuleInstance]]:
    i = 0
    while i < len(steps) and steps[i].rule == rule:
        i += 1
    return steps[:i], steps[i:]


def _split_suffix(steps: list[RuleInstance], rule: str) -> tuple[list[RuleInstance], list[RuleInstance]]:
    i = len(steps)
    while i > 0 and steps[i - 1].rule == rule:
        i -= 1
    return steps[:i], steps[i:]


def separate_all(d: Derivation) -> Derivation:
    """Seven consecutive phases: acu, awu, aid, {s,m}, aiu, awd, acd."""
    _require_propositional(d, "separate_all")
    _require_check(d, "SKS", "separate_all")
    if phase_check(d, PHASE_ALL):
        return d
    d1 = separate_contraction(d)
    steps = list(d1.steps)
    acu_steps, rest = _split_prefix(steps, "acu")
    mid_steps, acd_steps = _split_suffix(rest, "acd")
    mid_premise = acu_steps[-1].conclusion if acu_steps else d1.premise
    mid = _rebuild(mid_premise, mid_steps)
    d2 = separate_weakening(mid)
    steps2 = list(d2.steps)
    awu_steps, rest2 = _split_prefix(steps2, "awu")
    mid2_steps, awd_steps = _split_suffix(rest2, "awd")
    mid2_premise = awu_steps[-1].conclusion if awu_steps else d2.premise
    mid2 = _rebuild(mid2_premise, mid2_steps)
    d3 = separate_identity_cut(mid2)
    out_steps = acu_steps + awu_steps + list(d3.steps) + awd_steps + acd_steps
    out = _rebuild(d.premise, out_steps)
    if out.conclusion != d.conclusion:
        raise DecomposeError("full separation changed the endpoints")
    if not phase_check(out, PHASE_ALL):
        raise DecomposeError("full separation failed to reach the seven phases")
    return out
