"""Proof construction for the propositional systems: exhaustive distribution
to CNF, the three-phase semantic proof (identities, then weakenings, then
switches and contractions), its local variant, semantic elimination of all
up-rules, and bounded bottom-up proof search."""

from __future__ import annotations

from dataclasses import dataclass

from .atomize import to_atomic
from .derivation import Derivation, check, compose, from_steps, single
from .rules import RuleInstance, match_up, system_rules
from .semantics import Assignment, countermodel, prop_atoms
from .structure import (
    FALSE,
    HOLE,
    TRUE,
    Atom,
    Copar,
    Par,
    Structure,
    Unit,
    _fill,
    copar,
    normalize,
    par,
    plug,
    to_text,
)


class ProverError(Exception):
    pass


class NotValid(ProverError):
    def __init__(self, s: Structure, model: Assignment):
        text = ", ".join(f"{k}={int(v)}" for k, v in sorted(model.items()))
        super().__init__(f"{to_text(s)} is not valid: countermodel {{{text}}}")
        self.model = model


@dataclass(frozen=True)
class CnfWitness:
    cnf: Structure
    distribution: Derivation  # from cnf (premise) down to the input, all dd
    complementary_pairs: tuple[tuple[Structure, Structure] | None, ...] | None

    def clauses(self) -> tuple[Structure, ...]:
        if isinstance(self.cnf, Copar):
            return self.cnf.parts
        return (self.cnf,)


def _find_dd_redex(s: Structure, ctx: Structure = HOLE):
    """Outermost-leftmost par with a copar child; returns (ctx, R, T, U)
    such that s == plug(ctx, [R,(T,U)])."""
    match s:
        case Par(parts):
            for i, p in enumerate(parts):
                if isinstance(p, Copar):
                    rest = parts[:i] + parts[i + 1 :]
                    r = par(*rest)
                    t = p.parts[0]
                    u = copar(*p.parts[1:])
                    return ctx, r, t, u
            for i, p in enumerate(parts):
                sub = _find_dd_redex(p, _fill(ctx, Par(parts[:i] + (HOLE,) + parts[i + 1 :])))
                if sub:
                    return sub
            return None
        case Copar(parts):
            for i, p in enumerate(parts):
                sub = _find_dd_redex(p, _fill(ctx, Copar(parts[:i] + (HOLE,) + parts[i + 1 :])))
                if sub:
                    return sub
            return None
        case _:
            return None


def _clause_core(clause: Structure):
    """The lexicographically least complementary pair, or TRUE when the
    clause holds a unit true, else None."""
    atoms: dict[tuple, set[bool]] = {}
    parts = clause.parts if isinstance(clause, Par) else (clause,)
    has_true = any(p == TRUE for p in parts)
    for p in parts:
        if isinstance(p, Atom):
            atoms.setdefault((p.name, p.args), set()).add(p.negated)
    for key in sorted(atoms):
        if atoms[key] == {False, True}:
            name, args = key
            return (Atom(name, args), Atom(name, args, True))
    if has_true:
        return TRUE
    return None


def distribute_to_cnf(s: Structure) -> CnfWitness:
    """Apply the distribute rule upward until no conjunction sits under a
    disjunction; record the derivation and, for valid inputs, each clause's
    complementary pair."""
    s = normalize(s)
    prop_atoms(s)  # raises on quantifiers / predicate atoms
    steps: list[RuleInstance] = []
    cur = s
    guard = 0
    while True:
        found = _find_dd_redex(cur)
        if not found:
            break
        guard += 1
        if guard > 100000:
            raise ProverError("distribution did not terminate")
        ctx, r, t, u = found
        prem = plug(ctx, copar(par(r, t), par(r, u)))
        steps.append(
            RuleInstance("dd", prem, cur, binding=(("R", r), ("T", t), ("U", u), ("_ctx", ctx)))
        )
        cur = prem
    steps.reverse()
    distribution = from_steps(cur, steps)
    cnf = cur
    clauses = cnf.parts if isinstance(cnf, Copar) else (cnf,)
    cores = tuple(_clause_core(c) for c in clauses)
    pairs = None
    if all(c is not None for c in cores):
        pairs = tuple(c if isinstance(c, tuple) else None for c in cores)
    return CnfWitness(cnf, distribution, pairs)


def semantic_proof(s: Structure) -> Derivation:
    """Three-phase proof of a valid propositional structure: identities
    build the complementary pairs, weakenings pad them out to the CNF,
    switches and contractions distribute back down to the input."""
    s = normalize(s)
    model = countermodel(s)
    if model is not None:
        raise NotValid(s, model)
    if s == TRUE:
        return single(TRUE)
    w = distribute_to_cnf(s)
    clauses = w.clauses()
    cores = [_clause_core(c) for c in clauses]
    if any(c is None for c in cores):
        raise ProverError("valid structure has a core-free clause")

    # identity phase: t => copar of the complementary pairs
    built: list[Structure] = [TRUE if c == TRUE else par(*c) for c in cores]
    d = single(TRUE)
    done: list[Structure] = []
    for core in built:
        if core == TRUE:
            continue
        nxt = copar(*(done + [core]))
        prev = d.conclusion
        if nxt != prev:
            d = compose(d, from_steps(prev, [RuleInstance("id", prev, nxt)]))
        done.append(core)

    # weakening phase: pad each clause out with its remaining members
    partials = list(built)
    for i, clause in enumerate(clauses):
        members = list(clause.parts) if isinstance(clause, Par) else [clause]
        core_members = []
        if cores[i] == TRUE:
            core_members = [TRUE]
        else:
            core_members = list(cores[i])
        pool = list(members)
        for cm in core_members:
            pool.remove(cm)
        for member in pool:
            partials[i] = par(partials[i], member)
            nxt = copar(*partials)
            prev = d.conclusion
            if nxt != prev:
                d = compose(d, from_steps(prev, [RuleInstance("wd", prev, nxt)]))
        if partials[i] != clause:
            raise ProverError("weakening phase failed to rebuild a clause")
    if d.conclusion != w.cnf:
        raise ProverError("weakening phase failed to rebuild the CNF")

    # distribution phase: each dd step becomes two switches and a contraction
    for st in w.distribution.steps:
        b = dict(st.binding)
        ctx, r, t, u = b["_ctx"], b["R"], b["T"], b["U"]
        m1 = plug(ctx, par(copar(par(r, t), u), r))
        m2 = plug(ctx, par(r, r, copar(t, u)))
        seq = []
        cur = st.premise
        for nxt, rule in ((m1, "s"), (m2, "s"), (st.conclusion, "cd")):
            if nxt != cur:
                seq.append(RuleInstance(rule, cur, nxt))
                cur = nxt
        if cur != st.conclusion:
            raise ProverError("distribution expansion endpoint mismatch")
        d = compose(d, from_steps(st.premise, seq))
    return d


def local_proof(s: Structure) -> Derivation:
    """semantic_proof with every general step expanded to atomic rules;
    the result uses only aid, awd, acd, s, m (and eq)."""
    return to_atomic(semantic_proof(s))


def eliminate_up_rules(p: Derivation) -> Derivation:
    """Replace a proof with cuts (or any up-rules) by a cut-free proof of
    the same conclusion, via the semantic construction."""
    used = {st.rule for st in p.steps}
    atomic = used <= system_rules("SKS")
    sysname = "SKS" if atomic else "SKSg"
    rep = check(p, sysname)
    if not rep.ok:
        raise ProverError(f"input does not check in {sysname}: {rep}")
    if not p.is_proof():
        raise ProverError("input is not a proof (premise must be the unit true)")
    return local_proof(p.conclusion) if atomic else semantic_proof(p.conclusion)


_SEARCH_RULES = ("acd", "aid", "awd", "m", "s")


def bounded_search(s: Structure, max_contractions: int, max_steps: int) -> Derivation | None:
    """Bottom-up iterative-deepening search for a KS proof; sound but
    deliberately incomplete (a None is not a validity verdict)."""
    s = normalize(s)
    prop_atoms(s)
    if s == TRUE:
        return single(TRUE)

    def dfs(cur: Structure, depth: int, contractions: int, path: set) -> list[RuleInstance] | None:
        if depth == 0:
            return None
        for rule in _SEARCH_RULES:
            if rule == "acd" and contractions >= max_contractions:
                continue
            for inst in match_up(rule, cur):
                prem = inst.premise
                if prem in path:
                    continue
                if prem == TRUE:
                    return [inst]
                rest = dfs(
                    prem,
                    depth - 1,
                    contractions + (rule == "acd"),
                    path | {prem},
                )
                if rest is not None:
                    return rest + [inst]
        return None

    for depth in range(1, max_steps + 1):
        found = dfs(s, depth, 0, {s})
        if found is not None:
            return from_steps(TRUE, found)
    return None
