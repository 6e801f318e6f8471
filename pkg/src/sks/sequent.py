"""One-sided sequent calculus (Gentzen-Schuette GS1p / GS1, optionally with
cut): proof trees with open leaves, schema checking with the eigenvariable
proviso, and both translation directions to and from the calculus of
structures.

File format: one node per line, two spaces of indentation per tree depth,
"<rule>[(instantiation)]: <comma-separated formulas>".  Rule tokens:
ax, top, and, or, contr, weak, exR(t=term), allR(y=ident), cut, open.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .derivation import Derivation, check, compose, embed, from_steps, single
from .rules import RuleInstance
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
    _occurring_unbound,
    _subst_term,
    _term_names,
    binder_names,
    copar,
    decompositions,
    fresh_name,
    negate,
    normalize,
    par,
    plug,
    structure_key,
    subterms_of,
    var,
)


class SequentError(Exception):
    pass


# ---------------------------------------------------------------------------
# formulas: negation on atoms only, strictly binary connectives


class Formula:
    def __str__(self) -> str:
        return formula_text(self)

    def __repr__(self) -> str:
        return f"<{formula_text(self)}>"


@dataclass(frozen=True, repr=False)
class FAtom(Formula):
    name: str
    args: tuple[Term, ...] = ()
    negated: bool = False


@dataclass(frozen=True, repr=False)
class FTop(Formula):
    pass


@dataclass(frozen=True, repr=False)
class FBot(Formula):
    pass


@dataclass(frozen=True, repr=False)
class FAnd(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class FOr(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class FQuant(Formula):
    universal: bool
    name: str
    body: Formula


@dataclass(frozen=True, repr=False)
class _FHole(Formula):
    pass


TOP = FTop()
BOT = FBot()
FHOLE = _FHole()

Sequent = tuple[Formula, ...]


def formula_negate(f: Formula) -> Formula:
    match f:
        case FAtom(name, args, negated):
            return FAtom(name, args, not negated)
        case FTop():
            return BOT
        case FBot():
            return TOP
        case FAnd(a, b):
            return FOr(formula_negate(a), formula_negate(b))
        case FOr(a, b):
            return FAnd(formula_negate(a), formula_negate(b))
        case FQuant(u, x, body):
            return FQuant(not u, x, formula_negate(body))
    raise SequentError(f"cannot negate {f!r}")


def formula_free_vars(f: Formula) -> frozenset[str]:
    match f:
        case FAtom(_, args, _):
            out: set[str] = set()

            def walk(t: Term):
                if t.variable and not t.args:
                    out.add(t.name)
                for s in t.args:
                    walk(s)

            for s in args:
                walk(s)
            return frozenset(out)
        case FAnd(a, b) | FOr(a, b):
            return formula_free_vars(a) | formula_free_vars(b)
        case FQuant(_, x, body):
            return formula_free_vars(body) - {x}
        case _:
            return frozenset()


def _names_in_formula(f: Formula) -> frozenset[str]:
    # identifiers occurring unbound, flag-blind (capture checks)
    return _occurring_unbound(formula_to_structure_raw(f), frozenset())


def fsubst(f: Formula, x: str, t: Term) -> Formula:
    """Substitute t for free x; error when a binder would capture t."""
    t_names = _term_names(t)

    def walk(f: Formula) -> Formula:
        match f:
            case FAtom(name, args, negated):
                return FAtom(name, tuple(_subst_term(a, x, t) for a in args), negated)
            case FAnd(a, b):
                return FAnd(walk(a), walk(b))
            case FOr(a, b):
                return FOr(walk(a), walk(b))
            case FQuant(u, y, body):
                if y == x:
                    return f
                if y in t_names and x in _names_in_formula(body):
                    raise SequentError(f"term {t} not free for {x}: captured by {y}")
                return FQuant(u, y, walk(body))
            case _:
                return f

    return walk(f)


# translations between formulas and structures


def formula_to_structure_raw(f: Formula) -> Structure:
    match f:
        case FAtom(name, args, negated):
            return Atom(name, args, negated)
        case FTop():
            return TRUE
        case FBot():
            return FALSE
        case FAnd(a, b):
            return Copar((formula_to_structure_raw(a), formula_to_structure_raw(b)))
        case FOr(a, b):
            return Par((formula_to_structure_raw(a), formula_to_structure_raw(b)))
        case FQuant(u, x, body):
            return Quant(u, x, formula_to_structure_raw(body))
        case _FHole():
            return HOLE
    raise SequentError(f"cannot translate {f!r}")


def formula_to_structure(f: Formula) -> Structure:
    """Homomorphic map into structures, normalized."""
    return normalize(formula_to_structure_raw(f))


def sequent_to_structure(seq: Sequent) -> Structure:
    """The disjunction of the member translations; the empty sequent is f."""
    if not seq:
        return FALSE
    return par(*(formula_to_structure_raw(f) for f in seq))


def structure_to_formula(s: Structure) -> Formula:
    """Inverse direction; n-ary pars/copars are right-folded to binary."""
    match s:
        case Unit(value):
            return TOP if value else BOT
        case Atom(name, args, negated):
            return FAtom(name, args, negated)
        case Par(parts):
            out = structure_to_formula(parts[-1])
            for p in reversed(parts[:-1]):
                out = FOr(structure_to_formula(p), out)
            return out
        case Copar(parts):
            out = structure_to_formula(parts[-1])
            for p in reversed(parts[:-1]):
                out = FAnd(structure_to_formula(p), out)
            return out
        case Quant(u, x, body):
            return FQuant(u, x, structure_to_formula(body))
        case Hole():
            return FHOLE
    raise SequentError(f"cannot translate {s!r}")


def _fsame(a: Formula, b: Formula) -> bool:
    return a == b or structure_key(formula_to_structure(a)) == structure_key(formula_to_structure(b))


# ---------------------------------------------------------------------------
# sequent proof trees


@dataclass(frozen=True)
class SeqNode:
    rule: str
    sequent: Sequent
    children: tuple["SeqNode", ...] = ()
    term: Term | None = None  # exR instantiation
    eigen: str | None = None  # allR eigenvariable

    def __str__(self) -> str:
        return serialize_sequent(self)

    def open_leaves(self) -> list[Sequent]:
        if self.rule == "open":
            return [self.sequent]
        out: list[Sequent] = []
        for c in self.children:
            out.extend(c.open_leaves())
        return out

    def rules(self) -> Counter:
        c = Counter((self.rule,))
        for ch in self.children:
            c.update(ch.rules())
        return c

    def count(self, rule: str) -> int:
        return self.rules()[rule]


RULE_ARITY = {
    "ax": 0, "top": 0, "open": 0,
    "or": 1, "contr": 1, "weak": 1, "exR": 1, "allR": 1,
    "and": 2, "cut": 2,
}


@dataclass(frozen=True)
class SeqCheckReport:
    ok: bool
    first_failure: tuple[tuple[int, ...], str] | None
    rules_used: Counter = field(default_factory=Counter)
    closed: bool = False  # no open leaves

    def __str__(self) -> str:
        if self.ok:
            used = ", ".join(f"{r}:{n}" for r, n in sorted(self.rules_used.items()))
            kind = "proof" if self.closed else "derivation with open leaves"
            return f"ok ({kind}; {used})" if used else f"ok ({kind})"
        path, why = self.first_failure
        where = ".".join(map(str, path)) or "root"
        return f"FAIL at node {where}: {why}"


def _mminus(seq: Sequent, items: tuple[Formula, ...]) -> Sequent | None:
    pool = list(seq)
    for f in items:
        if f in pool:
            pool.remove(f)
        else:
            return None
    return tuple(pool)


def _mseq_eq(a: Sequent, b: Sequent) -> bool:
    return Counter(a) == Counter(b)


def _node_ok(node: SeqNode, allow_cut: bool, first_order: bool) -> str | None:
    seq = node.sequent
    kids = node.children
    if node.rule not in RULE_ARITY:
        return f"unknown rule {node.rule!r}"
    if len(kids) != RULE_ARITY[node.rule]:
        return f"{node.rule} expects {RULE_ARITY[node.rule]} premises"
    match node.rule:
        case "open":
            return None
        case "ax":
            if len(seq) == 2 and (seq[1] == formula_negate(seq[0])):
                return None
            return "axiom needs exactly a formula and its negation"
        case "top":
            if seq == (TOP,):
                return None
            return "the top rule concludes exactly the singleton top sequent"
        case "or":
            for i, f in enumerate(seq):
                if isinstance(f, FOr):
                    rest = seq[:i] + seq[i + 1 :]
                    if _mseq_eq(kids[0].sequent, rest + (f.left, f.right)):
                        return None
            return "no disjunction matches the premise"
        case "contr":
            for i, f in enumerate(seq):
                rest = seq[:i] + seq[i + 1 :]
                if _mseq_eq(kids[0].sequent, rest + (f, f)):
                    return None
            return "premise is not the conclusion with one formula doubled"
        case "weak":
            for i, f in enumerate(seq):
                rest = seq[:i] + seq[i + 1 :]
                if _mseq_eq(kids[0].sequent, rest):
                    return None
            return "premise is not the conclusion minus one formula"
        case "and":
            for i, f in enumerate(seq):
                if not isinstance(f, FAnd):
                    continue
                rest = seq[:i] + seq[i + 1 :]
                left = _mminus(kids[0].sequent, (f.left,))
                right = _mminus(kids[1].sequent, (f.right,))
                if left is None or right is None:
                    continue
                if _mseq_eq(rest, left + right):
                    return None
            return "premises do not split the context of a conjunction"
        case "cut":
            if not allow_cut:
                return "cut is not admitted here"
            for a in dict.fromkeys(kids[0].sequent):
                left = _mminus(kids[0].sequent, (a,))
                right = _mminus(kids[1].sequent, (formula_negate(a),))
                if left is None or right is None:
                    continue
                if _mseq_eq(seq, left + right):
                    return None
            return "no cut formula joins the premises into the conclusion"
        case "exR":
            if not first_order:
                return "quantifier rule in propositional mode"
            if node.term is None:
                return "exR needs an instantiation term"
            for i, f in enumerate(seq):
                if isinstance(f, FQuant) and not f.universal:
                    rest = seq[:i] + seq[i + 1 :]
                    try:
                        inst = fsubst(f.body, f.name, node.term)
                    except SequentError:
                        continue
                    if _mseq_eq(kids[0].sequent, rest + (inst,)):
                        return None
            return "no existential formula matches the premise"
        case "allR":
            if not first_order:
                return "quantifier rule in propositional mode"
            y = node.eigen
            if y is None:
                return "allR needs an eigenvariable"
            for f in seq:
                if y in formula_free_vars(f):
                    return f"eigenvariable {y} is free in the conclusion"
            for i, f in enumerate(seq):
                if isinstance(f, FQuant) and f.universal:
                    rest = seq[:i] + seq[i + 1 :]
                    try:
                        inst = fsubst(f.body, f.name, var(y))
                    except SequentError:
                        continue
                    if _mseq_eq(kids[0].sequent, rest + (inst,)):
                        return None
            return "no universal formula matches the premise"
    return f"unknown rule {node.rule!r}"


def check_sequent(root: SeqNode, allow_cut: bool = False, first_order: bool = True) -> SeqCheckReport:
    used: Counter = Counter()
    closed = True

    def walk(node: SeqNode, path: tuple[int, ...]):
        nonlocal closed
        why = _node_ok(node, allow_cut, first_order)
        if why is not None:
            return (path, why)
        if node.rule == "open":
            closed = False
        else:
            used[node.rule] += 1
        for i, c in enumerate(node.children):
            bad = walk(c, path + (i,))
            if bad:
                return bad
        return None

    bad = walk(root, ())
    if bad:
        return SeqCheckReport(False, bad, used)
    return SeqCheckReport(True, None, used, closed)


# node constructors (conclusion computed from the premises)


def ax(a: Formula) -> SeqNode:
    return SeqNode("ax", (a, formula_negate(a)))


def top_node() -> SeqNode:
    return SeqNode("top", (TOP,))


def weak(child: SeqNode, f: Formula) -> SeqNode:
    return SeqNode("weak", child.sequent + (f,), (child,))


def contr(child: SeqNode, f: Formula) -> SeqNode:
    rest = _mminus(child.sequent, (f, f))
    if rest is None:
        raise SequentError("contraction needs two copies in the premise")
    return SeqNode("contr", rest + (f,), (child,))


def or_node(child: SeqNode, a: Formula, b: Formula) -> SeqNode:
    rest = _mminus(child.sequent, (a, b))
    if rest is None:
        raise SequentError("or-introduction needs both disjuncts in the premise")
    return SeqNode("or", rest + (FOr(a, b),), (child,))


def and_node(c1: SeqNode, a: Formula, c2: SeqNode, b: Formula) -> SeqNode:
    left = _mminus(c1.sequent, (a,))
    right = _mminus(c2.sequent, (b,))
    if left is None or right is None:
        raise SequentError("and-introduction conjuncts missing")
    return SeqNode("and", left + right + (FAnd(a, b),), (c1, c2))


def cut_node(c1: SeqNode, a: Formula, c2: SeqNode) -> SeqNode:
    left = _mminus(c1.sequent, (a,))
    right = _mminus(c2.sequent, (formula_negate(a),))
    if left is None or right is None:
        raise SequentError("cut formula missing from a premise")
    return SeqNode("cut", left + right, (c1, c2))


def exr(child: SeqNode, x: str, body: Formula, t: Term) -> SeqNode:
    inst = fsubst(body, x, t)
    rest = _mminus(child.sequent, (inst,))
    if rest is None:
        raise SequentError("existential witness missing from the premise")
    return SeqNode("exR", rest + (FQuant(False, x, body),), (child,), term=t)


def allr(child: SeqNode, x: str, body: Formula, y: str) -> SeqNode:
    inst = fsubst(body, x, var(y))
    rest = _mminus(child.sequent, (inst,))
    if rest is None:
        raise SequentError("eigenvariable instance missing from the premise")
    return SeqNode("allR", rest + (FQuant(True, x, body),), (child,), eigen=y)


# ---------------------------------------------------------------------------
# cut-free proof search (bridges the silent re-bracketing/reordering steps)


def _taut_terms(seq: Sequent) -> list[Term]:
    out: dict[Term, None] = {}
    for f in seq:
        s = formula_to_structure_raw(f)
        for t in sorted(subterms_of(s), key=str):
            out.setdefault(t, None)
        for n in sorted(binder_names(s)):
            out.setdefault(var(n), None)
    if not out:
        out.setdefault(Term("c0"), None)
    return list(out)


def prove_tautology(seq: Sequent, fuel: int = 64) -> SeqNode | None:
    """Cut-free GS1 proof search: complete for propositional sequents,
    bounded existential instantiation in the first-order fragment."""
    seq = tuple(seq)
    for i, f in enumerate(seq):
        if isinstance(f, FTop):
            rest = seq[:i] + seq[i + 1 :]
            node = top_node()
            for g in rest:
                node = weak(node, g)
            return node
    for i, f in enumerate(seq):
        neg = formula_negate(f)
        rest = seq[:i] + seq[i + 1 :]
        if neg in rest:
            node = ax(f)
            for g in _mminus(rest, (neg,)):
                node = weak(node, g)
            return node
    for i, f in enumerate(seq):
        if isinstance(f, FOr):
            rest = seq[:i] + seq[i + 1 :]
            sub = prove_tautology(rest + (f.left, f.right), fuel)
            return None if sub is None else or_node(sub, f.left, f.right)
    for i, f in enumerate(seq):
        if isinstance(f, FBot):
            rest = seq[:i] + seq[i + 1 :]
            sub = prove_tautology(rest, fuel)
            return None if sub is None else weak(sub, f)
    for i, f in enumerate(seq):
        if isinstance(f, FQuant) and f.universal:
            rest = seq[:i] + seq[i + 1 :]
            taken: set[str] = set()
            for g in seq:
                taken |= _names_in_formula(g) | formula_free_vars(g)
                taken |= binder_names(formula_to_structure_raw(g))
            k = 0
            while f"eigen{k}" in taken:
                k += 1
            y = f"eigen{k}"
            sub = prove_tautology(rest + (fsubst(f.body, f.name, var(y)),), fuel)
            return None if sub is None else allr(sub, f.name, f.body, y)
    for i, f in enumerate(seq):
        if isinstance(f, FAnd):
            rest = seq[:i] + seq[i + 1 :]
            left = prove_tautology(rest + (f.left,), fuel)
            if left is None:
                continue
            right = prove_tautology(rest + (f.right,), fuel)
            if right is None:
                continue
            node = and_node(left, f.left, right, f.right)
            for g in rest:
                node = contr(node, g)
            return node
    if fuel > 0:
        for i, f in enumerate(seq):
            if isinstance(f, FQuant) and not f.universal:
                rest = seq[:i] + seq[i + 1 :]
                for t in _taut_terms(seq):
                    try:
                        inst = fsubst(f.body, f.name, t)
                    except SequentError:
                        continue
                    sub = prove_tautology(rest + (inst,), fuel - 8)
                    if sub is not None:
                        return exr(sub, f.name, f.body, t)
    return None


def _bridge(left: Formula, right: Formula) -> SeqNode:
    """Closed proof of |- left, -right for formulas whose structures are
    equivalent."""
    proof = prove_tautology((left, formula_negate(right)))
    if proof is None:
        raise SequentError(f"no bridge between {left} and {right}")
    return proof


# ---------------------------------------------------------------------------
# formula contexts and the context lemma


def formula_plug(ctx: Formula, filler: Formula) -> Formula:
    match ctx:
        case _FHole():
            return filler
        case FAnd(a, b):
            return FAnd(formula_plug(a, filler), formula_plug(b, filler))
        case FOr(a, b):
            return FOr(formula_plug(a, filler), formula_plug(b, filler))
        case FQuant(u, x, body):
            return FQuant(u, x, formula_plug(body, filler))
        case _:
            return ctx


def _has_hole(f: Formula) -> bool:
    match f:
        case _FHole():
            return True
        case FAnd(a, b) | FOr(a, b):
            return _has_hole(a) or _has_hole(b)
        case FQuant(_, _, body):
            return _has_hole(body)
        case _:
            return False


def context_lemma(a: Formula, b: Formula, ctx: Formula, leaf: SeqNode | None = None) -> SeqNode:
    """Derivation of |- ctx{a}, -(ctx{b}) from the open leaf |- a, -b (or
    from the supplied subtree proving that sequent)."""
    if leaf is None:
        leaf = SeqNode("open", (a, formula_negate(b)))
    match ctx:
        case _FHole():
            return leaf
        case FAnd(l, r):
            hole_left = _has_hole(l)
            side, other = (l, r) if hole_left else (r, l)
            sub = context_lemma(a, b, side, leaf)  # |- side{a}, -(side{b})
            axn = ax(other)
            if hole_left:
                node = and_node(sub, formula_plug(side, a), axn, other)
            else:
                node = and_node(axn, other, sub, formula_plug(side, a))
            nb = formula_negate(formula_plug(ctx, b))
            assert isinstance(nb, FOr)
            return or_node(node, nb.left, nb.right)
        case FOr(l, r):
            hole_left = _has_hole(l)
            side, other = (l, r) if hole_left else (r, l)
            sub = context_lemma(a, b, side, leaf)
            axn = ax(other)
            not_side_b = formula_negate(formula_plug(side, b))
            if hole_left:
                node = and_node(sub, not_side_b, axn, formula_negate(other))
                node = or_node(node, formula_plug(side, a), other)
            else:
                node = and_node(axn, formula_negate(other), sub, not_side_b)
                node = or_node(node, other, formula_plug(side, a))
            return node
        case FQuant(u, x, body):
            sub = context_lemma(a, b, body, leaf)
            body_a = formula_plug(body, a)
            not_body_b = formula_negate(formula_plug(body, b))
            if u:
                node = exr(sub, x, not_body_b, var(x))
                node = allr(node, x, body_a, x)
            else:
                node = exr(sub, x, body_a, var(x))
                node = allr(node, x, not_body_b, x)
            return node
    raise SequentError(f"cannot recurse on context {ctx!r}")


def _replace_open(tree: SeqNode, sub: SeqNode) -> SeqNode:
    """Substitute the unique open leaf by the subtree (sequents must agree
    as multisets)."""
    if tree.rule == "open":
        if not _mseq_eq(tree.sequent, sub.sequent):
            raise SequentError("subtree conclusion does not match the open leaf")
        return sub
    return SeqNode(
        tree.rule,
        tree.sequent,
        tuple(_replace_open(c, sub) if c.open_leaves() else c for c in tree.children),
        tree.term,
        tree.eigen,
    )



# ---------------------------------------------------------------------------
# fixed sequent proofs for the deep rules (premise side FT, conclusion side
# FR translate to a closed proof of |- FR, -FT)


def _rule_pi(rule: str, binding: dict) -> tuple[SeqNode, Formula, Formula] | None:
    f = structure_to_formula
    if rule in ("id", "aid"):
        A = f(binding["R"])
        FR, FT = FOr(A, formula_negate(A)), TOP
        return weak(or_node(ax(A), A, formula_negate(A)), BOT), FR, FT
    if rule in ("iu", "aiu"):
        A = f(binding["R"])
        nA = formula_negate(A)
        FR, FT = BOT, FAnd(A, nA)
        return weak(or_node(ax(nA), nA, A), BOT), FR, FT
    if rule == "s":
        A, B, C = f(binding["R"]), f(binding["U"]), f(binding["T"])
        nA, nB, nC = map(formula_negate, (A, B, C))
        FT = FAnd(FOr(A, B), C)
        FR = FOr(FAnd(A, C), B)
        left = and_node(ax(A), nA, ax(B), nB)      # |- A, B, -A and -B
        node = and_node(left, A, ax(C), C)         # |- B, -A and -B, -C, A and C
        node = or_node(node, FAnd(A, C), B)
        node = or_node(node, FAnd(nA, nB), nC)
        return node, FR, FT
    if rule in ("cd", "acd"):
        A = f(binding["R"])
        nA = formula_negate(A)
        FR, FT = A, FOr(A, A)
        node = contr(and_node(ax(A), nA, ax(A), nA), A)
        return node, FR, FT
    if rule in ("cu", "acu"):
        A = f(binding["R"])
        nA = formula_negate(A)
        FR, FT = FAnd(A, A), A
        node = contr(and_node(ax(A), A, ax(A), A), nA)
        return node, FR, FT
    if rule in ("wd", "awd"):
        A = f(binding["R"])
        return weak(top_node(), A), A, BOT
    if rule in ("wu", "awu"):
        A = f(binding["R"])
        return weak(top_node(), formula_negate(A)), TOP, A
    if rule == "m":
        A, B, C, D = (f(binding[k]) for k in ("R", "U", "T", "V"))
        nA, nB, nC, nD = map(formula_negate, (A, B, C, D))
        FT = FOr(FAnd(A, B), FAnd(C, D))
        FR = FAnd(FOr(A, C), FOr(B, D))
        X = FAnd(FOr(nA, nB), FOr(nC, nD))  # = -FT
        la = or_node(weak(ax(A), nB), nA, nB)
        lc = or_node(weak(ax(C), nD), nC, nD)
        b1 = or_node(and_node(la, FOr(nA, nB), lc, FOr(nC, nD)), A, C)
        lb = or_node(weak(ax(B), nA), nA, nB)
        ld = or_node(weak(ax(D), nC), nC, nD)
        b2 = or_node(and_node(lb, FOr(nA, nB), ld, FOr(nC, nD)), B, D)
        node = contr(and_node(b1, FOr(A, C), b2, FOr(B, D)), X)
        return node, FR, FT
    if rule == "ud":
        x = binding["x"]
        A, B = f(binding["R"]), f(binding["T"])
        nA, nB = formula_negate(A), formula_negate(B)
        FT = FQuant(True, x, FOr(A, B))
        FR = FOr(FQuant(True, x, A), FQuant(False, x, B))
        core = and_node(ax(A), nA, ax(B), nB)       # |- A, B, -A and -B
        core = exr(core, x, FAnd(nA, nB), var(x))
        core = exr(core, x, B, var(x))
        core = allr(core, x, A, x)
        core = or_node(core, FQuant(True, x, A), FQuant(False, x, B))
        return core, FR, FT
    if rule == "uu":
        x = binding["x"]
        A, B = f(binding["R"]), f(binding["T"])
        nA, nB = formula_negate(A), formula_negate(B)
        FT = FAnd(FQuant(False, x, A), FQuant(True, x, B))
        FR = FQuant(False, x, FAnd(A, B))
        core = and_node(ax(A), A, ax(B), B)         # |- -A, -B, A and B
        core = exr(core, x, FAnd(A, B), var(x))
        core = exr(core, x, nB, var(x))
        core = allr(core, x, nA, x)
        core = or_node(core, FQuant(True, x, nA), FQuant(False, x, nB))
        return core, FR, FT
    if rule == "nd":
        x, t = binding["x"], binding["t"]
        A = structure_to_formula(binding["_R_struct"])
        inst = fsubst(A, x, t)
        return exr(ax(inst), x, A, t), FQuant(False, x, A), inst
    if rule == "nu":
        x, t = binding["x"], binding["t"]
        A = structure_to_formula(binding["_R_struct"])
        nA = formula_negate(A)
        inst = fsubst(A, x, t)
        return exr(ax(inst), x, nA, t), inst, FQuant(True, x, A)
    if rule in ("m1d", "m2d"):
        universal = rule == "m2d"
        x = binding["x"]
        A, B = f(binding["R"]), f(binding["T"])
        nA, nB = formula_negate(A), formula_negate(B)
        q = lambda u, g: FQuant(u, x, g)
        FT = FOr(q(universal, A), q(universal, B))
        FR = q(universal, FOr(A, B))
        if universal:
            left = exr(ax(A), x, nA, var(x))        # |- A, Ex -A
            right = exr(ax(B), x, nB, var(x))
            node = and_node(left, q(False, nA), right, q(False, nB))
            node = or_node(node, A, B)
            node = allr(node, x, FOr(A, B), x)
            return node, FR, FT
        b1 = exr(or_node(weak(ax(A), B), A, B), x, FOr(A, B), var(x))
        b1 = allr(b1, x, nA, x)
        b2 = exr(or_node(weak(ax(B), A), A, B), x, FOr(A, B), var(x))
        b2 = allr(b2, x, nB, x)
        node = contr(and_node(b1, q(True, nA), b2, q(True, nB)), FR)
        return node, FR, FT
    if rule in ("m1u", "m2u"):
        universal = rule == "m1u"
        x = binding["x"]
        A, B = f(binding["R"]), f(binding["T"])
        nA, nB = formula_negate(A), formula_negate(B)
        q = lambda u, g: FQuant(u, x, g)
        FT = q(universal, FAnd(A, B))
        FR = FAnd(q(universal, A), q(universal, B))
        nFT = q(not universal, FOr(nA, nB))
        if universal:
            b1 = exr(or_node(weak(ax(A), nB), nA, nB), x, FOr(nA, nB), var(x))
            b1 = allr(b1, x, A, x)
            b2 = exr(or_node(weak(ax(B), nA), nA, nB), x, FOr(nA, nB), var(x))
            b2 = allr(b2, x, B, x)
            node = contr(and_node(b1, q(True, A), b2, q(True, B)), nFT)
            return node, FR, FT
        left = exr(ax(nA), x, A, var(x))            # |- -A, Ex A
        right = exr(ax(nB), x, B, var(x))
        node = and_node(left, q(False, A), right, q(False, B))
        node = or_node(node, nA, nB)
        node = allr(node, x, FOr(nA, nB), x)
        return node, FR, FT
    return None


# ---------------------------------------------------------------------------
# step witnesses: context plus schema binding, searched from the structures


def _skey(s: Structure):
    return structure_key(s)


def _seq_same(a: Structure, b: Structure) -> bool:
    return a == b or _skey(a) == _skey(b)


def _witness(st: RuleInstance):
    from .rules import _quant_body, _splits2 as sp

    P, C, rule = st.premise, st.conclusion, st.rule
    if rule in ("id", "aid"):
        for ctx, fill in decompositions(C):
            if isinstance(fill, Par):
                for left, right in sp(fill.parts):
                    L, Rp = par(*left), par(*right)
                    if _seq_same(negate(L), Rp) and _seq_same(P, plug(ctx, TRUE)):
                        return ctx, {"R": L}
    elif rule in ("iu", "aiu"):
        for ctx, fill in decompositions(P):
            if isinstance(fill, Copar):
                for left, right in sp(fill.parts):
                    L, Rp = copar(*left), copar(*right)
                    if _seq_same(negate(L), Rp) and _seq_same(C, plug(ctx, FALSE)):
                        return ctx, {"R": L}
    elif rule in ("wd", "awd"):
        for ctx, fill in decompositions(C):
            if _seq_same(P, plug(ctx, FALSE)):
                return ctx, {"R": fill}
    elif rule in ("wu", "awu"):
        for ctx, fill in decompositions(P):
            if _seq_same(C, plug(ctx, TRUE)):
                return ctx, {"R": fill}
    elif rule in ("cd", "acd"):
        for ctx, fill in decompositions(P):
            if isinstance(fill, Par):
                for left, right in sp(fill.parts):
                    L, Rp = par(*left), par(*right)
                    if _seq_same(L, Rp) and _seq_same(C, plug(ctx, L)):
                        return ctx, {"R": L}
    elif rule in ("cu", "acu"):
        for ctx, fill in decompositions(C):
            if isinstance(fill, Copar):
                for left, right in sp(fill.parts):
                    L, Rp = copar(*left), copar(*right)
                    if _seq_same(L, Rp) and _seq_same(P, plug(ctx, L)):
                        return ctx, {"R": L}
    elif rule == "s":
        for ctx, fill in decompositions(P):
            if not isinstance(fill, Copar):
                continue
            for i, child in enumerate(fill.parts):
                if not isinstance(child, Par):
                    continue
                T = copar(*(fill.parts[:i] + fill.parts[i + 1 :]))
                for left, right in sp(child.parts):
                    R, U = par(*left), par(*right)
                    if _seq_same(C, plug(ctx, par(copar(R, T), U))):
                        return ctx, {"R": R, "U": U, "T": T}
    elif rule == "m":
        for ctx, fill in decompositions(P):
            if not (isinstance(fill, Par) and len(fill.parts) == 2):
                continue
            c1, c2 = fill.parts
            if not (isinstance(c1, Copar) and isinstance(c2, Copar)):
                continue
            for l1, r1 in sp(c1.parts):
                for l2, r2 in sp(c2.parts):
                    R, U = copar(*l1), copar(*r1)
                    T, V = copar(*l2), copar(*r2)
                    if _seq_same(C, plug(ctx, copar(par(R, T), par(U, V)))):
                        return ctx, {"R": R, "U": U, "T": T, "V": V}
    elif rule == "ud":
        for ctx, fill in decompositions(P):
            got = _quant_body(fill, True)
            if not got or not isinstance(got[1], Par):
                continue
            x, body = got
            for left, right in sp(body.parts):
                R, T = par(*left), par(*right)
                if _seq_same(C, plug(ctx, par(Quant(True, x, R), Quant(False, x, T)))):
                    return ctx, {"x": x, "R": R, "T": T}
    elif rule == "uu":
        for ctx, fill in decompositions(C):
            got = _quant_body(fill, False)
            if not got or not isinstance(got[1], Copar):
                continue
            x, body = got
            for left, right in sp(body.parts):
                R, T = copar(*left), copar(*right)
                if _seq_same(P, plug(ctx, copar(Quant(False, x, R), Quant(True, x, T)))):
                    return ctx, {"x": x, "R": R, "T": T}
    elif rule == "nd":
        from .rules import _term_universe

        for ctx, fill in decompositions(C):
            if isinstance(fill, Quant) and not fill.universal:
                for t in _term_universe((P, C), ()):
                    try:
                        if _seq_same(P, plug(ctx, substitute(fill.body, fill.name, t))):
                            return ctx, {"x": fill.name, "t": t, "_R_struct": fill.body}
                    except Exception:
                        continue
    elif rule == "nu":
        from .rules import _term_universe

        for ctx, fill in decompositions(P):
            if isinstance(fill, Quant) and fill.universal:
                for t in _term_universe((P, C), ()):
                    try:
                        if _seq_same(C, plug(ctx, substitute(fill.body, fill.name, t))):
                            return ctx, {"x": fill.name, "t": t, "_R_struct": fill.body}
                    except Exception:
                        continue
    elif rule in ("m1d", "m2d"):
        universal = rule == "m2d"
        for ctx, fill in decompositions(C):
            got = _quant_body(fill, universal)
            if not got or not isinstance(got[1], Par):
                continue
            x, body = got
            for left, right in sp(body.parts):
                R, T = par(*left), par(*right)
                if _seq_same(P, plug(ctx, par(Quant(universal, x, R), Quant(universal, x, T)))):
                    return ctx, {"x": x, "R": R, "T": T}
    elif rule in ("m1u", "m2u"):
        universal = rule == "m1u"
        for ctx, fill in decompositions(P):
            got = _quant_body(fill, universal)
            if not got or not isinstance(got[1], Copar):
                continue
            x, body = got
            for left, right in sp(body.parts):
                R, T = copar(*left), copar(*right)
                if _seq_same(C, plug(ctx, copar(Quant(universal, x, R), Quant(universal, x, T)))):
                    return ctx, {"x": x, "R": R, "T": T}
    return None


# ---------------------------------------------------------------------------
# from the sequent calculus to the calculus of structures


def _allr_formula(node: SeqNode):
    y = node.eigen
    for i, g in enumerate(node.sequent):
        if isinstance(g, FQuant) and g.universal:
            rest = node.sequent[:i] + node.sequent[i + 1 :]
            try:
                inst = fsubst(g.body, g.name, var(y))
            except SequentError:
                continue
            if _mseq_eq(node.children[0].sequent, rest + (inst,)):
                return g, rest, inst
    raise SequentError("allR formula not found")


def _and_formula(node: SeqNode):
    for i, g in enumerate(node.sequent):
        if not isinstance(g, FAnd):
            continue
        rest = node.sequent[:i] + node.sequent[i + 1 :]
        left = _mminus(node.children[0].sequent, (g.left,))
        right = _mminus(node.children[1].sequent, (g.right,))
        if left is not None and right is not None and _mseq_eq(rest, left + right):
            return g, left, right
    raise SequentError("and formula not found")


def _cut_formula(node: SeqNode) -> Formula:
    for a in dict.fromkeys(node.children[0].sequent):
        left = _mminus(node.children[0].sequent, (a,))
        right = _mminus(node.children[1].sequent, (formula_negate(a),))
        if left is None or right is None:
            continue
        if _mseq_eq(node.sequent, left + right):
            return a
    raise SequentError("cut formula not found")


def seq_to_cos(root: SeqNode, allow_cut: bool = True) -> Derivation:
    """Translate a GS1(p)(+cut) tree into a derivation from the closure of
    the conjunction of its open-leaf translations down to the translation
    of its conclusion; exactly one cut per Cut node, no new cuts."""
    report = check_sequent(root, allow_cut=allow_cut, first_order=True)
    if not report.ok:
        raise SequentError(f"input fails to check: {report}")

    def build(node: SeqNode) -> Derivation:
        conc = sequent_to_structure(node.sequent)
        match node.rule:
            case "open":
                return single(conc)
            case "top":
                return single(TRUE)
            case "ax":
                return from_steps(TRUE, [RuleInstance("id", TRUE, conc)])
            case "or":
                d = build(node.children[0])
                if d.conclusion != conc:
                    raise SequentError("or-node translation mismatch")
                return d
            case "contr":
                d = build(node.children[0])
                if d.conclusion == conc:
                    return d
                return compose(d, from_steps(d.conclusion, [RuleInstance("cd", d.conclusion, conc)]))
            case "weak":
                d = build(node.children[0])
                if d.conclusion == conc:
                    return d
                return compose(d, from_steps(d.conclusion, [RuleInstance("wd", d.conclusion, conc)]))
            case "exR":
                d = build(node.children[0])
                if d.conclusion == conc:
                    return d
                return compose(d, from_steps(d.conclusion, [RuleInstance("nd", d.conclusion, conc)]))
            case "allR":
                d = build(node.children[0])
                y = node.eigen
                d2 = embed(Quant(True, y, HOLE), d)
                g, rest, inst = _allr_formula(node)
                cur = d2.conclusion
                steps = []
                mid = par(
                    sequent_to_structure(rest),
                    Quant(True, y, formula_to_structure_raw(inst)),
                )
                if cur != mid:
                    steps.append(RuleInstance("ud", cur, mid))
                    cur = mid
                if cur != conc:
                    steps.append(RuleInstance("eq", cur, conc))
                return compose(d2, from_steps(d2.conclusion, steps))
            case "and":
                d1 = build(node.children[0])
                d2 = build(node.children[1])
                d1e = embed(Copar((HOLE, d2.premise)), d1)
                d2e = embed(Copar((d1.conclusion, HOLE)), d2)
                d = compose(d1e, d2e)
                g, phi, psi = _and_formula(node)
                mid = par(sequent_to_structure(psi), copar(d1.conclusion, formula_to_structure(g.right)))
                steps = []
                cur = d.conclusion
                if cur != mid:
                    steps.append(RuleInstance("s", cur, mid))
                    cur = mid
                if cur != conc:
                    steps.append(RuleInstance("s", cur, conc))
                return compose(d, from_steps(d.conclusion, steps))
            case "cut":
                d1 = build(node.children[0])
                d2 = build(node.children[1])
                d1e = embed(Copar((HOLE, d2.premise)), d1)
                d2e = embed(Copar((d1.conclusion, HOLE)), d2)
                d = compose(d1e, d2e)
                a = _cut_formula(node)
                a_s = formula_to_structure(a)
                phi = _mminus(node.children[0].sequent, (a,))
                psi = _mminus(node.children[1].sequent, (formula_negate(a),))
                mid1 = par(sequent_to_structure(phi), copar(a_s, d2.conclusion))
                mid2 = par(sequent_to_structure(phi), sequent_to_structure(psi), copar(a_s, negate(a_s)))
                steps = []
                cur = d.conclusion
                for m in (mid1, mid2):
                    if cur != m:
                        steps.append(RuleInstance("s", cur, m))
                        cur = m
                steps.append(RuleInstance("iu", cur, conc))
                return compose(d, from_steps(d.conclusion, steps))
        raise SequentError(f"cannot translate node {node.rule!r}")

    return build(root)


# ---------------------------------------------------------------------------
# from the calculus of structures to the sequent calculus


def cos_to_seq(d: Derivation) -> SeqNode:
    """Translate a checked derivation into a GS1(+cut) tree: an open leaf
    for the premise, then per step a cut against the context-lemma
    derivation over the per-rule proof (with bridging cuts wherever the
    equational theory silently rebracketed)."""
    from .rules import system_rules

    used = {st.rule for st in d.steps}
    if not used <= (system_rules("SKSgq") | system_rules("SKSq")):
        bad = used - (system_rules("SKSgq") | system_rules("SKSq"))
        raise SequentError(f"rules outside SKSgq/SKSq: {sorted(bad)}")
    rep = check(d, "SKSq" if used <= system_rules("SKSq") else "SKSgq")
    if not rep.ok:
        raise SequentError(f"input derivation fails to check: {rep}")
    current = SeqNode("open", (structure_to_formula(d.premise),))

    def only(node: SeqNode) -> Formula:
        return node.sequent[0]

    for st in d.steps:
        if st.premise == st.conclusion:
            continue
        f1 = only(current)
        target = structure_to_formula(st.conclusion)
        if st.rule == "eq" or _seq_same(st.premise, st.conclusion):
            br = _bridge(target, f1)  # |- target, -f1
            current = cut_node(current, f1, br)
            continue
        w = _witness(st)
        if w is None:
            raise SequentError(f"no schema witness for step {st.rule}")
        ctx, binding = w
        pi = _rule_pi(st.rule, binding)
        if pi is None:
            raise SequentError(f"rule {st.rule} has no sequent proof scheme")
        pi_tree, FR, FT = pi
        fctx = structure_to_formula(ctx)
        cfr = formula_plug(fctx, FR)
        cft = formula_plug(fctx, FT)
        lemma = context_lemma(FR, FT, fctx, leaf=pi_tree)  # |- C{FR}, -(C{FT})
        if cft != f1:
            br = _bridge(cft, f1)  # |- C{FT}, -f1
            current = cut_node(current, f1, br)
        current = cut_node(current, cft, lemma)  # |- C{FR}
        if cfr != target:
            br = _bridge(target, cfr)  # |- target, -C{FR}
            current = cut_node(current, cfr, br)
    return current


# ---------------------------------------------------------------------------
# text format


def formula_text(f: Formula) -> str:
    match f:
        case FAtom(name, args, negated):
            body = name if not args else f"{name}({','.join(str(a) for a in args)})"
            return ("-" if negated else "") + body
        case FTop():
            return "t"
        case FBot():
            return "f"
        case FAnd(a, b):
            return f"({formula_text(a)},{formula_text(b)})"
        case FOr(a, b):
            return f"[{formula_text(a)},{formula_text(b)}]"
        case FQuant(u, x, body):
            return ("!" if u else "?") + x + "." + formula_text(body)
        case _FHole():
            return "_"
    raise SequentError(f"cannot print {f!r}")


def _raw_to_formula(s: Structure) -> Formula:
    from .structure import Neg

    match s:
        case Unit(value):
            return TOP if value else BOT
        case Atom(name, args, negated):
            return FAtom(name, args, negated)
        case Par(parts):
            if len(parts) != 2:
                raise SequentError("formulas use strictly binary disjunctions")
            return FOr(_raw_to_formula(parts[0]), _raw_to_formula(parts[1]))
        case Copar(parts):
            if len(parts) != 2:
                raise SequentError("formulas use strictly binary conjunctions")
            return FAnd(_raw_to_formula(parts[0]), _raw_to_formula(parts[1]))
        case Quant(u, x, body):
            return FQuant(u, x, _raw_to_formula(body))
        case Neg(body):
            return formula_negate(_raw_to_formula(body))
    raise SequentError(f"cannot interpret {s!r} as a formula")


def parse_formula(text: str) -> Formula:
    from .structure import parse

    raw = parse(text)
    return _flag_bound(_raw_to_formula(raw), frozenset())


def _flag_bound(f: Formula, bound: frozenset[str]) -> Formula:
    # mark bound occurrences as variables, preserving the formula shape
    from .structure import _rebind_term

    match f:
        case FAtom(name, args, negated):
            return FAtom(name, tuple(_rebind_term(a, bound) for a in args), negated)
        case FAnd(a, b):
            return FAnd(_flag_bound(a, bound), _flag_bound(b, bound))
        case FOr(a, b):
            return FOr(_flag_bound(a, bound), _flag_bound(b, bound))
        case FQuant(u, x, body):
            return FQuant(u, x, _flag_bound(body, bound | {x}))
        case _:
            return f


def _split_commas(text: str) -> list[str]:
    parts: list[str] = []
    depth = 0
    cur = []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return parts


def serialize_sequent(root: SeqNode) -> str:
    lines: list[str] = []

    def walk(node: SeqNode, depth: int):
        rule = node.rule
        if rule == "exR":
            rule = f"exR(t={node.term})"
        elif rule == "allR":
            rule = f"allR(y={node.eigen})"
        formulas = ", ".join(formula_text(f) for f in node.sequent)
        lines.append("  " * depth + f"{rule}: {formulas}")
        for c in node.children:
            walk(c, depth + 1)

    walk(root, 0)
    return "\n".join(lines) + "\n"


def _parse_term_text(text: str) -> Term:
    from .structure import _Parser, _norm, parse

    p = _Parser(text.strip())
    t = p.term()
    p.skip_ws()
    if p.pos != len(p.text):
        raise SequentError(f"trailing input in term {text!r}")
    return t


def deserialize_sequent(text: str) -> SeqNode:
    rows: list[tuple[int, str, str]] = []
    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        stripped = raw.lstrip(" ")
        indent = len(raw) - len(stripped)
        if indent % 2:
            raise SequentError("indentation must be two spaces per depth")
        if ":" not in stripped:
            raise SequentError(f"missing ':' in line {raw!r}")
        rule_part, _, formulas_part = stripped.partition(":")
        rows.append((indent // 2, rule_part.strip(), formulas_part.strip()))
    if not rows:
        raise SequentError("empty sequent file")

    def parse_row(i: int):
        depth, rule_text, formulas_text = rows[i]
        term = None
        eigen = None
        rule = rule_text
        if "(" in rule_text:
            rule, _, inside = rule_text.partition("(")
            inside = inside.rstrip(")")
            key, _, value = inside.partition("=")
            if key.strip() == "t":
                term = _parse_term_text(value)
            elif key.strip() == "y":
                eigen = value.strip()
            else:
                raise SequentError(f"unknown instantiation {inside!r}")
        seq = tuple(parse_formula(p) for p in _split_commas(formulas_text))
        children = []
        j = i + 1
        while j < len(rows) and rows[j][0] > depth:
            if rows[j][0] == depth + 1:
                child, j = parse_row(j)
                children.append(child)
            else:
                raise SequentError("indentation jumps a level")
        return SeqNode(rule, seq, tuple(children), term, eigen), j

    root, end = parse_row(0)
    if end != len(rows):
        raise SequentError("multiple roots in sequent file")
    return root
