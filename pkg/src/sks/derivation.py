"""Derivations and proofs as first-class objects: checking against a system,
vertical composition, embedding into contexts, dualization, the
derivation/proof correspondence, and the text file format.

File format: first line a structure, then alternating rule lines
"--- <ruleid> [@ <dot-separated child path>]" and structure lines.
Blank lines are ignored, "#" starts a comment line.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .rules import (
    ALL_RULES,
    DUAL,
    RuleId,
    RuleInstance,
    SystemId,
    dual_rule,
    find_witness,
    system_rules,
    validate_instance,
)
from .structure import (
    FALSE,
    HOLE,
    TRUE,
    Copar,
    Par,
    Structure,
    count_holes,
    is_quantified,
    negate,
    normalize,
    par,
    parse,
    plug,
    to_text,
)


class DerivationError(Exception):
    pass


@dataclass(frozen=True)
class Derivation:
    """Alternating sequence of structures and rule instances, premise first,
    conclusion last; step i connects structures[i] to structures[i+1]."""

    structures: tuple[Structure, ...]
    steps: tuple[RuleInstance, ...] = ()

    def __post_init__(self):
        if not self.structures:
            raise DerivationError("a derivation holds at least one structure")
        if len(self.steps) != len(self.structures) - 1:
            raise DerivationError("steps and structures out of step")
        for i, st in enumerate(self.steps):
            if st.premise != self.structures[i] or st.conclusion != self.structures[i + 1]:
                raise DerivationError(f"step {i} does not connect its neighbour structures")

    @property
    def premise(self) -> Structure:
        return self.structures[0]

    @property
    def conclusion(self) -> Structure:
        return self.structures[-1]

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return serialize(self)

    def is_proof(self) -> bool:
        return self.premise == TRUE

    def rules(self) -> Counter:
        return Counter(st.rule for st in self.steps)


Proof = Derivation


def single(s: Structure) -> Derivation:
    return Derivation((s,))


def from_steps(premise: Structure, steps) -> Derivation:
    """Build a derivation from (rule, conclusion) pairs or RuleInstances."""
    structures = [premise]
    insts = []
    for st in steps:
        if isinstance(st, RuleInstance):
            inst = st
        else:
            rule, conclusion = st
            inst = RuleInstance(rule, structures[-1], conclusion)
        if inst.premise != structures[-1]:
            raise DerivationError("step premise mismatch while building")
        insts.append(inst)
        structures.append(inst.conclusion)
    return Derivation(tuple(structures), tuple(insts))


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    first_failure: tuple[int, str] | None
    rules_used: Counter = field(default_factory=Counter)
    is_proof: bool = False

    def __str__(self) -> str:
        if self.ok:
            used = ", ".join(f"{r}:{n}" for r, n in sorted(self.rules_used.items()))
            kind = "proof" if self.is_proof else "derivation"
            return f"ok ({kind}; {used})" if used else f"ok ({kind})"
        idx, why = self.first_failure
        return f"FAIL at step {idx}: {why}"


def check(d: Derivation, sys: SystemId | frozenset[RuleId]) -> CheckReport:
    """Every step must use a rule of the system and realize its schema."""
    allowed = system_rules(sys)
    used: Counter = Counter()
    for i, st in enumerate(d.steps):
        if st.rule not in allowed:
            return CheckReport(False, (i, f"rule {st.rule} not in system"), used)
        ok, why = validate_instance(st)
        if not ok:
            return CheckReport(False, (i, why), used)
        used[st.rule] += 1
    return CheckReport(True, None, used, d.is_proof())


def compose(d1: Derivation, d2: Derivation) -> Derivation:
    """Vertical composition; endpoints must agree syntactically."""
    if d1.conclusion != d2.premise:
        raise DerivationError(
            f"cannot compose: {to_text(d1.conclusion)} is not {to_text(d2.premise)}"
        )
    return Derivation(d1.structures + d2.structures[1:], d1.steps + d2.steps)


SHALLOW_RULES = frozenset({"aisd", "aisu"})


def embed(context: Structure, d: Derivation) -> Derivation:
    """Place a derivation of deep rules into a one-hole context."""
    if count_holes(context) != 1:
        raise DerivationError("embedding context must have exactly one hole")
    for st in d.steps:
        if st.rule in SHALLOW_RULES:
            raise DerivationError(f"cannot embed shallow rule {st.rule}")
    structures = tuple(plug(context, s) for s in d.structures)
    steps = tuple(
        RuleInstance(st.rule, structures[i], structures[i + 1])
        for i, st in enumerate(d.steps)
    )
    # embedding can collapse steps to no-ops (context may erase the redex);
    # these remain valid instances for non-atomic rules, but atomic rules
    # must keep their shape, which plugging preserves
    return Derivation(structures, steps)


def dualize(d: Derivation) -> Derivation:
    """Flip upside-down, negate every structure, dualize every rule."""
    structures = tuple(negate(s) for s in reversed(d.structures))
    steps = tuple(
        RuleInstance(dual_rule(st.rule), structures[i], structures[i + 1])
        for i, st in enumerate(reversed(d.steps))
    )
    return Derivation(structures, steps)


def cut_count(d: Derivation) -> int:
    """Number of cut-flavoured steps (iu, aiu, aisu)."""
    return sum(1 for st in d.steps if st.rule in ("iu", "aiu", "aisu"))


def _atomize_step_if(inst: RuleInstance, atomic: bool) -> Derivation:
    if not atomic:
        return from_steps(inst.premise, [inst])
    from .atomize import expand_general

    return expand_general(inst)


def _infer_symmetric_system(d: Derivation) -> tuple[SystemId, bool]:
    """(system, atomic?) for the symmetric system the derivation lives in."""
    used = {st.rule for st in d.steps}
    quant = any(is_quantified(s) for s in d.structures)
    for sys, atomic in (("SKS", True), ("SKSq", True), ("SKSg", False), ("SKSgq", False)):
        if used <= system_rules(sys) and (quant <= (sys in ("SKSq", "SKSgq"))):
            if not quant and sys in ("SKSq", "SKSgq"):
                continue
            return sys, atomic
    return ("SKSgq" if quant else "SKSg"), False


def derivation_to_proof(d: Derivation, sys: SystemId | None = None) -> Derivation:
    """From a derivation T -> R, a proof of [negate(T), R] in the same
    symmetric system (general identity expanded for the atomic systems)."""
    if sys is None:
        sys, atomic = _infer_symmetric_system(d)
    else:
        atomic = sys in ("SKS", "SKSq")
    report = check(d, sys)
    if not report.ok:
        raise DerivationError(f"input does not check in {sys}: {report}")
    t_bar = negate(d.premise)
    opening = par(t_bar, d.premise)
    id_step = RuleInstance("id", TRUE, opening)
    head = _atomize_step_if(id_step, atomic)
    body = embed(Par((t_bar, HOLE)), d)
    return compose(head, body)


def proof_to_derivation(p: Derivation, t: Structure, sys: SystemId | None = None) -> Derivation:
    """From a proof of [negate(t), R], a derivation from t to R using a
    switch and a cut."""
    if not p.is_proof():
        raise DerivationError("input premise is not the unit true")
    if sys is None:
        sys, atomic = _infer_symmetric_system(p)
    else:
        atomic = sys in ("SKS", "SKSq")
    t = normalize(t)
    t_bar = negate(t)
    conclusion = p.conclusion
    if t_bar == FALSE:
        r = conclusion  # [f, R] = R
    else:
        if not isinstance(conclusion, Par):
            parts: tuple[Structure, ...] = (conclusion,)
        else:
            parts = conclusion.parts
        rest = list(parts)
        if isinstance(t_bar, Par):
            for piece in t_bar.parts:
                if piece not in rest:
                    raise DerivationError(f"conclusion lacks the component {to_text(piece)}")
                rest.remove(piece)
        else:
            if t_bar not in rest:
                raise DerivationError(f"conclusion is not of the shape [{to_text(t_bar)}, R]")
            rest.remove(t_bar)
        r = par(*rest) if rest else FALSE

    body = embed(Copar((t, HOLE)), p)  # t = (t, true) ... (t, [t_bar, r])
    mid = plug(Copar((t, HOLE)), conclusion)
    switched = par(r, Copar((t, t_bar)))
    steps: list[RuleInstance] = []
    s_inst = RuleInstance("s", mid, switched)
    if mid != switched:
        steps.append(s_inst)
    cut_inst = RuleInstance("iu", switched, r)
    tail = _atomize_step_if(cut_inst, atomic) if switched != r else single(r)
    d = compose(body, compose(from_steps(mid, steps), tail))
    return d


# ---------------------------------------------------------------------------
# file format


def serialize(d: Derivation) -> str:
    lines = [to_text(d.structures[0])]
    for i, st in enumerate(d.steps):
        rule_line = f"--- {st.rule}"
        if st.position:
            rule_line += " @ " + ".".join(str(i) for i in st.position)
        lines.append(rule_line)
        lines.append(to_text(d.structures[i + 1]))
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> Derivation:
    items: list[tuple[str, str]] = []  # ("s", structure-text) / ("r", rule-text)
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("---"):
            items.append(("r", line[3:].strip()))
        else:
            items.append(("s", line))
    if not items or items[0][0] != "s":
        raise DerivationError("derivation file must start with a structure")
    structures: list[Structure] = []
    steps: list[tuple[str, tuple[int, ...] | None]] = []
    expect_structure = True
    for kind, payload in items:
        if expect_structure:
            if kind != "s":
                raise DerivationError("expected a structure line")
            structures.append(normalize(parse(payload)))
            expect_structure = False
        else:
            if kind != "r":
                raise DerivationError(f"expected a rule line before {payload!r}")
            parts = payload.split("@")
            rule = parts[0].strip()
            if rule not in ALL_RULES:
                raise DerivationError(f"unknown rule {rule!r}")
            position = None
            if len(parts) > 1:
                try:
                    position = tuple(int(x) for x in parts[1].strip().split(".") if x != "")
                except ValueError:
                    raise DerivationError(f"bad position {parts[1]!r}") from None
            steps.append((rule, position))
            expect_structure = True
    if expect_structure and steps:
        raise DerivationError("derivation file ends with a dangling rule line")
    insts = tuple(
        RuleInstance(rule, structures[i], structures[i + 1], pos)
        for i, (rule, pos) in enumerate(steps)
    )
    return Derivation(tuple(structures), insts)
