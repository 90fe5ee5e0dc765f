"""Machine-checks of the enforcement correctness criteria on finite instances.

The checks are bounded refutation attempts, not proofs: each one explores the
instance up to explicit state/trace bounds and reports pass, fail (with a
witness), or inconclusive when a bound truncated the search.

  soundness      a satisfiable formula holds of every instrumented system;
  transparency   instrumentation leaves satisfying systems strongly bisimilar
                 to themselves;
  nvtt           non-violating traces pass through enforcement unchanged, in
                 both directions;
  violation-sem  the trace-level violation judgement agrees with the
                 state-level semantics;
  normalization  normal-form conversion preserves denotations and yields the
                 required structure;
  oracle         the two satisfaction routes agree on safety formulas.

Also here: the trace-level forcing relation (`violates`), the formula
residual (`after`), and the seeded random generators feeding the suites.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .bisim import bisim
from .formulas import (
    Box,
    FAnd,
    FF,
    FFalse,
    FTrue,
    FVar,
    Formula,
    Max,
    TT,
    classify,
    conj,
    subst_data,
    unfold,
)
from .modelcheck import mc_eval, sat_oracle, satisfies
from .normalizer import normalize
from .processes import (
    LTS,
    NIL,
    Choice,
    Prefix,
    Process,
    Rec,
    PVar,
    StateBoundExceeded,
    reachable,
    traces,
    weak_step,
    weak_trace_derivatives,
)
from .runtime import composite_lts
from .symbolic import (
    TAU,
    ActionPattern,
    Binder,
    Cmp,
    Domain,
    Free,
    Lit,
    SymbolicAction,
    TRUE,
    Val,
    Var,
    fresh_name,
    sym_match,
)
from .synthesis import compile_formula
from .transducers import Transducer


class HarnessError(Exception):
    pass


DEFAULT_BOUND = 10_000
DEFAULT_DEPTH = 6


@dataclass(frozen=True)
class Verdict:
    criterion: str
    subject: tuple
    outcome: str  # 'pass' | 'fail' | 'inconclusive'
    witness: Optional[str] = None

    def __post_init__(self):
        if self.outcome not in ("pass", "fail", "inconclusive"):
            raise ValueError(f"bad outcome {self.outcome!r}")
        if self.outcome == "fail" and not self.witness:
            raise ValueError("a failing verdict needs a witness")

    def line(self) -> str:
        subj = " ".join(str(s) for s in self.subject)
        tail = f" [{self.witness}]" if self.witness else ""
        return f"{self.criterion} {subj!r} {self.outcome}{tail}"


def _trace_text(t) -> str:
    return "·".join(str(a) for a in t) if t else "ε"


# ---------------------------------------------------------------------------
# Violating traces and formula residuals


def violates(system, trace, f: Formula, domain: Domain, bound: int = DEFAULT_BOUND) -> bool:
    """Does the system violate the safety formula along this trace?

    Least-relation membership: falsehood is violated along the empty trace, a
    conjunction along any branch, a necessity by weakly firing a matching
    action and violating the instantiated continuation along the rest, and a
    fixpoint through its unfolding.
    """
    flags_needed = classify(f, domain)
    if not flags_needed.shml:
        raise HarnessError("violating traces are defined for safety formulas")
    if not flags_needed.guarded:
        raise HarnessError("formula is not guarded")
    if isinstance(system, LTS):
        lts, root = system, system.initial
    elif isinstance(system, tuple) and len(system) == 2 and isinstance(system[0], LTS):
        lts, root = system
    else:
        lts, root = reachable(system, bound), system
    memo: dict = {}

    def go(state, t, g) -> bool:
        key = (state, t, g)
        if key in memo:
            return memo[key]
        memo[key] = False  # least relation: cycles contribute nothing
        if isinstance(g, FFalse):
            result = t == ()
        elif isinstance(g, FAnd):
            result = any(go(state, t, item) for item in g.items)
        elif isinstance(g, Max):
            result = go(state, t, unfold(g))
        elif isinstance(g, Box) and t:
            sub = sym_match(g.action, t[0])
            if sub is None:
                result = False
            else:
                cont = subst_data(g.body, sub)
                result = any(go(q, t[1:], cont) for q in weak_step(lts, state, t[0]))
        else:
            result = False
        memo[key] = result
        return result

    return go(root, tuple(trace), f)


def after(f: Formula, label) -> Formula:
    """The residual of a normal-form safety formula once the enforcer has
    seen a label: silent steps and tt/ff leave it unchanged, fixpoints
    unfold, and a conjunction steps into the (at most one) matching branch,
    or collapses to tt when nothing matches."""
    if label is TAU:
        return f
    if isinstance(f, (FTrue, FFalse)):
        return f
    if isinstance(f, Max):
        return after(unfold(f), label)
    if isinstance(f, Box):
        branches = (f,)
    elif isinstance(f, FAnd) and all(isinstance(i, Box) for i in f.items):
        branches = f.items
    else:
        raise HarnessError(f"residual needs a normal-form formula, got {f}")
    for b in branches:
        sub = sym_match(b.action, label)
        if sub is not None:
            return subst_data(b.body, sub)
    return TT


# ---------------------------------------------------------------------------
# Satisfiability


def is_sat(f: Formula, d: Domain, bound: int = DEFAULT_BOUND) -> bool:
    """Satisfiability of a safety formula, decided on the normal form (the
    binder-stripped body is falsehood exactly when nothing satisfies it) and
    cross-validated against the inert system, which satisfies every
    satisfiable safety formula."""
    nf = normalize(f, d)
    core = nf
    while isinstance(core, Max):
        core = core.body
    by_normal_form = not isinstance(core, FFalse)
    by_nil_witness = satisfies(NIL, f, d, bound)
    if by_normal_form != by_nil_witness:
        raise HarnessError(
            f"satisfiability routes disagree on {f}: "
            f"normal form says {by_normal_form}, nil witness says {by_nil_witness}"
        )
    return by_normal_form


# ---------------------------------------------------------------------------
# Correctness criteria


def _violating_witness(system_lts, init, f, domain, depth):
    candidates = sorted(
        traces(system_lts, init, depth), key=lambda t: (len(t), tuple(map(str, t)))
    )
    for t in candidates:
        if t and violates((system_lts, init), t, f, domain):
            return _trace_text(t)
    return None


def check_soundness(
    f: Formula,
    processes,
    d: Domain,
    enforcer: Transducer | None = None,
    bound: int = DEFAULT_BOUND,
    depth: int = DEFAULT_DEPTH,
) -> Verdict:
    """A satisfiable formula must hold of the instrumented system, for every
    given process.  With no explicit enforcer the synthesised one is used."""
    subject = (str(f), ";".join(str(p) for p in processes))
    try:
        if not is_sat(f, d, bound):
            return Verdict("soundness", subject, "pass")
        e = enforcer if enforcer is not None else compile_formula(f, d)
        for p in processes:
            comp = composite_lts(e, p, d, bound)
            if not satisfies((comp, comp.initial), f, d, bound):
                witness = _violating_witness(comp, comp.initial, f, d, depth)
                witness = witness or f"instrumented {p} falsifies the formula"
                return Verdict("soundness", (str(f), str(p)), "fail", witness)
    except StateBoundExceeded as exc:
        return Verdict("soundness", subject, "inconclusive", str(exc))
    return Verdict("soundness", subject, "pass")


def check_transparency(
    f: Formula,
    processes,
    d: Domain,
    enforcer: Transducer | None = None,
    bound: int = DEFAULT_BOUND,
) -> Verdict:
    """Instrumentation must not disturb systems that already satisfy the
    formula: the composite stays strongly bisimilar to the bare system."""
    subject = (str(f), ";".join(str(p) for p in processes))
    try:
        e = enforcer if enforcer is not None else compile_formula(f, d)
        for p in processes:
            plts = reachable(p, bound)
            if not satisfies((plts, p), f, d, bound):
                continue
            comp = composite_lts(e, p, d, bound)
            equal, witness = bisim(comp, comp.initial, plts, p)
            if not equal:
                return Verdict(
                    "transparency",
                    (str(f), str(p)),
                    "fail",
                    f"split on label {witness[0]}",
                )
    except StateBoundExceeded as exc:
        return Verdict("transparency", subject, "inconclusive", str(exc))
    return Verdict("transparency", subject, "pass")


def check_nvtt(
    f: Formula,
    p: Process,
    depth: int,
    d: Domain,
    enforcer: Transducer | None = None,
    bound: int = DEFAULT_BOUND,
) -> Verdict:
    """Non-violating-trace transparency up to the given trace depth: every
    non-violating trace of the process is preserved by instrumentation, and
    the composite adds no such trace with new endpoints."""
    subject = (str(f), str(p), f"depth={depth}")
    try:
        e = enforcer if enforcer is not None else compile_formula(f, d)
        plts = reachable(p, bound)
        comp = composite_lts(e, p, d, bound)
        relevant = traces(plts, p, depth) | traces(comp, comp.initial, depth)
        for t in sorted(relevant, key=lambda t: (len(t), tuple(map(str, t)))):
            if violates((plts, p), t, f, d):
                continue
            plain = weak_trace_derivatives(plts, p, t)
            composite = weak_trace_derivatives(comp, comp.initial, t)
            projected = {cfg.system for cfg in composite}
            missing = plain - projected
            if missing:
                return Verdict(
                    "nvtt",
                    subject,
                    "fail",
                    f"trace {_trace_text(t)} loses derivative {sorted(map(str, missing))[0]}",
                )
            extra = projected - plain
            if extra:
                return Verdict(
                    "nvtt",
                    subject,
                    "fail",
                    f"trace {_trace_text(t)} invents derivative {sorted(map(str, extra))[0]}",
                )
    except StateBoundExceeded as exc:
        return Verdict("nvtt", subject, "inconclusive", str(exc))
    return Verdict("nvtt", subject, "pass")


def _shallow_traces(d: Domain, depth: int):
    out = [()]
    layer = [()]
    for _ in range(depth):
        layer = [t + (a,) for t in layer for a in d.actions]
        out.extend(layer)
    return out


def check_violation_semantics(
    f: Formula,
    processes,
    depth: int,
    d: Domain,
    bound: int = DEFAULT_BOUND,
    exhaustive_depth: int = 2,
) -> Verdict:
    """Both violating-trace conditions, bounded: (1) every violating trace
    found must belong to a state-level violator and be weakly performable;
    (2) a state-level violator must exhibit some violating trace within the
    depth, otherwise the verdict is inconclusive rather than a false pass."""
    subject = (str(f), ";".join(str(p) for p in processes), f"depth={depth}")
    inconclusive = None
    try:
        for p in processes:
            plts = reachable(p, bound)
            candidates = set(traces(plts, p, depth))
            candidates.update(_shallow_traces(d, min(depth, exhaustive_depth)))
            sat_here = satisfies((plts, p), f, d, bound)
            found = []
            for t in sorted(candidates, key=lambda t: (len(t), tuple(map(str, t)))):
                if not violates((plts, p), t, f, d):
                    continue
                found.append(t)
                if sat_here:
                    return Verdict(
                        "violation-sem",
                        (str(f), str(p)),
                        "fail",
                        f"{_trace_text(t)} violates but the system satisfies the formula",
                    )
                if not weak_trace_derivatives(plts, p, t):
                    return Verdict(
                        "violation-sem",
                        (str(f), str(p)),
                        "fail",
                        f"violating trace {_trace_text(t)} is not performable",
                    )
            if not sat_here and not found:
                inconclusive = Verdict(
                    "violation-sem",
                    (str(f), str(p)),
                    "inconclusive",
                    f"no violating trace within depth {depth}",
                )
    except StateBoundExceeded as exc:
        return Verdict("violation-sem", subject, "inconclusive", str(exc))
    return inconclusive or Verdict("violation-sem", subject, "pass")


def check_normalization(
    f: Formula,
    systems,
    d: Domain,
    bound: int = DEFAULT_BOUND,
) -> Verdict:
    """Normal-form conversion must preserve denotations on every given system
    and produce a formula passing both structural normal-form clauses."""
    subject = (str(f),)
    try:
        nf = normalize(f, d)
        flags = classify(nf, d)
        if not flags.shmlnf:
            return Verdict(
                "normalization-equivalence", subject, "fail", f"output not normal: {nf}"
            )
        for system in systems:
            lts = system if isinstance(system, LTS) else reachable(system, bound)
            before = mc_eval(f, lts, {}, d)
            after_ = mc_eval(nf, lts, {}, d)
            if before != after_:
                delta = sorted(map(str, before ^ after_))[0]
                return Verdict(
                    "normalization-equivalence",
                    subject,
                    "fail",
                    f"denotations differ at state {delta}",
                )
    except StateBoundExceeded as exc:
        return Verdict("normalization-equivalence", subject, "inconclusive", str(exc))
    return Verdict("normalization-equivalence", subject, "pass")


def check_oracle_agreement(
    f: Formula, p: Process, d: Domain, bound: int = DEFAULT_BOUND
) -> Verdict:
    subject = (str(f), str(p))
    try:
        lts = reachable(p, bound)
        denotational = satisfies((lts, p), f, d, bound)
        coinductive = sat_oracle((lts, p), f, d, bound)
    except StateBoundExceeded as exc:
        return Verdict("oracle-agreement", subject, "inconclusive", str(exc))
    if denotational != coinductive:
        return Verdict(
            "oracle-agreement",
            subject,
            "fail",
            f"denotational={denotational} coinductive={coinductive}",
        )
    return Verdict("oracle-agreement", subject, "pass")


# ---------------------------------------------------------------------------
# Seeded generators


def _gen_symbolic_action(rng: random.Random, d: Domain, scope, used_names):
    is_input = rng.random() < 0.5
    binders = []

    def slot(values):
        roll = rng.random()
        if roll < 0.45:
            name = fresh_name(set(used_names) | set(d.values) | set(binders) | set(scope))
            binders.append(name)
            return Binder(name)
        if roll < 0.55 and scope:
            return Free(rng.choice(sorted(scope)))
        return Lit(rng.choice(sorted(values)))

    port = slot(d.ports)
    payload = slot(d.payloads)
    pattern = ActionPattern(port, is_input, payload)
    available = list(binders) + sorted(scope)
    condition = TRUE
    if available and rng.random() < 0.55:
        var = rng.choice(available)
        if rng.random() < 0.3 and len(available) > 1:
            other = rng.choice([v for v in available if v != var])
            condition = Cmp(Var(var), Var(other), equal=rng.random() < 0.5)
        else:
            value = rng.choice(sorted(d.values))
            condition = Cmp(Var(var), Val(value), equal=rng.random() < 0.45)
    return SymbolicAction(pattern, condition), binders


MAX_GEN_SIZE = 64


def gen_formula(d: Domain, size: int, seed: int) -> Formula:
    """A closed, guarded safety formula; deterministic per seed."""
    if not 1 <= size <= MAX_GEN_SIZE:
        raise ValueError(f"formula size must be within 1..{MAX_GEN_SIZE}")
    rng = random.Random(f"formula:{seed}:{size}")
    used = set(d.values)

    def go(budget, scope, usable_vars, pending_vars):
        if budget <= 1:
            roll = rng.random()
            if usable_vars and roll < 0.4:
                return FVar(rng.choice(sorted(usable_vars)))
            return FF if roll < 0.65 else TT
        roll = rng.random()
        if roll < 0.55:
            sa, binders = _gen_symbolic_action(rng, d, scope, used)
            used.update(binders)
            body = go(
                budget - 1,
                scope | set(binders),
                usable_vars | pending_vars,
                frozenset(),
            )
            return Box(sa, body)
        if roll < 0.8 and budget >= 3:
            left = go(budget // 2, scope, usable_vars, pending_vars)
            right = go(budget - 1 - budget // 2, scope, usable_vars, pending_vars)
            return conj((left, right))
        var = f"X{len(used)}"
        used.add(var)
        return Max(var, go(budget - 1, scope, usable_vars, pending_vars | {var}))

    return go(size, frozenset(), frozenset(), frozenset())


def gen_process(d: Domain, size: int, seed: int) -> Process:
    """A closed regular process; deterministic per seed."""
    if not 1 <= size <= MAX_GEN_SIZE:
        raise ValueError(f"process size must be within 1..{MAX_GEN_SIZE}")
    rng = random.Random(f"process:{seed}:{size}")
    counter = [0]

    def action():
        if rng.random() < 0.12:
            return TAU
        return rng.choice(d.actions)

    def go(budget, usable_vars, pending_vars):
        if budget <= 1:
            if usable_vars and rng.random() < 0.5:
                return PVar(rng.choice(sorted(usable_vars)))
            return NIL
        roll = rng.random()
        if roll < 0.5:
            return Prefix(action(), go(budget - 1, usable_vars | pending_vars, frozenset()))
        if roll < 0.8 and budget >= 3:
            left = go(budget // 2, usable_vars, pending_vars)
            right = go(budget - 1 - budget // 2, usable_vars, pending_vars)
            return Choice((left, right))
        counter[0] += 1
        var = f"R{counter[0]}"
        body = go(budget - 1, usable_vars, pending_vars | {var})
        if var in _pvars(body):
            return Rec(var, body)
        return body

    return go(size, frozenset(), frozenset())


def _pvars(p) -> frozenset:
    if isinstance(p, PVar):
        return frozenset((p.name,))
    if isinstance(p, Prefix):
        return _pvars(p.cont)
    if isinstance(p, Choice):
        return frozenset().union(*(_pvars(b) for b in p.branches))
    if isinstance(p, Rec):
        return _pvars(p.body) - {p.var}
    return frozenset()


def make_corpus(d: Domain, n: int, seed: int, max_formula_size: int = 8, max_process_size: int = 24):
    """n seeded (formula, process) pairs with sizes cycling up to the caps."""
    out = []
    for i in range(n):
        fsize = 1 + (i % max_formula_size)
        psize = 1 + ((i * 7 + 3) % max_process_size)
        out.append(
            (gen_formula(d, fsize, seed + i), gen_process(d, psize, seed * 31 + i))
        )
    return out
