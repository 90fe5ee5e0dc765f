"""Regular CCS process terms and finite labelled transition systems.

Processes are built from nil, action/tau prefixing, finite choice and
guarded recursion.  `reachable` explores a term's state space up to a bound,
identifying states by structural term equality (a recursive term is unfolded
only when it fires, so a term and its unfolding never coexist as distinct
states).  An LTS can also be given explicitly, edge by edge.
"""
from __future__ import annotations

from dataclasses import dataclass
from collections import deque
from typing import Union

from .symbolic import TAU, label_key


class ProcessError(Exception):
    pass


class StateBoundExceeded(ProcessError):
    """State-space exploration hit its configured bound."""


@dataclass(frozen=True)
class PNil:
    def __str__(self):
        return "nil"


@dataclass(frozen=True)
class Prefix:
    label: object  # Action or TAU
    cont: "Process"

    def __str__(self):
        return f"{self.label}.{_paren(self.cont, 2)}"


@dataclass(frozen=True)
class Choice:
    branches: tuple

    def __str__(self):
        return " + ".join(_paren(b, 2) for b in self.branches)


@dataclass(frozen=True)
class Rec:
    var: str
    body: "Process"

    def __str__(self):
        return f"rec {self.var}.{self.body}"


@dataclass(frozen=True)
class PVar:
    name: str

    def __str__(self):
        return self.name


Process = Union[PNil, Prefix, Choice, Rec, PVar]

NIL = PNil()


def _prec(p) -> int:
    if isinstance(p, Rec):
        return 0
    if isinstance(p, Choice):
        return 1
    if isinstance(p, Prefix):
        return 2
    return 3


def _paren(p, at_least: int) -> str:
    text = str(p)
    return f"({text})" if _prec(p) < at_least else text


def prefix_chain(labels, tail: Process = NIL) -> Process:
    out = tail
    for lab in reversed(list(labels)):
        out = Prefix(lab, out)
    return out


def free_proc_vars(p: Process) -> frozenset:
    if isinstance(p, PVar):
        return frozenset((p.name,))
    if isinstance(p, Prefix):
        return free_proc_vars(p.cont)
    if isinstance(p, Choice):
        return frozenset().union(*(free_proc_vars(b) for b in p.branches))
    if isinstance(p, Rec):
        return free_proc_vars(p.body) - {p.var}
    return frozenset()


def subst_proc(p: Process, var: str, rep: Process) -> Process:
    if isinstance(p, PVar):
        return rep if p.name == var else p
    if isinstance(p, Prefix):
        return Prefix(p.label, subst_proc(p.cont, var, rep))
    if isinstance(p, Choice):
        return Choice(tuple(subst_proc(b, var, rep) for b in p.branches))
    if isinstance(p, Rec):
        if p.var == var:
            return p
        # rep is always closed in the unfolding use, so no capture can occur
        return Rec(p.var, subst_proc(p.body, var, rep))
    return p


def validate_process(p: Process, bound_vars=frozenset()):
    """Reject open terms and unguarded recursion (e.g. rec X.X), which has no
    well-defined transition semantics."""
    _validate(p, frozenset(bound_vars), frozenset())


def _validate(p, bound, unguarded):
    if isinstance(p, PVar):
        if p.name not in bound:
            raise ProcessError(f"unbound process variable {p.name!r}")
        if p.name in unguarded:
            raise ProcessError(f"recursion variable {p.name!r} is not action-guarded")
    elif isinstance(p, Prefix):
        _validate(p.cont, bound, frozenset())
    elif isinstance(p, Choice):
        for b in p.branches:
            _validate(b, bound, unguarded)
    elif isinstance(p, Rec):
        _validate(p.body, bound | {p.var}, unguarded | {p.var})


def step(p: Process):
    """All transitions of a closed process term, in source order."""
    out = []
    seen = set()

    def emit(label, target):
        key = (label_key(label), target)
        if key not in seen:
            seen.add(key)
            out.append((label, target))

    def walk(term):
        if isinstance(term, Prefix):
            emit(term.label, term.cont)
        elif isinstance(term, Choice):
            for b in term.branches:
                walk(b)
        elif isinstance(term, Rec):
            walk(subst_proc(term.body, term.var, term))
        elif isinstance(term, PVar):
            raise ProcessError(f"cannot step open term with free {term.name!r}")

    walk(p)
    return out


# ---------------------------------------------------------------------------
# Labelled transition systems


class LTS:
    """An explicit finite LTS: states, labelled transitions, one initial state.

    States may be process terms, plain strings, or monitored configurations;
    they only need to be hashable.
    """

    def __init__(self, initial, edges, states=None):
        self.initial = initial
        self._steps = {}
        order = []
        seen = set()

        def note(s):
            if s not in seen:
                seen.add(s)
                order.append(s)

        note(initial)
        for src, label, dst in edges:
            note(src)
            note(dst)
            self._steps.setdefault(src, []).append((label, dst))
        for s in states or ():
            note(s)
        self.states = tuple(order)
        for s in self.states:
            self._steps.setdefault(s, [])

    def steps(self, s):
        return tuple(self._steps[s])

    def labels(self):
        out = set()
        for edges in self._steps.values():
            out.update(label for label, _ in edges)
        return out

    def __len__(self):
        return len(self.states)

    def transitions(self):
        for src in self.states:
            for label, dst in self._steps[src]:
                yield src, label, dst


def explore(initial, step_fn, bound: int) -> LTS:
    """BFS closure of a step function; raises StateBoundExceeded past `bound`."""
    if bound < 1:
        raise ValueError("bound must be at least 1")
    edges = []
    seen = {initial}
    queue = deque([initial])
    while queue:
        src = queue.popleft()
        for label, dst in step_fn(src):
            edges.append((src, label, dst))
            if dst not in seen:
                if len(seen) >= bound:
                    raise StateBoundExceeded(
                        f"more than {bound} reachable states"
                    )
                seen.add(dst)
                queue.append(dst)
    return LTS(initial, edges)


def reachable(p: Process, bound: int) -> LTS:
    validate_process(p)
    return explore(p, step, bound)


def tau_closure(lts: LTS, s) -> frozenset:
    out = {s}
    queue = deque([s])
    while queue:
        cur = queue.popleft()
        for label, dst in lts.steps(cur):
            if label is TAU and dst not in out:
                out.add(dst)
                queue.append(dst)
    return frozenset(out)


def weak_step(lts: LTS, s, label) -> frozenset:
    """Weak derivatives: tau* label tau* (for label tau: tau* passing one tau)."""
    pre = tau_closure(lts, s)
    mids = set()
    for q in pre:
        for lab, dst in lts.steps(q):
            if lab == label or (lab is TAU and label is TAU):
                mids.add(dst)
    out = set()
    for m in mids:
        out |= tau_closure(lts, m)
    return frozenset(out)


def weak_trace_derivatives(lts: LTS, s, trace) -> frozenset:
    """States reachable via the weak transitions of an observable trace."""
    current = tau_closure(lts, s)
    for action in trace:
        nxt = set()
        for q in current:
            nxt |= weak_step(lts, q, action)
        current = frozenset(nxt)
        if not current:
            break
    return current


def traces(lts: LTS, s, depth: int) -> frozenset:
    """All observable traces of length at most `depth`, as tuples of actions."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    found = {()}
    frontier = {(): tau_closure(lts, s)}
    for _ in range(depth):
        nxt = {}
        for trace, states in frontier.items():
            for q in states:
                for label, dst in lts.steps(q):
                    if label is TAU:
                        continue
                    extended = trace + (label,)
                    nxt.setdefault(extended, set()).update(tau_closure(lts, dst))
        if not nxt:
            break
        found.update(nxt.keys())
        frontier = {t: frozenset(ss) for t, ss in nxt.items()}
    return frozenset(found)
