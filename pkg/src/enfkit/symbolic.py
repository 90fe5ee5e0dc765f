"""Finite action domains, symbolic actions, and pattern matching.

Concrete actions are input/output events of the shape ``port?payload`` or
``port!payload`` over a declared finite domain of names.  A symbolic action
pairs a *pattern* -- whose port and payload slots may hold literals, free
data variables, or binders ``(x)`` -- with a boolean *condition* over those
variables; it stands for the set of concrete actions whose values match the
pattern and satisfy the condition.

Everything here is immutable and hashable, so terms double as dict keys and
LTS state components.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Optional, Union


class SymbolicError(Exception):
    pass


class UnboundVariable(SymbolicError):
    """A condition or pattern mentions a variable with no binding."""


# ---------------------------------------------------------------------------
# Domain and actions


@dataclass(frozen=True)
class Domain:
    """A finite universe of port and payload names.

    Ports and payloads share one value namespace: equality tests in
    conditions may compare any variable against any declared name.
    """

    ports: frozenset
    payloads: frozenset

    def __init__(self, ports: Iterable[str], payloads: Iterable[str]):
        object.__setattr__(self, "ports", frozenset(ports))
        object.__setattr__(self, "payloads", frozenset(payloads))
        if not self.ports or not self.payloads:
            raise SymbolicError("domain needs at least one port and one payload")
        for name in self.values:
            if not name.isidentifier():
                raise SymbolicError(f"domain name {name!r} is not an identifier")

    @property
    def values(self) -> frozenset:
        return self.ports | self.payloads

    @property
    def actions(self) -> tuple:
        return _domain_actions(self)


@lru_cache(maxsize=None)
def _domain_actions(d: Domain) -> tuple:
    acts = []
    for port in sorted(d.ports):
        for is_input in (True, False):
            for payload in sorted(d.payloads):
                acts.append(Action(port, is_input, payload))
    return tuple(acts)


@dataclass(frozen=True, order=True)
class Action:
    """One observable event: an input (?) or output (!) of a payload on a port."""

    port: str
    is_input: bool
    payload: str

    def __str__(self):
        return f"{self.port}{'?' if self.is_input else '!'}{self.payload}"


class _Marker:
    """Interned sentinel label (the silent action and the insertion marker)."""

    __slots__ = ("_text",)

    def __init__(self, text):
        self._text = text

    def __repr__(self):
        return self._text

    __str__ = __repr__


#: The silent action; an ordinary LTS label but never part of a trace.
TAU = _Marker("tau")
#: Source marker of an insertion transform: the step is not induced by any
#: system action.
INSERT = _Marker("*")

ExtendedAction = Union[Action, "_Marker"]  # Action or INSERT
OutputLabel = Union[Action, "_Marker"]  # Action or TAU


def label_key(label) -> str:
    """Deterministic sort key usable for both actions and markers."""
    return str(label)


# ---------------------------------------------------------------------------
# Patterns


@dataclass(frozen=True)
class Lit:
    value: str

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Free:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Binder:
    name: str

    def __str__(self):
        return f"({self.name})"


Slot = Union[Lit, Free, Binder]


@dataclass(frozen=True)
class ActionPattern:
    """A pattern over concrete actions; binder names must be pairwise distinct."""

    port: Slot
    is_input: bool
    payload: Slot

    def __post_init__(self):
        b = [s.name for s in (self.port, self.payload) if isinstance(s, Binder)]
        if len(b) != len(set(b)):
            raise SymbolicError(f"pattern binds {b[0]!r} twice")

    @property
    def binders(self) -> frozenset:
        return frozenset(
            s.name for s in (self.port, self.payload) if isinstance(s, Binder)
        )

    @property
    def free_vars(self) -> frozenset:
        return frozenset(
            s.name for s in (self.port, self.payload) if isinstance(s, Free)
        )

    def __str__(self):
        return f"{self.port}{'?' if self.is_input else '!'}{self.payload}"


@dataclass(frozen=True)
class InsertPattern:
    """The special source pattern of an insertion transform; it has no slots."""

    @property
    def binders(self) -> frozenset:
        return frozenset()

    @property
    def free_vars(self) -> frozenset:
        return frozenset()

    def __str__(self):
        return "*"


Pattern = Union[ActionPattern, InsertPattern]


def pattern_of_action(action: Action) -> ActionPattern:
    return ActionPattern(Lit(action.port), action.is_input, Lit(action.payload))


# ---------------------------------------------------------------------------
# Conditions

# Terms inside conditions: either a data variable or a literal value name.


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Val:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Val]


@dataclass(frozen=True)
class CTrue:
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class CFalse:
    def __str__(self):
        return "false"


@dataclass(frozen=True)
class Cmp:
    left: Term
    right: Term
    equal: bool

    def __str__(self):
        return f"{self.left} {'=' if self.equal else '!='} {self.right}"


@dataclass(frozen=True)
class And:
    items: tuple

    def __str__(self):
        return " && ".join(_paren(i, 3) for i in self.items)


@dataclass(frozen=True)
class Or:
    items: tuple

    def __str__(self):
        return " || ".join(_paren(i, 2) for i in self.items)


@dataclass(frozen=True)
class Not:
    item: "Condition"

    def __str__(self):
        return f"!{_paren(self.item, 3)}"


Condition = Union[CTrue, CFalse, Cmp, And, Or, Not]

TRUE = CTrue()
FALSE = CFalse()


def _prec(c) -> int:
    if isinstance(c, Or):
        return 1
    if isinstance(c, And):
        return 2
    if isinstance(c, Not):
        return 3
    return 4


def _paren(c, at_least: int) -> str:
    text = str(c)
    return f"({text})" if _prec(c) < at_least else text


def conjoin(items: Iterable[Condition]) -> Condition:
    """Conjunction with unit and flattening: [] is true, [c] is c."""
    flat = []
    for c in items:
        if isinstance(c, CTrue):
            continue
        flat.append(c)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def cond_vars(c: Condition) -> frozenset:
    if isinstance(c, (CTrue, CFalse)):
        return frozenset()
    if isinstance(c, Cmp):
        return frozenset(t.name for t in (c.left, c.right) if isinstance(t, Var))
    if isinstance(c, Not):
        return cond_vars(c.item)
    return frozenset().union(*(cond_vars(i) for i in c.items))


# ---------------------------------------------------------------------------
# Substitutions

# A substitution maps data-variable names to Terms.  The common case maps to
# Val (a concrete name, as produced by matching); Var targets appear only
# during binder renaming.

Substitution = Mapping[str, Term]


def values_sub(assignment: Mapping[str, str]) -> dict:
    return {k: Val(v) for k, v in assignment.items()}


def subst_term(t: Term, sub: Substitution) -> Term:
    if isinstance(t, Var) and t.name in sub:
        return sub[t.name]
    return t


def subst_condition(c: Condition, sub: Substitution) -> Condition:
    if not sub or isinstance(c, (CTrue, CFalse)):
        return c
    if isinstance(c, Cmp):
        return Cmp(subst_term(c.left, sub), subst_term(c.right, sub), c.equal)
    if isinstance(c, Not):
        return Not(subst_condition(c.item, sub))
    cls = And if isinstance(c, And) else Or
    return cls(tuple(subst_condition(i, sub) for i in c.items))


def subst_slot(s: Slot, sub: Substitution) -> Slot:
    if isinstance(s, Free) and s.name in sub:
        target = sub[s.name]
        return Lit(target.name) if isinstance(target, Val) else Free(target.name)
    return s


def subst_pattern(p: Pattern, sub: Substitution) -> Pattern:
    if isinstance(p, InsertPattern) or not sub:
        return p
    return ActionPattern(
        subst_slot(p.port, sub), p.is_input, subst_slot(p.payload, sub)
    )


# ---------------------------------------------------------------------------
# Matching and evaluation


def match(p: Pattern, gamma: ExtendedAction) -> Optional[dict]:
    """Match a closed pattern against an extended action.

    Returns the substitution binding the pattern's binders, or None when the
    action does not fit.  Matching the insertion marker against the insertion
    pattern yields the empty substitution.
    """
    if isinstance(p, InsertPattern):
        return {} if gamma is INSERT else None
    if not isinstance(gamma, Action):
        return None
    if p.is_input != gamma.is_input:
        return None
    sub = {}
    for slot, value in ((p.port, gamma.port), (p.payload, gamma.payload)):
        if isinstance(slot, Lit):
            if slot.value != value:
                return None
        elif isinstance(slot, Binder):
            sub[slot.name] = Val(value)
        else:
            raise UnboundVariable(f"cannot match open pattern slot {slot}")
    return sub


def eval_condition(c: Condition, sub: Substitution) -> bool:
    """Evaluate a condition under a substitution covering all of its variables."""
    if isinstance(c, CTrue):
        return True
    if isinstance(c, CFalse):
        return False
    if isinstance(c, Cmp):
        lv, rv = (_term_value(t, sub) for t in (c.left, c.right))
        return (lv == rv) if c.equal else (lv != rv)
    if isinstance(c, Not):
        return not eval_condition(c.item, sub)
    if isinstance(c, And):
        return all(eval_condition(i, sub) for i in c.items)
    return any(eval_condition(i, sub) for i in c.items)


def _term_value(t: Term, sub: Substitution) -> str:
    if isinstance(t, Val):
        return t.name
    resolved = sub.get(t.name)
    if not isinstance(resolved, Val):
        raise UnboundVariable(f"variable {t.name!r} is unbound")
    return resolved.name


# ---------------------------------------------------------------------------
# Symbolic actions


@dataclass(frozen=True)
class SymbolicAction:
    pattern: ActionPattern
    condition: Condition

    @property
    def binders(self) -> frozenset:
        return self.pattern.binders

    @property
    def free_vars(self) -> frozenset:
        """Variables bound by an enclosing scope, not by this pattern."""
        return (self.pattern.free_vars | cond_vars(self.condition)) - self.binders

    def is_closed(self) -> bool:
        return not self.free_vars

    def subst(self, sub: Substitution) -> "SymbolicAction":
        narrowed = {k: v for k, v in sub.items() if k not in self.binders}
        return SymbolicAction(
            subst_pattern(self.pattern, narrowed),
            subst_condition(self.condition, narrowed),
        )

    def __str__(self):
        if isinstance(self.condition, CTrue):
            return str(self.pattern)
        return f"{self.pattern} when {self.condition}"


def sym_match(sa: SymbolicAction, gamma: ExtendedAction) -> Optional[dict]:
    """Pattern match plus condition check; the substitution is returned only
    when the condition evaluates to true under it."""
    sub = match(sa.pattern, gamma)
    if sub is None:
        return None
    if not eval_condition(sa.condition, sub):
        return None
    return sub


def denote(sa: SymbolicAction, d: Domain) -> frozenset:
    """The set of domain actions a closed symbolic action stands for."""
    return frozenset(a for a in d.actions if sym_match(sa, a) is not None)


def denote_under(sa: SymbolicAction, d: Domain, env: Mapping[str, str]) -> frozenset:
    """Denotation of a possibly open symbolic action, closing it with env."""
    return denote(sa.subst(values_sub(env)), d)


def assignments(variables, d: Domain):
    """All assignments of the given variables into the domain's value universe."""
    names = sorted(variables)
    values = sorted(d.values)
    for combo in product(values, repeat=len(names)):
        yield dict(zip(names, combo))


@lru_cache(maxsize=200_000)
def _satisfiable_cached(c: Condition, names: tuple, d: Domain) -> bool:
    return any(eval_condition(c, values_sub(env)) for env in assignments(names, d))


def satisfiable(c: Condition, variables, d: Domain) -> bool:
    """Decide by enumeration whether some assignment of the variables into the
    domain makes the condition true."""
    missing = cond_vars(c) - frozenset(variables)
    if missing:
        raise UnboundVariable(f"condition mentions undeclared variables {sorted(missing)}")
    return _satisfiable_cached(c, tuple(sorted(variables)), d)


def disjoint(sa1: SymbolicAction, sa2: SymbolicAction, d: Domain) -> bool:
    """True when the two closed symbolic actions denote disjoint action sets."""
    return not (denote(sa1, d) & denote(sa2, d))


def disjoint_under(sa1: SymbolicAction, sa2: SymbolicAction, d: Domain) -> bool:
    """Disjointness of possibly open guards: they must not overlap under any
    assignment of their outer free variables."""
    outer = sa1.free_vars | sa2.free_vars
    if not outer:
        return disjoint(sa1, sa2, d)
    return all(
        not (denote_under(sa1, d, env) & denote_under(sa2, d, env))
        for env in assignments(outer, d)
    )


# ---------------------------------------------------------------------------
# Pattern normalisation and underlining

_FRESH_POOL = ("y", "z", "w", "u", "v", "x")


def fresh_name(used, base_index: int = 0) -> str:
    """Pick a deterministic identifier not in `used`."""
    pool = _FRESH_POOL[base_index:] + _FRESH_POOL[:base_index]
    for name in pool:
        if name not in used:
            return name
    i = 1
    while True:
        for name in pool:
            cand = f"{name}{i}"
            if cand not in used:
                return cand
        i += 1


def normalize_pattern(sa: SymbolicAction, avoid=frozenset()) -> SymbolicAction:
    """Rewrite a symbolic action so that both pattern slots are binders.

    Each literal or free-variable slot is replaced by a fresh binder, and an
    equality between the fresh binder and the replaced term is conjoined to
    the condition.  The denoted action set is unchanged.
    """
    used = set(avoid) | sa.binders | sa.free_vars | cond_vars(sa.condition)
    new_slots = []
    equalities = []
    for slot in (sa.pattern.port, sa.pattern.payload):
        if isinstance(slot, Binder):
            new_slots.append(slot)
            continue
        name = fresh_name(used)
        used.add(name)
        new_slots.append(Binder(name))
        old = Val(slot.value) if isinstance(slot, Lit) else Var(slot.name)
        equalities.append(Cmp(Var(name), old, equal=True))
    if not equalities:
        return sa
    pattern = ActionPattern(new_slots[0], sa.pattern.is_input, new_slots[1])
    return SymbolicAction(pattern, conjoin([sa.condition, *equalities]))


def underline(p: Pattern) -> ActionPattern:
    """Convert every binder occurrence to a free occurrence of the same name."""
    if isinstance(p, InsertPattern):
        raise SymbolicError("the insertion pattern has no underlined form")

    def drop(s: Slot) -> Slot:
        return Free(s.name) if isinstance(s, Binder) else s

    return ActionPattern(drop(p.port), p.is_input, drop(p.payload))
