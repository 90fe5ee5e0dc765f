"""Transducer terms: the enforcers placed between a system and its environment.

A transducer is the identity, a symbolic transform prefix, a finite sum, or a
recursive term.  A prefix `{p when c -> p'}.e` transforms any action matching
p (under condition c) into the instantiation of p'; a `tau` target suppresses
the action, a `*` source pattern inserts one.  Transition labels are pairs
(consumed extended action, produced label).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .processes import LTS, explore
from .symbolic import (
    INSERT,
    TAU,
    ActionPattern,
    Binder,
    CTrue,
    Free,
    InsertPattern,
    Lit,
    Substitution,
    Var,
    cond_vars,
    eval_condition,
    fresh_name,
    label_key,
    match,
    subst_condition,
    subst_pattern,
    underline,
)


class TransducerError(Exception):
    pass


@dataclass(frozen=True)
class TId:
    def __str__(self):
        return "id"


@dataclass(frozen=True)
class TPrefix:
    pattern: object  # ActionPattern | InsertPattern
    condition: object
    target: object  # ActionPattern (no binders) | TAU
    cont: "Transducer"

    def __str__(self):
        parts = [str(self.pattern)]
        if not isinstance(self.condition, CTrue):
            parts.append(f"when {self.condition}")
        if self.target is TAU:
            parts.append("-> tau")
        elif isinstance(self.pattern, InsertPattern) or self.target != underline(
            self.pattern
        ):
            parts.append(f"-> {self.target}")
        return f"{{{' '.join(parts)}}}.{_paren(self.cont, 2)}"


@dataclass(frozen=True)
class TSum:
    branches: tuple

    def __str__(self):
        return " + ".join(_paren(b, 2) for b in self.branches)


@dataclass(frozen=True)
class TRec:
    var: str
    body: "Transducer"

    def __str__(self):
        return f"rec {self.var}.{self.body}"


@dataclass(frozen=True)
class TVar:
    name: str

    def __str__(self):
        return self.name


Transducer = Union[TId, TPrefix, TSum, TRec, TVar]

ID = TId()


def _prec(e) -> int:
    if isinstance(e, TRec):
        return 0
    if isinstance(e, TSum):
        return 1
    if isinstance(e, TPrefix):
        return 2
    return 3


def _paren(e, at_least: int) -> str:
    text = str(e)
    return f"({text})" if _prec(e) < at_least else text


# ---------------------------------------------------------------------------
# Variables and substitution


def free_rec_vars(e: Transducer) -> frozenset:
    if isinstance(e, TVar):
        return frozenset((e.name,))
    if isinstance(e, TPrefix):
        return free_rec_vars(e.cont)
    if isinstance(e, TSum):
        return frozenset().union(*(free_rec_vars(b) for b in e.branches))
    if isinstance(e, TRec):
        return free_rec_vars(e.body) - {e.var}
    return frozenset()


def free_data_vars(e: Transducer) -> frozenset:
    if isinstance(e, TPrefix):
        inner = (
            cond_vars(e.condition)
            | (e.target.free_vars if isinstance(e.target, ActionPattern) else frozenset())
            | free_data_vars(e.cont)
        )
        return e.pattern.free_vars | (inner - e.pattern.binders)
    if isinstance(e, TSum):
        return frozenset().union(*(free_data_vars(b) for b in e.branches))
    if isinstance(e, TRec):
        return free_data_vars(e.body)
    return frozenset()


def subst_rec(e: Transducer, var: str, rep: Transducer) -> Transducer:
    if isinstance(e, TVar):
        return rep if e.name == var else e
    if isinstance(e, TPrefix):
        return TPrefix(e.pattern, e.condition, e.target, subst_rec(e.cont, var, rep))
    if isinstance(e, TSum):
        return TSum(tuple(subst_rec(b, var, rep) for b in e.branches))
    if isinstance(e, TRec):
        if e.var == var:
            return e
        return TRec(e.var, subst_rec(e.body, var, rep))
    return e


def subst_data(e: Transducer, sub: Substitution) -> Transducer:
    if not sub:
        return e
    if isinstance(e, TSum):
        return TSum(tuple(subst_data(b, sub) for b in e.branches))
    if isinstance(e, TRec):
        return TRec(e.var, subst_data(e.body, sub))
    if isinstance(e, TPrefix):
        narrowed = {k: v for k, v in sub.items() if k not in e.pattern.binders}
        if not narrowed:
            return e
        targets = {v.name for v in narrowed.values() if isinstance(v, Var)}
        pattern, cond, target, cont = e.pattern, e.condition, e.target, e.cont
        for name in sorted(e.pattern.binders & targets):
            taken = (
                targets
                | set(narrowed)
                | pattern.binders
                | cond_vars(cond)
                | free_data_vars(cont)
            )
            fresh = fresh_name(taken)
            ren = {name: Var(fresh)}
            pattern = _rename_binder(pattern, name, fresh)
            cond = subst_condition(cond, ren)
            if isinstance(target, ActionPattern):
                target = subst_pattern(target, ren)
            cont = subst_data(cont, ren)
        new_target = (
            subst_pattern(target, narrowed) if isinstance(target, ActionPattern) else target
        )
        return TPrefix(
            subst_pattern(pattern, narrowed),
            subst_condition(cond, narrowed),
            new_target,
            subst_data(cont, narrowed),
        )
    return e


def _rename_binder(pat, old, new):
    if isinstance(pat, InsertPattern):
        return pat

    def fix(slot):
        if isinstance(slot, Binder) and slot.name == old:
            return Binder(new)
        return slot

    return ActionPattern(fix(pat.port), pat.is_input, fix(pat.payload))


# ---------------------------------------------------------------------------
# Well-formedness


def validate_transducer(e: Transducer, rec_scope=frozenset(), data_scope=frozenset()):
    """Check closedness and the prefix constraints: the target pattern has no
    binders and mentions only variables bound by the source pattern (or an
    enclosing one); recursion must be transform-guarded."""
    _validate(e, frozenset(rec_scope), frozenset(data_scope), frozenset())


def _validate(e, rec_scope, data_scope, unguarded):
    if isinstance(e, TVar):
        if e.name not in rec_scope:
            raise TransducerError(f"unbound recursion variable {e.name!r}")
        if e.name in unguarded:
            raise TransducerError(
                f"recursion variable {e.name!r} is not transform-guarded"
            )
    elif isinstance(e, TSum):
        for b in e.branches:
            _validate(b, rec_scope, data_scope, unguarded)
    elif isinstance(e, TRec):
        _validate(e.body, rec_scope | {e.var}, data_scope, unguarded | {e.var})
    elif isinstance(e, TPrefix):
        if isinstance(e.target, ActionPattern):
            if e.target.binders:
                raise TransducerError("transform targets may not bind variables")
        inner_scope = data_scope | e.pattern.binders
        bad = cond_vars(e.condition) - inner_scope
        if isinstance(e.target, ActionPattern):
            bad |= e.target.free_vars - inner_scope
        bad |= e.pattern.free_vars - data_scope
        if bad:
            raise TransducerError(f"unbound data variables {sorted(bad)}")
        _validate(e.cont, rec_scope, inner_scope, frozenset())


# ---------------------------------------------------------------------------
# Dynamics


def _instantiate_target(target, sub):
    if target is TAU:
        return TAU
    concrete = subst_pattern(target, sub)
    parts = []
    for slot in (concrete.port, concrete.payload):
        if not isinstance(slot, Lit):
            raise TransducerError(f"transform target {target} is not fully instantiated")
        parts.append(slot.value)
    from .symbolic import Action

    return Action(parts[0], concrete.is_input, parts[1])


def tstep(e: Transducer, domain):
    """All transform transitions ((gamma, output), continuation), enumerated
    over the domain's actions plus the insertion marker, in source order."""
    out = []
    seen = set()

    def emit(gamma, produced, cont):
        key = (label_key(gamma), label_key(produced), cont)
        if key not in seen:
            seen.add(key)
            out.append(((gamma, produced), cont))

    gammas = tuple(domain.actions) + (INSERT,)

    def walk(term):
        if isinstance(term, TId):
            for a in domain.actions:
                emit(a, a, term)
        elif isinstance(term, TPrefix):
            for gamma in gammas:
                sub = match(term.pattern, gamma)
                if sub is None or not eval_condition(term.condition, sub):
                    continue
                emit(gamma, _instantiate_target(term.target, sub), subst_data(term.cont, sub))
        elif isinstance(term, TSum):
            for b in term.branches:
                walk(b)
        elif isinstance(term, TRec):
            walk(subst_rec(term.body, term.var, term))
        elif isinstance(term, TVar):
            raise TransducerError(f"cannot step open term with free {term.name!r}")

    walk(e)
    return out


def transducer_lts(e: Transducer, domain, bound: int = 10_000) -> LTS:
    """The LTS of a transducer, labelled by (consumed, produced) pairs."""
    validate_transducer(e)
    return explore(e, lambda t: tstep(t, domain), bound)


# ---------------------------------------------------------------------------
# Alpha equivalence (recursion variables and pattern binders both rename)


def alpha_eq(e1: Transducer, e2: Transducer) -> bool:
    return _alpha(e1, e2, {}, {})


def _slot_alpha(s1, s2, dmap) -> bool:
    if isinstance(s1, Lit) and isinstance(s2, Lit):
        return s1.value == s2.value
    if isinstance(s1, Free) and isinstance(s2, Free):
        return dmap.get(s1.name, s1.name) == s2.name
    return False


def _term_alpha(t1, t2, dmap) -> bool:
    from .symbolic import Val

    if isinstance(t1, Val) and isinstance(t2, Val):
        return t1.name == t2.name
    if isinstance(t1, Var) and isinstance(t2, Var):
        return dmap.get(t1.name, t1.name) == t2.name
    return False


def _cond_alpha(c1, c2, dmap) -> bool:
    from .symbolic import And, CFalse, Cmp, CTrue, Not, Or

    if type(c1) is not type(c2):
        return False
    if isinstance(c1, (CTrue, CFalse)):
        return True
    if isinstance(c1, Cmp):
        return (
            c1.equal == c2.equal
            and _term_alpha(c1.left, c2.left, dmap)
            and _term_alpha(c1.right, c2.right, dmap)
        )
    if isinstance(c1, Not):
        return _cond_alpha(c1.item, c2.item, dmap)
    if isinstance(c1, (And, Or)):
        return len(c1.items) == len(c2.items) and all(
            _cond_alpha(a, b, dmap) for a, b in zip(c1.items, c2.items)
        )
    return False


def _pattern_alpha(p1, p2, dmap):
    """Returns the extended data map when p2 is p1 up to binder renaming."""
    if isinstance(p1, InsertPattern) and isinstance(p2, InsertPattern):
        return dmap
    if not (isinstance(p1, ActionPattern) and isinstance(p2, ActionPattern)):
        return None
    if p1.is_input != p2.is_input:
        return None
    new = dict(dmap)
    for s1, s2 in ((p1.port, p2.port), (p1.payload, p2.payload)):
        if isinstance(s1, Binder) and isinstance(s2, Binder):
            new[s1.name] = s2.name
        elif not _slot_alpha(s1, s2, new):
            return None
    return new


def _alpha(e1, e2, rmap, dmap) -> bool:
    if type(e1) is not type(e2):
        return False
    if isinstance(e1, TId):
        return True
    if isinstance(e1, TVar):
        return rmap.get(e1.name, e1.name) == e2.name
    if isinstance(e1, TSum):
        return len(e1.branches) == len(e2.branches) and all(
            _alpha(a, b, rmap, dmap) for a, b in zip(e1.branches, e2.branches)
        )
    if isinstance(e1, TRec):
        return _alpha(e1.body, e2.body, {**rmap, e1.var: e2.var}, dmap)
    if isinstance(e1, TPrefix):
        inner = _pattern_alpha(e1.pattern, e2.pattern, dmap)
        if inner is None:
            return False
        if not _cond_alpha(e1.condition, e2.condition, inner):
            return False
        if (e1.target is TAU) != (e2.target is TAU):
            return False
        if e1.target is not TAU and _pattern_alpha(e1.target, e2.target, inner) is None:
            return False
        return _alpha(e1.cont, e2.cont, rmap, inner)
    return False
