"""Formula terms for the recursive Hennessy-Milner logic with symbolic actions.

The grammar covers truth/falsehood, finite conjunction and disjunction,
necessity and possibility modalities guarded by symbolic actions, and least
and greatest fixpoints.  The safety fragment (no disjunction, no possibility,
no least fixpoints) and its normal form are recognised by `classify`.

A modality's pattern binders scope over both the guard condition and the
continuation formula, so formulas can be open in data variables as well as in
logical variables.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .symbolic import (
    Binder,
    Domain,
    SymbolicAction,
    Substitution,
    Var,
    cond_vars,
    disjoint_under,
    fresh_name,
    subst_condition,
    subst_pattern,
)


class FormulaError(Exception):
    pass


@dataclass(frozen=True)
class FTrue:
    def __str__(self):
        return "tt"


@dataclass(frozen=True)
class FFalse:
    def __str__(self):
        return "ff"


@dataclass(frozen=True)
class FAnd:
    items: tuple

    def __str__(self):
        return " && ".join(_paren(i, 3) for i in self.items)


@dataclass(frozen=True)
class FOr:
    items: tuple

    def __str__(self):
        return " || ".join(_paren(i, 2) for i in self.items)


@dataclass(frozen=True)
class Box:
    action: SymbolicAction
    body: "Formula"

    def __str__(self):
        return f"[{self.action}]{_paren(self.body, 3)}"


@dataclass(frozen=True)
class Dia:
    action: SymbolicAction
    body: "Formula"

    def __str__(self):
        return f"<{self.action}>{_paren(self.body, 3)}"


@dataclass(frozen=True)
class Max:
    var: str
    body: "Formula"

    def __str__(self):
        return f"max {self.var}.{self.body}"


@dataclass(frozen=True)
class Min:
    var: str
    body: "Formula"

    def __str__(self):
        return f"min {self.var}.{self.body}"


@dataclass(frozen=True)
class FVar:
    name: str

    def __str__(self):
        return self.name


Formula = Union[FTrue, FFalse, FAnd, FOr, Box, Dia, Max, Min, FVar]

TT = FTrue()
FF = FFalse()


def _prec(f) -> int:
    if isinstance(f, (Max, Min)):
        return 0
    if isinstance(f, FOr):
        return 1
    if isinstance(f, FAnd):
        return 2
    return 3


def _paren(f, at_least: int) -> str:
    text = str(f)
    return f"({text})" if _prec(f) < at_least else text


def conj(items) -> Formula:
    items = tuple(items)
    if not items:
        return TT
    if len(items) == 1:
        return items[0]
    return FAnd(items)


# ---------------------------------------------------------------------------
# Variables


# Formulas unfold into DAGs (substitution shares subterms), so the recursive
# helpers below memoise by object identity; the memo holds a strong reference
# to each key object, which keeps its id stable.

_FREE_MEMO_LIMIT = 1_000_000
_flv_memo: dict = {}
_fdv_memo: dict = {}


def _memo_get(memo, f):
    entry = memo.get(id(f))
    if entry is not None and entry[0] is f:
        return entry[1]
    return None


def _memo_put(memo, f, value):
    if len(memo) > _FREE_MEMO_LIMIT:
        memo.clear()
    memo[id(f)] = (f, value)
    return value


def free_logic_vars(f: Formula) -> frozenset:
    cached = _memo_get(_flv_memo, f)
    if cached is not None:
        return cached
    if isinstance(f, FVar):
        out = frozenset((f.name,))
    elif isinstance(f, (FAnd, FOr)):
        out = frozenset().union(*(free_logic_vars(i) for i in f.items))
    elif isinstance(f, (Box, Dia)):
        out = free_logic_vars(f.body)
    elif isinstance(f, (Max, Min)):
        out = free_logic_vars(f.body) - {f.var}
    else:
        out = frozenset()
    return _memo_put(_flv_memo, f, out)


def free_data_vars(f: Formula) -> frozenset:
    cached = _memo_get(_fdv_memo, f)
    if cached is not None:
        return cached
    if isinstance(f, (FAnd, FOr)):
        out = frozenset().union(*(free_data_vars(i) for i in f.items))
    elif isinstance(f, (Box, Dia)):
        out = f.action.free_vars | (free_data_vars(f.body) - f.action.binders)
    elif isinstance(f, (Max, Min)):
        out = free_data_vars(f.body)
    else:
        out = frozenset()
    return _memo_put(_fdv_memo, f, out)


def all_names(f: Formula) -> set:
    """Every identifier occurring in the formula (variables, binders, values);
    used to pick fresh names that cannot capture anything."""
    out = set()

    def walk(g):
        if isinstance(g, (FAnd, FOr)):
            for i in g.items:
                walk(i)
        elif isinstance(g, (Box, Dia)):
            pat = g.action.pattern
            for slot in (pat.port, pat.payload):
                out.add(getattr(slot, "name", None) or getattr(slot, "value", None))
            out.update(cond_vars(g.action.condition))
            walk(g.body)
        elif isinstance(g, (Max, Min)):
            out.add(g.var)
            walk(g.body)
        elif isinstance(g, FVar):
            out.add(g.name)

    walk(f)
    out.discard(None)
    return out


# ---------------------------------------------------------------------------
# Substitution


def subst_logic(f: Formula, var: str, rep: Formula) -> Formula:
    """Capture-avoiding substitution of a formula for a logical variable.

    Subtrees without the variable are returned as-is, so repeated fixpoint
    unfolding shares structure instead of copying it.
    """
    rep_free = free_logic_vars(rep)

    def go(g):
        if var not in free_logic_vars(g):
            return g
        if isinstance(g, FVar):
            return rep if g.name == var else g
        if isinstance(g, (FAnd, FOr)):
            return type(g)(tuple(go(i) for i in g.items))
        if isinstance(g, (Box, Dia)):
            return type(g)(g.action, go(g.body))
        if isinstance(g, (Max, Min)):
            if g.var == var:
                return g
            if g.var in rep_free:
                fresh = g.var
                taken = rep_free | free_logic_vars(g.body) | {var}
                while fresh in taken:
                    fresh += "'"
                renamed = subst_logic(g.body, g.var, FVar(fresh))
                return type(g)(fresh, go(renamed))
            return type(g)(g.var, go(g.body))
        return g

    return go(f)


def subst_data(f: Formula, sub: Substitution) -> Formula:
    """Apply a data substitution, respecting pattern-binder scoping.

    Renaming targets (Var) that would be captured by an inner binder cause
    that binder to be freshened first.  Subtrees that mention none of the
    substituted variables are returned unchanged.
    """
    if not sub:
        return f
    if not (set(sub) & free_data_vars(f)):
        return f
    if isinstance(f, (FAnd, FOr)):
        return type(f)(tuple(subst_data(i, sub) for i in f.items))
    if isinstance(f, (Max, Min)):
        return type(f)(f.var, subst_data(f.body, sub))
    if isinstance(f, (Box, Dia)):
        sa, body = _subst_under_pattern(f.action, f.body, sub)
        return type(f)(sa, body)
    return f


def _subst_under_pattern(sa: SymbolicAction, body, sub: Substitution):
    narrowed = {k: v for k, v in sub.items() if k not in sa.binders}
    if not narrowed:
        return sa, body
    # freshen binders that would capture a renaming target
    targets = {v.name for v in narrowed.values() if isinstance(v, Var)}
    captured = sa.binders & targets
    if captured:
        pat, cond, renamed_body = sa.pattern, sa.condition, body
        for name in sorted(captured):
            taken = (
                set(targets)
                | set(narrowed.keys())
                | pat.binders
                | cond_vars(cond)
                | free_data_vars(renamed_body)
            )
            fresh = fresh_name(taken)
            ren = {name: Var(fresh)}
            pat = _rename_binder(pat, name, fresh)
            cond = subst_condition(cond, ren)
            renamed_body = subst_data(renamed_body, ren)
        sa = SymbolicAction(subst_pattern(pat, narrowed), subst_condition(cond, narrowed))
        return sa, subst_data(renamed_body, narrowed)
    return sa.subst(narrowed), subst_data(body, narrowed)


def _rename_binder(pat, old: str, new: str):
    def fix(slot):
        if isinstance(slot, Binder) and slot.name == old:
            return Binder(new)
        return slot

    return type(pat)(fix(pat.port), pat.is_input, fix(pat.payload))


def unfold(f) -> Formula:
    """One unfolding of a fixpoint: the binder's body with the whole fixpoint
    substituted for its variable."""
    if not isinstance(f, (Max, Min)):
        raise FormulaError("can only unfold a fixpoint formula")
    return subst_logic(f.body, f.var, f)


# ---------------------------------------------------------------------------
# Classification


@dataclass(frozen=True)
class Classification:
    closed: bool
    guarded: bool
    shml: bool
    shmlnf: bool


def is_guarded(f: Formula) -> bool:
    """Every occurrence of a logical variable must sit under a modality
    inside its binder."""

    def go(g, unguarded: frozenset) -> bool:
        if isinstance(g, FVar):
            return g.name not in unguarded
        if isinstance(g, (FAnd, FOr)):
            return all(go(i, unguarded) for i in g.items)
        if isinstance(g, (Box, Dia)):
            return go(g.body, frozenset())
        if isinstance(g, (Max, Min)):
            return go(g.body, unguarded | {g.var})
        return True

    return go(f, frozenset())


def is_shml(f: Formula) -> bool:
    if isinstance(f, (FTrue, FFalse, FVar)):
        return True
    if isinstance(f, FAnd):
        return all(is_shml(i) for i in f.items)
    if isinstance(f, Box):
        return is_shml(f.body)
    if isinstance(f, Max):
        return is_shml(f.body)
    return False


def _necessity_branches(f):
    """View a formula as a conjunction of necessity branches, or None."""
    if isinstance(f, Box):
        return (f,)
    if isinstance(f, FAnd) and all(isinstance(i, Box) for i in f.items):
        return f.items
    return None


def is_shmlnf(f: Formula, d: Domain) -> bool:
    """Normal form: conjunctions combine only necessities whose guards are
    pairwise disjoint, and every fixpoint binder is used in its body."""
    if isinstance(f, (FTrue, FFalse, FVar)):
        return True
    if isinstance(f, Max):
        if f.var not in free_logic_vars(f.body):
            return False
        return is_shmlnf(f.body, d)
    branches = _necessity_branches(f)
    if branches is None:
        return False
    for i in range(len(branches)):
        for j in range(i + 1, len(branches)):
            if not disjoint_under(branches[i].action, branches[j].action, d):
                return False
    return all(is_shmlnf(b.body, d) for b in branches)


def classify(f: Formula, d: Domain) -> Classification:
    closed = not free_logic_vars(f) and not free_data_vars(f)
    guarded = is_guarded(f)
    shml = is_shml(f)
    shmlnf = shml and is_shmlnf(f, d)
    return Classification(closed, guarded, shml, shmlnf)
