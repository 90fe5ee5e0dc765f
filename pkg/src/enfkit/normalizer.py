"""Conversion of safety formulas into their enforceable normal form.

The pipeline turns a closed, guarded safety formula with normalised patterns
into an equivalent formula whose conjunctions guard pairwise-disjoint
symbolic actions and whose fixpoint binders are all used:

  1. unfold every fixpoint once, pushing recursive definitions inward;
  2. read the result off as a system of equations X = tt | ff | AND [sa]X';
  3. align binder names of same-shaped patterns within each equation body;
  4. split overlapping guards on one pattern into satisfiable sign-complete
     condition products (minterms), so guards partition the action space;
  5. determinise the system by a powerset construction that merges branches
     carrying syntactically equal symbolic actions;
  6. rebuild a formula from the determinised system, introducing fixpoint
     binders exactly at back-edges.

Equation bodies keep continuation formulas open in the data variables bound
by ancestor patterns; renaming a pattern's binders therefore renames the
continuation formula and re-interns it as a (possibly new) equation variable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .formulas import (
    Box,
    Dia,
    FAnd,
    FF,
    FFalse,
    FOr,
    FTrue,
    FVar,
    Formula,
    Max,
    Min,
    TT,
    all_names,
    classify,
    conj,
    free_data_vars,
    free_logic_vars,
    is_guarded,
    is_shml,
    subst_data,
    subst_logic,
    unfold,
)
from .symbolic import (
    And,
    Binder,
    Domain,
    Lit,
    Not,
    SymbolicAction,
    Var,
    cond_vars,
    conjoin,
    fresh_name,
    normalize_pattern,
    satisfiable,
    subst_condition,
)


class NormalizeError(Exception):
    pass


class MintermBlowup(NormalizeError):
    """A single equation body mixes too many distinct guard conditions."""


MAX_MINTERM_CONDITIONS = 12
MAX_EQUATIONS = 10_000
MAX_UNFOLD_CHAIN = 10_000


@dataclass(frozen=True)
class Branch:
    action: SymbolicAction
    target: object  # int for base systems, frozenset[int] after determinising

    def __str__(self):
        return f"[{self.action}]{var_name(self.target)}"


def var_name(key) -> str:
    if isinstance(key, frozenset):
        return "X{" + ",".join(str(v) for v in sorted(key)) + "}"
    return f"X{key}"


@dataclass
class EquationSystem:
    """A snapshot of the equation form of a formula at some pipeline stage."""

    start: object
    order: tuple
    bodies: dict
    domain: Domain | None = None
    builder: object = field(default=None, repr=False)

    def body(self, key):
        return self.bodies[key]

    def pretty(self) -> str:
        lines = []
        for key in self.order:
            body = self.bodies[key]
            if body in ("tt", "ff"):
                rhs = body
            else:
                rhs = " && ".join(str(b) for b in body)
            lines.append(f"{var_name(key)} = {rhs}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Pattern pre-pass


def normalize_formula_patterns(f: Formula, d: Domain) -> Formula:
    """Rewrite every modality guard to use only binder slots."""
    used = set(all_names(f)) | set(d.values)

    def go(g):
        if isinstance(g, (FAnd, FOr)):
            return type(g)(tuple(go(i) for i in g.items))
        if isinstance(g, (Max, Min)):
            return type(g)(g.var, go(g.body))
        if isinstance(g, (Box, Dia)):
            sa = normalize_pattern(g.action, avoid=frozenset(used))
            used.update(sa.binders)
            return type(g)(sa, go(g.body))
        return g

    return go(f)


# ---------------------------------------------------------------------------
# Stage 1: single top-down unfolding of every fixpoint


def stage1_unfold(f: Formula) -> Formula:
    """Replace each max X.phi with phi[max X.phi / X], processing bodies first
    so that every fixpoint construct is expanded exactly once; the copies
    substituted at variable positions are left folded."""
    if not is_guarded(f):
        raise NormalizeError("formula is not guarded")
    return _unfold1(f)


def _unfold1(f):
    if isinstance(f, Max):
        return subst_logic(_unfold1(f.body), f.var, f)
    if isinstance(f, FAnd):
        return FAnd(tuple(_unfold1(i) for i in f.items))
    if isinstance(f, Box):
        return Box(f.action, _unfold1(f.body))
    if isinstance(f, (FOr, Dia, Min)):
        raise NormalizeError("only the safety fragment can be normalised")
    return f


# ---------------------------------------------------------------------------
# Stage 2: equations


class _KeyMaker:
    """Alpha-normal formula shapes, hash-consed into integer handles.

    Bound names (pattern binders and fixpoint variables) are replaced by
    binder-relative indices while free names stay put, so alpha-variants of
    one formula share a handle.  Unfolded formulas are DAGs — substitution
    shares subterms — and the handle of a shared subterm depends only on the
    relative binding depths of its free variables, which makes the
    computation memoisable per (subterm, depth profile).
    """

    def __init__(self):
        self._table: dict = {}
        self._memo: dict = {}

    def _cons(self, *parts) -> int:
        handle = self._table.get(parts)
        if handle is None:
            handle = len(self._table)
            self._table[parts] = handle
        return handle

    def _term_key(self, t, dlevel, denv):
        if isinstance(t, Var):
            return ("v", dlevel - denv[t.name]) if t.name in denv else ("v.", t.name)
        return ("c", t.name)

    def _cond_key(self, c, dlevel, denv):
        from .symbolic import CFalse, Cmp, CTrue, Or

        if isinstance(c, CTrue):
            return ("tt",)
        if isinstance(c, CFalse):
            return ("ff",)
        if isinstance(c, Cmp):
            return ("cmp", c.equal, self._term_key(c.left, dlevel, denv), self._term_key(c.right, dlevel, denv))
        if isinstance(c, Not):
            return ("not", self._cond_key(c.item, dlevel, denv))
        tag = "and" if isinstance(c, And) else "or"
        return (tag, tuple(self._cond_key(i, dlevel, denv) for i in c.items))

    def handle(self, g: Formula, dlevel=0, llevel=0, denv=None, lenv=None) -> int:
        denv = denv or {}
        lenv = lenv or {}
        dproj = tuple(
            sorted(
                (v, dlevel - denv[v]) if v in denv else (v, None)
                for v in free_data_vars(g)
            )
        )
        lproj = tuple(
            sorted(
                (v, llevel - lenv[v]) if v in lenv else (v, None)
                for v in free_logic_vars(g)
            )
        )
        mkey = (id(g), dproj, lproj)
        cached = self._memo.get(mkey)
        if cached is not None and cached[0] is g:
            return cached[1]
        if isinstance(g, FTrue):
            out = self._cons("tt")
        elif isinstance(g, FFalse):
            out = self._cons("ff")
        elif isinstance(g, FVar):
            out = (
                self._cons("var", llevel - lenv[g.name])
                if g.name in lenv
                else self._cons("var.", g.name)
            )
        elif isinstance(g, (FAnd, FOr)):
            tag = "conj" if isinstance(g, FAnd) else "disj"
            out = self._cons(
                tag, tuple(self.handle(i, dlevel, llevel, denv, lenv) for i in g.items)
            )
        elif isinstance(g, (Max, Min)):
            tag = "max" if isinstance(g, Max) else "min"
            body = self.handle(g.body, dlevel, llevel + 1, denv, {**lenv, g.var: llevel})
            out = self._cons(tag, body)
        elif isinstance(g, (Box, Dia)):
            tag = "box" if isinstance(g, Box) else "dia"
            pat = g.action.pattern
            inner = dict(denv)
            level = dlevel
            slots = []
            for slot in (pat.port, pat.payload):
                if isinstance(slot, Binder):
                    inner[slot.name] = level
                    level += 1
                    slots.append(("b",))
                elif isinstance(slot, Lit):
                    slots.append(("l", slot.value))
                else:
                    slots.append(self._term_key(Var(slot.name), dlevel, denv))
            cond = self._cond_key(g.action.condition, level, inner)
            body = self.handle(g.body, level, llevel, inner, lenv)
            out = self._cons(tag, pat.is_input, tuple(slots), cond, body)
        else:
            raise NormalizeError(f"cannot canonicalise {g!r}")
        self._memo[mkey] = (g, out)
        return out


class _Builder:
    """Interns formulas as equation variables and derives their bodies.

    Interning chases top-level fixpoints first and keys variables by alpha-
    normal shape, so a fixpoint, its unfolding, and bound-name variants all
    share a variable; bodies flatten conjunctions, drop tt members and let
    ff absorb.
    """

    def __init__(self):
        self.ids: dict = {}
        self.formulas: list = []
        self._raw: dict = {}
        self._keys = _KeyMaker()

    def intern(self, f: Formula) -> int:
        f = self.chase(f)
        key = self._keys.handle(f)
        if key in self.ids:
            return self.ids[key]
        if len(self.formulas) >= MAX_EQUATIONS:
            raise NormalizeError("equation system grew past the safety bound")
        var = len(self.formulas)
        self.ids[key] = var
        self.formulas.append(f)
        return var

    @staticmethod
    def chase(f: Formula) -> Formula:
        for _ in range(MAX_UNFOLD_CHAIN):
            if not isinstance(f, Max):
                return f
            f = unfold(f)
        raise NormalizeError("fixpoint unfolding does not terminate")

    def raw_body(self, key: int):
        if key in self._raw:
            return self._raw[key]
        f = self.formulas[key]
        branches: list = []
        absorbed = False

        def member(g):
            nonlocal absorbed
            g = self.chase(g)
            if isinstance(g, FTrue):
                return
            if isinstance(g, FFalse):
                absorbed = True
                return
            if isinstance(g, FAnd):
                for i in g.items:
                    member(i)
                return
            if isinstance(g, Box):
                branches.append(Branch(g.action, self.intern(g.body)))
                return
            raise NormalizeError(f"not a safety formula body: {g}")

        member(f)
        body = "ff" if absorbed else ("tt" if not branches else tuple(branches))
        self._raw[key] = body
        return body


def _snapshot(builder: _Builder, start: int, body_fn, domain=None) -> EquationSystem:
    order = []
    bodies = {}
    queue = [start]
    seen = {start}
    while queue:
        key = queue.pop(0)
        order.append(key)
        body = body_fn(key)
        bodies[key] = body
        if body not in ("tt", "ff"):
            for br in body:
                if br.target not in seen:
                    seen.add(br.target)
                    queue.append(br.target)
    return EquationSystem(start, tuple(order), bodies, domain, builder)


def stage2_equations(f: Formula) -> EquationSystem:
    builder = _Builder()
    start = builder.intern(f)
    return _snapshot(builder, start, builder.raw_body)


# ---------------------------------------------------------------------------
# Stage 3: binder alignment


def _pattern_kind(pat):
    def tag(slot):
        if isinstance(slot, Binder):
            return ("b",)
        return ("l", slot.value) if hasattr(slot, "value") else ("f", slot.name)

    return (pat.is_input, tag(pat.port), tag(pat.payload))


def _branch_free_names(builder, br: Branch) -> set:
    cont = builder.formulas[br.target]
    return set(
        (cond_vars(br.action.condition) | br.action.pattern.free_vars | free_data_vars(cont))
        - br.action.binders
    )


def _rename_branch(builder, br: Branch, mapping: dict) -> Branch:
    """Rename a branch's binders; the continuation formula is renamed and
    re-interned so the connection between binder and use survives."""
    if not mapping:
        return br
    sub = {old: Var(new) for old, new in mapping.items()}
    pat = br.action.pattern

    def fix(slot):
        if isinstance(slot, Binder) and slot.name in mapping:
            return Binder(mapping[slot.name])
        return slot

    new_pat = type(pat)(fix(pat.port), pat.is_input, fix(pat.payload))
    new_cond = subst_condition(br.action.condition, sub)
    new_cont = subst_data(builder.formulas[br.target], sub)
    return Branch(SymbolicAction(new_pat, new_cond), builder.intern(new_cont))


def _binder_names(pat):
    return [s.name for s in (pat.port, pat.payload) if isinstance(s, Binder)]


def _align_branches(builder, branches, domain: Domain | None):
    """Give same-shaped patterns within one body identical binder names."""
    groups: dict = {}
    for idx, br in enumerate(branches):
        groups.setdefault(_pattern_kind(br.action.pattern), []).append(idx)
    out = list(branches)
    avoid = set(domain.values) if domain else set()
    for idxs in groups.values():
        members = [branches[i] for i in idxs]
        if len(members) == 1 or not members[0].action.binders:
            continue
        canonical = _binder_names(members[0].action.pattern)
        # keep the first branch's names unless they occur free in a sibling
        # (renaming would capture them); then use fresh names for the group
        if any(set(canonical) & _branch_free_names(builder, m) for m in members):
            used = set(avoid)
            for m in members:
                used |= _branch_free_names(builder, m) | m.action.binders
            canonical = []
            for _ in _binder_names(members[0].action.pattern):
                name = fresh_name(used)
                used.add(name)
                canonical.append(name)
        for i, m in zip(idxs, members):
            own = _binder_names(m.action.pattern)
            mapping = {o: n for o, n in zip(own, canonical) if o != n}
            out[i] = _rename_branch(builder, m, mapping)
    return tuple(out)


def stage3_align(eqs: EquationSystem) -> EquationSystem:
    builder = eqs.builder
    cache: dict = {}

    def aligned(key):
        if key not in cache:
            body = builder.raw_body(key)
            cache[key] = (
                body if body in ("tt", "ff") else _align_branches(builder, body, eqs.domain)
            )
        return cache[key]

    return _snapshot(builder, eqs.start, aligned, eqs.domain)


# ---------------------------------------------------------------------------
# Stage 4: satisfiable condition products


def _minterm_condition(base, signs, d: Domain):
    """The sign-complete product, with negated conjuncts dropped when the
    positive part already entails them; keeps re-normalisation idempotent
    instead of piling up redundant negations."""
    positives = [c for c, s in zip(base, signs) if s]
    parts = []
    for c, s in zip(base, signs):
        if s:
            parts.append(c)
            continue
        overlap = And(tuple(positives + [c])) if positives else c
        if satisfiable(overlap, cond_vars(overlap), d):
            parts.append(Not(c))
    return conjoin(parts)


def _mintermize_branches(branches, d: Domain):
    """Split same-pattern branches over all satisfiable sign-complete products
    of their distinct conditions; each product keeps the targets of the
    conditions it makes true."""
    by_pattern: dict = {}
    order = []
    for br in branches:
        key = br.action.pattern
        if key not in by_pattern:
            by_pattern[key] = []
            order.append(key)
        by_pattern[key].append(br)
    out = []
    for pat in order:
        members = by_pattern[pat]
        base = []
        for m in members:
            if m.action.condition not in base:
                base.append(m.action.condition)
        if len(base) > MAX_MINTERM_CONDITIONS:
            raise MintermBlowup(
                f"{len(base)} distinct conditions guard pattern {pat}; "
                f"the bound is {MAX_MINTERM_CONDITIONS}"
            )
        for signs in product((True, False), repeat=len(base)):
            if not any(signs):
                continue
            cond = _minterm_condition(base, signs, d)
            if not satisfiable(cond, cond_vars(cond), d):
                continue
            seen_targets = set()
            for m in members:
                if not signs[base.index(m.action.condition)]:
                    continue
                if m.target in seen_targets:
                    continue
                seen_targets.add(m.target)
                out.append(Branch(SymbolicAction(pat, cond), m.target))
    return tuple(out)


def stage4_minterms(eqs: EquationSystem, d: Domain) -> EquationSystem:
    builder = eqs.builder
    aligned_cache: dict = {}

    def aligned(key):
        if key not in aligned_cache:
            body = builder.raw_body(key)
            aligned_cache[key] = (
                body if body in ("tt", "ff") else _align_branches(builder, body, d)
            )
        return aligned_cache[key]

    minterm_cache: dict = {}

    def minterms(key):
        if key not in minterm_cache:
            body = aligned(key)
            minterm_cache[key] = (
                body if body in ("tt", "ff") else _mintermize_branches(body, d)
            )
        return minterm_cache[key]

    return _snapshot(builder, eqs.start, minterms, d)


# ---------------------------------------------------------------------------
# Stage 5: powerset determinisation


def stage5_powerset(eqs: EquationSystem, d: Domain | None = None) -> EquationSystem:
    d = d or eqs.domain
    if d is None:
        raise NormalizeError("determinisation needs the action domain")
    builder = eqs.builder
    member_cache: dict = {}

    def member_body(key):
        # recompute the stage-4 view for any variable, including ones interned
        # later while aligning merged bodies
        if key not in member_cache:
            body = builder.raw_body(key)
            if body not in ("tt", "ff"):
                body = _mintermize_branches(_align_branches(builder, body, d), d)
            member_cache[key] = body
        return member_cache[key]

    def set_body(keys: frozenset):
        parts = [member_body(k) for k in sorted(keys)]
        if any(p == "ff" for p in parts):
            return "ff"
        merged = tuple(br for p in parts if p != "tt" for br in p)
        if not merged:
            return "tt"
        merged = _mintermize_branches(_align_branches(builder, merged, d), d)
        grouped: dict = {}
        order = []
        for br in merged:
            if br.action not in grouped:
                grouped[br.action] = set()
                order.append(br.action)
            grouped[br.action].add(br.target)
        return tuple(Branch(sa, frozenset(grouped[sa])) for sa in order)

    start = frozenset((eqs.start,))
    snapshot = _snapshot(builder, start, set_body, d)
    return _merge_duplicate_bodies(snapshot)


def _merge_duplicate_bodies(eqs: EquationSystem) -> EquationSystem:
    """Collapse variables whose bodies are identical (after resolving targets
    through earlier merges).  This is syntactic hash-consing, not semantic
    minimisation: it keeps one copy of structurally repeated equations so
    that re-normalising a rebuilt formula reproduces the same system."""
    rep = {k: k for k in eqs.order}

    def resolve(k):
        while rep[k] != k:
            k = rep[k]
        return k

    changed = True
    while changed:
        changed = False
        seen: dict = {}
        for k in eqs.order:
            if resolve(k) != k:
                continue
            body = eqs.bodies[k]
            if body in ("tt", "ff"):
                sig = body
            else:
                sig = tuple((b.action, resolve(b.target)) for b in body)
            if sig in seen:
                rep[k] = seen[sig]
                changed = True
            else:
                seen[sig] = k
    order = []
    bodies = {}
    for k in eqs.order:
        if resolve(k) != k:
            continue
        body = eqs.bodies[k]
        if body not in ("tt", "ff"):
            body = tuple(Branch(b.action, resolve(b.target)) for b in body)
        order.append(k)
        bodies[k] = body
    return EquationSystem(resolve(eqs.start), tuple(order), bodies, eqs.domain, eqs.builder)


# ---------------------------------------------------------------------------
# Stage 6: rebuild a formula


def stage6_rebuild(eqs: EquationSystem) -> Formula:
    """Expand the equation graph into a formula.  Every variable reached
    twice on one path becomes a fixpoint reference, and a binder is wrapped
    around exactly the copies whose subtree mentions it, so no binder is
    vacuous.  Acyclic sharing is expanded per occurrence."""
    names: dict = {}
    counter = [0]

    def name_of(key):
        if key not in names:
            names[key] = f"X{counter[0]}"
            counter[0] += 1
        return names[key]

    def visit(key, path: frozenset):
        """Returns the rebuilt formula and the path variables it refers to."""
        if key in path:
            return FVar(name_of(key)), {key}
        body = eqs.body(key)
        if body == "tt":
            return TT, set()
        if body == "ff":
            return FF, set()
        inner = path | {key}
        parts = []
        referenced: set = set()
        for br in body:
            sub, refs = visit(br.target, inner)
            parts.append(Box(br.action, sub))
            referenced |= refs
        formula = conj(tuple(parts))
        if key in referenced:
            referenced.discard(key)
            formula = Max(names[key], formula)
        return formula, referenced

    formula, dangling = visit(eqs.start, frozenset())
    if dangling:
        raise NormalizeError(f"rebuild left unbound references {sorted(map(var_name, dangling))}")
    return formula


# ---------------------------------------------------------------------------
# The full pipeline


def _renumber_binders(f: Formula) -> Formula:
    """Rename fixpoint binders positionally (X0, X1, ... in traversal order)
    so that alpha-equivalent rebuilds print identically."""
    counter = [0]

    def go(g, mapping):
        if isinstance(g, FVar):
            return FVar(mapping[g.name])
        if isinstance(g, (FAnd, FOr)):
            return type(g)(tuple(go(i, mapping) for i in g.items))
        if isinstance(g, (Box, Dia)):
            return type(g)(g.action, go(g.body, mapping))
        if isinstance(g, (Max, Min)):
            fresh = f"X{counter[0]}"
            counter[0] += 1
            return type(g)(fresh, go(g.body, {**mapping, g.var: fresh}))
        return g

    return go(f, {})


def normalize(f: Formula, d: Domain) -> Formula:
    """Normal-form conversion; the result is semantically equivalent on every
    finite LTS and satisfies both normal-form structural conditions.

    Fixpoint unfolding happens lazily inside the equation builder (each
    interned formula has its top-level fixpoints chased), which yields the
    same system as materialising the one-step unfolding up front but avoids
    the exponential intermediate term on deeply nested inputs.
    """
    flags = classify(f, d)
    if not flags.closed:
        raise NormalizeError("formula must be closed")
    if not flags.guarded:
        raise NormalizeError("formula is not guarded")
    if not is_shml(f):
        raise NormalizeError("only the safety fragment can be normalised")
    prepared = normalize_formula_patterns(f, d)
    eqs = stage2_equations(prepared)
    eqs = stage3_align(EquationSystem(eqs.start, eqs.order, eqs.bodies, d, eqs.builder))
    eqs = stage4_minterms(eqs, d)
    power = stage5_powerset(eqs, d)
    return _renumber_binders(stage6_rebuild(power))


def _formula_nodes(f: Formula) -> int:
    if isinstance(f, (FAnd, FOr)):
        return 1 + sum(_formula_nodes(i) for i in f.items)
    if isinstance(f, (Box, Dia, Max, Min)):
        return 1 + _formula_nodes(f.body)
    return 1


def _unfold_estimate(f: Formula) -> int:
    """Upper bound on the node count of the one-step unfolding (each binder
    multiplies its body by the number of variable occurrences plus one)."""
    if isinstance(f, (FAnd, FOr)):
        return 1 + sum(_unfold_estimate(i) for i in f.items)
    if isinstance(f, (Box, Dia)):
        return 1 + _unfold_estimate(f.body)
    if isinstance(f, (Max, Min)):
        occurrences = str(f.body).count(f.var)  # coarse but only used as a cap
        return (occurrences + 1) * (1 + _unfold_estimate(f.body))
    return 1


def dump_stages(f: Formula, d: Domain) -> str:
    """The intermediate equation systems, for the `--dump-stages` flag."""
    prepared = normalize_formula_patterns(f, d)
    if _unfold_estimate(prepared) <= 50_000:
        out = [f"stage 1 (unfolded formula):\n{stage1_unfold(prepared)}"]
    else:
        out = ["stage 1 (unfolded formula): elided, expansion would be very large"]
    eqs = stage2_equations(prepared)
    out.append(f"stage 2 (equations):\n{eqs.pretty()}")
    eqs = stage3_align(EquationSystem(eqs.start, eqs.order, eqs.bodies, d, eqs.builder))
    out.append(f"stage 3 (aligned binders):\n{eqs.pretty()}")
    eqs = stage4_minterms(eqs, d)
    out.append(f"stage 4 (condition products):\n{eqs.pretty()}")
    power = stage5_powerset(eqs, d)
    out.append(f"stage 5 (determinised):\n{power.pretty()}")
    out.append(f"stage 6 (rebuilt formula):\n{stage6_rebuild(power)}")
    return "\n\n".join(out)
