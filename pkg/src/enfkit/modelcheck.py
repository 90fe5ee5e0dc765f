"""Model checking over finite LTSs: denotational semantics and a coinductive
satisfaction oracle for the safety fragment.

`mc_eval` computes exact formula denotations by structural recursion, with
fixpoints iterated to stabilisation (greatest from the full state set, least
from the empty one) and modalities ranging over weak derivatives.

`sat_oracle` is an independent second route for safety formulas: the largest
relation between states and formulas closed under the satisfaction rules,
computed as a greatest fixpoint over the reachable (state, formula) pairs.
The two routes must agree on the safety fragment.
"""
from __future__ import annotations

from collections import deque

from .formulas import (
    Box,
    Dia,
    FAnd,
    FFalse,
    FOr,
    FTrue,
    FVar,
    Formula,
    Max,
    Min,
    free_logic_vars,
    is_shml,
    subst_data,
    unfold,
)
from .processes import LTS, reachable, weak_step
from .symbolic import Domain, sym_match


class ModelCheckError(Exception):
    pass


class ClosureBoundExceeded(ModelCheckError):
    pass


DEFAULT_STATE_BOUND = 10_000
DEFAULT_CLOSURE_BOUND = 200_000


def _as_lts(system, bound) -> tuple:
    if isinstance(system, LTS):
        return system, system.initial
    if isinstance(system, tuple) and len(system) == 2 and isinstance(system[0], LTS):
        return system[0], system[1]
    return reachable(system, bound), system


def mc_eval(f: Formula, lts: LTS, valuation, domain: Domain) -> frozenset:
    """The set of states satisfying `f` under a valuation of its free
    logical variables.  Data variables must already be instantiated."""
    all_states = frozenset(lts.states)
    weak_cache: dict = {}

    def weak(s, a):
        key = (s, a)
        if key not in weak_cache:
            weak_cache[key] = weak_step(lts, s, a)
        return weak_cache[key]

    def ev(g, rho) -> frozenset:
        if isinstance(g, FTrue):
            return all_states
        if isinstance(g, FFalse):
            return frozenset()
        if isinstance(g, FVar):
            if g.name not in rho:
                raise ModelCheckError(f"free logical variable {g.name!r} not valued")
            return rho[g.name]
        if isinstance(g, FAnd):
            out = all_states
            for i in g.items:
                out &= ev(i, rho)
            return out
        if isinstance(g, FOr):
            out = frozenset()
            for i in g.items:
                out |= ev(i, rho)
            return out
        if isinstance(g, Box):
            result = set(all_states)
            for a in domain.actions:
                sub = sym_match(g.action, a)
                if sub is None:
                    continue
                body_set = ev(subst_data(g.body, sub), rho)
                result = {s for s in result if weak(s, a) <= body_set}
            return frozenset(result)
        if isinstance(g, Dia):
            result = set()
            for a in domain.actions:
                sub = sym_match(g.action, a)
                if sub is None:
                    continue
                body_set = ev(subst_data(g.body, sub), rho)
                result |= {s for s in all_states if weak(s, a) & body_set}
            return frozenset(result)
        if isinstance(g, (Max, Min)):
            greatest = isinstance(g, Max)
            current = all_states if greatest else frozenset()
            for _ in range(len(all_states) + 1):
                nxt = ev(g.body, {**rho, g.var: current})
                if nxt == current:
                    return current
                # monotone iteration: shrinks from the top, grows from the bottom
                assert (nxt < current) if greatest else (nxt > current)
                current = nxt
            raise ModelCheckError("fixpoint iteration failed to stabilise")
        raise ModelCheckError(f"cannot evaluate {g!r}")

    return ev(f, dict(valuation))


def satisfies(system, f: Formula, domain: Domain, bound: int = DEFAULT_STATE_BOUND) -> bool:
    """Membership of a system state in the denotation of a closed formula.

    The system may be a process term, an LTS, or an (LTS, state) pair.
    """
    if free_logic_vars(f):
        raise ModelCheckError("formula must be closed in logical variables")
    lts, state = _as_lts(system, bound)
    return state in mc_eval(f, lts, {}, domain)


# ---------------------------------------------------------------------------
# Satisfaction-relation oracle for the safety fragment


def sat_oracle(
    system,
    f: Formula,
    domain: Domain,
    bound: int = DEFAULT_STATE_BOUND,
    closure_bound: int = DEFAULT_CLOSURE_BOUND,
) -> bool:
    """Coinductive satisfaction for safety formulas.

    Builds the reachable closure of (state, formula) pairs under the rules:
    truth holds; falsehood fails; a conjunction needs every conjunct; a
    necessity needs the instantiated continuation at every matching weak
    derivative; a fixpoint needs its unfolding.  The answer is membership of
    the root pair in the largest rule-consistent subset.
    """
    if not is_shml(f) or free_logic_vars(f):
        raise ModelCheckError("the satisfaction oracle handles closed safety formulas")
    lts, root_state = _as_lts(system, bound)
    weak_cache: dict = {}

    def weak(s, a):
        key = (s, a)
        if key not in weak_cache:
            weak_cache[key] = weak_step(lts, s, a)
        return weak_cache[key]

    root = (root_state, f)
    requirements: dict = {}
    failed = set()
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node in requirements or node in failed:
            continue
        if len(requirements) + len(failed) > closure_bound:
            raise ClosureBoundExceeded("satisfaction closure grew past the bound")
        state, g = node
        if isinstance(g, FFalse):
            failed.add(node)
            continue
        if isinstance(g, FTrue):
            requirements[node] = ()
            continue
        if isinstance(g, FAnd):
            reqs = tuple((state, item) for item in g.items)
        elif isinstance(g, Max):
            reqs = ((state, unfold(g)),)
        elif isinstance(g, Box):
            found = []
            for a in domain.actions:
                sub = sym_match(g.action, a)
                if sub is None:
                    continue
                cont = subst_data(g.body, sub)
                for q in weak(state, a):
                    found.append((q, cont))
            reqs = tuple(found)
        else:
            raise ModelCheckError(f"oracle cannot handle {g!r}")
        requirements[node] = reqs
        queue.extend(reqs)

    alive = set(requirements)
    changed = True
    while changed:
        changed = False
        for node in list(alive):
            if any(req not in alive for req in requirements[node]):
                alive.discard(node)
                changed = True
    return root in alive
