"""Instrumentation of a transducer over a system, and step-wise simulation.

A monitored configuration pairs an enforcer with a system state.  Its
transitions come from four rules:

  iTrn  the system fires a visible action and the enforcer transforms it;
  iAsy  the system moves silently, the enforcer stands still;
  iIns  the enforcer inserts an action on its own;
  iTer  the system fires a visible action the enforcer neither transforms
        nor pre-empts with an insertion, so enforcement degrades to the
        identity from then on.

The system side is any labelled-transition behaviour: a process term or an
explicit LTS state.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .processes import LTS, explore, step as process_step, validate_process
from .symbolic import INSERT, TAU, Domain, label_key
from .transducers import ID, Transducer, tstep, validate_transducer


class SimulationError(Exception):
    pass


@dataclass(frozen=True)
class Config:
    enforcer: Transducer
    system: object

    def __str__(self):
        return f"<{self.enforcer} | {self.system}>"


RULES = ("iTrn", "iAsy", "iIns", "iTer")


def system_view(system):
    """Normalise the system argument to (initial state, step function).

    Accepts a process term, an LTS (its initial state is used), or a pair
    (LTS, state).
    """
    if isinstance(system, LTS):
        return system.initial, system.steps
    if isinstance(system, tuple) and len(system) == 2 and isinstance(system[0], LTS):
        return system[1], system[0].steps
    validate_process(system)
    return system, process_step


def istep(cfg: Config, sys_steps, domain: Domain):
    """All instrumented transitions of a configuration, as
    (rule name, output label, next configuration), grouped by rule in the
    fixed order iTrn < iAsy < iIns < iTer and source order inside a rule."""
    transforms = tstep(cfg.enforcer, domain)
    sys_moves = sys_steps(cfg.system)
    inserts = [((g, u), e2) for (g, u), e2 in transforms if g is INSERT]
    handled = {label_key(g) for (g, _), _ in transforms if g is not INSERT}

    out = []
    # iTrn: visible system action composed with a matching transform
    for label, target in sys_moves:
        if label is TAU:
            continue
        for (gamma, produced), e2 in transforms:
            if gamma is not INSERT and gamma == label:
                out.append(("iTrn", produced, Config(e2, target)))
    # iAsy: silent system moves pass through
    for label, target in sys_moves:
        if label is TAU:
            out.append(("iAsy", TAU, Config(cfg.enforcer, target)))
    # iIns: the enforcer inserts independently of the system
    for (_, produced), e2 in inserts:
        out.append(("iIns", produced, Config(e2, cfg.system)))
    # iTer: unhandled visible action and no insertion available
    if not inserts:
        for label, target in sys_moves:
            if label is TAU or label_key(label) in handled:
                continue
            out.append(("iTer", label, Config(ID, target)))
    return out


def composite_lts(enforcer: Transducer, system, domain: Domain, bound: int = 10_000) -> LTS:
    """Reachable closure of the instrumentation from <enforcer, system>.

    A transducer that can insert forever makes this space infinite; the
    state bound turns that into an explicit error.
    """
    validate_transducer(enforcer)
    initial_sys, sys_steps = system_view(system)

    def stepper(cfg):
        return [(label, nxt) for _, label, nxt in istep(cfg, sys_steps, domain)]

    return explore(Config(enforcer, initial_sys), stepper, bound)


@dataclass(frozen=True)
class SimStep:
    rule: str
    label: object
    config: Config

    def __str__(self):
        return f"{self.rule} {self.label}  {self.config}"


def first_policy(candidates, current: Config, index: int):
    """Deterministic choice: rule order then source order, preferring steps
    that change the configuration over self-loops."""
    for cand in candidates:
        if cand[2] != current:
            return cand
    return candidates[0]


def random_policy(seed: int):
    rng = random.Random(seed)

    def choose(candidates, current, index):
        return rng.choice(candidates)

    return choose


def script_policy(script):
    """Replay a scripted run: each entry is (rule, label) or (rule, label,
    system-state text) to pin the successor when several steps share a label."""

    def choose(candidates, current, index):
        if index >= len(script):
            raise SimulationError(f"script ended before step {index + 1}")
        want = script[index]
        for cand in candidates:
            rule, label, cfg = cand
            if rule != want[0] or label_key(label) != label_key(want[1]):
                continue
            if len(want) > 2 and str(cfg.system) != want[2]:
                continue
            return cand
        raise SimulationError(
            f"script step {index + 1} {want!r} matches no available transition"
        )

    return choose


def make_policy(policy):
    if callable(policy):
        return policy
    if policy == "first":
        return first_policy
    if isinstance(policy, str) and policy.startswith("random:"):
        return random_policy(int(policy.split(":", 1)[1]))
    if isinstance(policy, (list, tuple)):
        return script_policy(policy)
    raise ValueError(f"unknown simulation policy {policy!r}")


def simulate(enforcer: Transducer, system, steps: int, policy, domain: Domain):
    """One resolved run of at most `steps` instrumented transitions.

    Halts early on deadlock.  The policy resolves nondeterminism; `first` is
    deterministic, `random:SEED` seeds an RNG, and a list of (rule, label)
    pairs replays a scripted run.
    """
    validate_transducer(enforcer)
    initial_sys, sys_steps = system_view(system)
    choose = make_policy(policy)
    cfg = Config(enforcer, initial_sys)
    run = []
    for index in range(steps):
        candidates = istep(cfg, sys_steps, domain)
        if not candidates:
            break
        rule, label, nxt = choose(candidates, cfg, index)
        run.append(SimStep(rule, label, nxt))
        cfg = nxt
    return run
