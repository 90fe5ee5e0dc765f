import pytest

from enfkit.formulas import Box, FAnd, FF, Max, TT, classify
from enfkit.harness import gen_formula, gen_process
from enfkit.modelcheck import mc_eval
from enfkit.normalizer import (
    EquationSystem,
    MintermBlowup,
    NormalizeError,
    dump_stages,
    normalize,
    stage1_unfold,
    stage2_equations,
    stage3_align,
    stage4_minterms,
    stage5_powerset,
    stage6_rebuild,
)
from enfkit.parsing import parse_formula
from enfkit.processes import reachable
from enfkit.symbolic import And, Cmp, Not, Val, Var


@pytest.fixture
def sa_pair(dom):
    # two distinct concrete guards usable as sa1/sa2 in the worked example
    f = parse_formula("max X.([i?req]X && [i!ans]ff)", dom)
    branches = f.body.items
    return branches[0].action, branches[1].action


def test_stage1_worked_example(dom, sa_pair):
    f = parse_formula("max X.([i?req]X && [i!ans]ff)", dom)
    out = stage1_unfold(f)
    sa1, sa2 = sa_pair
    assert out == FAnd((Box(sa1, f), Box(sa2, FF)))


def test_stage1_trivial_and_single_branch(dom):
    assert stage1_unfold(TT) == TT
    f = parse_formula("max X.[i?req]X", dom)
    assert stage1_unfold(f) == Box(f.body.action, f)


def test_stage1_rejects_unguarded(dom):
    with pytest.raises(NormalizeError):
        stage1_unfold(Max("X", parse_formula("tt", dom)) and Max("X", __import__("enfkit").formulas.FVar("X")))


def test_stage2_worked_example(dom):
    f = stage1_unfold(parse_formula("max X.([i?req]X && [i!ans]ff)", dom))
    eqs = stage2_equations(f)
    assert eqs.pretty() == "X0 = [i?req]X0 && [i!ans]X1\nX1 = ff"


def test_stage2_trivials(dom):
    assert stage2_equations(TT).pretty() == "X0 = tt"
    eqs = stage2_equations(parse_formula("[i?req]tt", dom))
    assert eqs.pretty() == "X0 = [i?req]X1\nX1 = tt"


def test_stage3_alignment_renames_to_first_branch(dom):
    f = parse_formula("[(x1)?(x2) when x1 = i]ff && [(x3)?(x4) when x4 = req]tt", dom)
    eqs = stage3_align(_with_domain(stage2_equations(f), dom))
    body = eqs.body(eqs.start)
    pats = [b.action.pattern for b in body]
    assert pats[0] == pats[1]
    assert pats[0].binders == {"x1", "x2"}
    # the renamed condition follows the new binder names
    assert body[1].action.condition == Cmp(Var("x2"), Val("req"), True)


def test_stage3_leaves_single_branches_alone(dom):
    f = parse_formula("[(x)?(y) when x = i]ff", dom)
    eqs = stage3_align(_with_domain(stage2_equations(f), dom))
    body = eqs.body(eqs.start)
    assert body[0].action.pattern.binders == {"x", "y"}


def test_stage3_aligns_only_same_direction(dom):
    f = parse_formula("[(x1)?(x2)]ff && [(x3)!(x4)]ff", dom)
    eqs = stage3_align(_with_domain(stage2_equations(f), dom))
    body = eqs.body(eqs.start)
    assert body[0].action.pattern.is_input != body[1].action.pattern.is_input
    assert body[1].action.pattern.binders == {"x3", "x4"}


def _with_domain(eqs, dom):
    return EquationSystem(eqs.start, eqs.order, eqs.bodies, dom, eqs.builder)


def test_stage4_worked_example(dom):
    # two branches on one pattern with overlapping conditions c1, c3
    f = parse_formula("[(x)?(y) when x != j]tt && [(x)?(y) when y = req]ff", dom)
    eqs = stage4_minterms(stage3_align(_with_domain(stage2_equations(f), dom)), dom)
    body = eqs.body(eqs.start)
    c1 = Cmp(Var("x"), Val("j"), False)
    c3 = Cmp(Var("y"), Val("req"), True)
    got = [(b.action.condition, b.target) for b in body]
    t_tt, t_ff = got[0][1], got[1][1]
    assert got == [
        (And((c1, c3)), t_tt),
        (And((c1, c3)), t_ff),
        (And((c1, Not(c3))), t_tt),
        (And((Not(c1), c3)), t_ff),
    ]


def test_stage4_single_condition_unchanged(dom):
    f = parse_formula("[(x)?(y) when x != j]ff", dom)
    eqs = stage4_minterms(stage3_align(_with_domain(stage2_equations(f), dom)), dom)
    body = eqs.body(eqs.start)
    assert [b.action.condition for b in body] == [Cmp(Var("x"), Val("j"), False)]
    trivial = parse_formula("[(x)?(y)]ff", dom)
    eqs = stage4_minterms(stage3_align(_with_domain(stage2_equations(trivial), dom)), dom)
    assert eqs.body(eqs.start) == stage3_align(
        _with_domain(stage2_equations(trivial), dom)
    ).body(eqs.start)


def test_stage4_unsatisfiable_minterm_dropped(dom):
    f = parse_formula("[(x)?(y) when x != j]tt && [(x)?(y) when x = j]ff", dom)
    eqs = stage4_minterms(stage3_align(_with_domain(stage2_equations(f), dom)), dom)
    conds = [b.action.condition for b in eqs.body(eqs.start)]
    # the joint cell x != j && x = j is unsatisfiable and disappears
    assert conds == [Cmp(Var("x"), Val("j"), False), Cmp(Var("x"), Val("j"), True)]


def test_stage4_blowup_guard(dom):
    parts = [f"[(x)?(y) when x = {v}]tt" for v in ("i", "j")]
    # 13 distinct conditions on one pattern exceed the bound
    names = ["i", "j"] * 7
    branches = " && ".join(
        f"[(x)?(y) when {' && '.join(f'x != {n}' for n in names[: k + 1])}]tt" for k in range(13)
    )
    f = parse_formula(branches, dom)
    with pytest.raises(MintermBlowup):
        stage4_minterms(stage3_align(_with_domain(stage2_equations(f), dom)), dom)


def test_stage5_worked_example(dom):
    f = parse_formula("max X.([(x)?(y) when x != j]X && [(x)?(y) when y = req]ff)", dom)
    prepared = stage1_unfold(f)
    eqs = stage4_minterms(stage3_align(_with_domain(stage2_equations(prepared), dom)), dom)
    power = stage5_powerset(eqs)
    # the overlap cell now has a single branch to the unified {loop, ff} set,
    # which is absorbed to ff by its ff member
    body = power.body(power.start)
    targets = [b.target for b in body]
    assert frozenset((0, 1)) in targets or any(len(t) == 2 for t in targets)
    merged = [t for t in targets if len(t) == 2][0]
    assert power.body(merged) == "ff"


def test_stage5_absorbs_ff_members(dom):
    f = parse_formula("max X.([(x)?req]X && [(x)?req]ff)", dom)
    nf = normalize(f, dom)
    assert isinstance(nf, Box)
    assert nf.body == FF


def test_stage6_back_edge_and_leaf(dom):
    f = parse_formula("max X.[i?req]X", dom)
    power = stage5_powerset(
        stage4_minterms(stage3_align(_with_domain(stage2_equations(stage1_unfold(f)), dom)), dom)
    )
    out = stage6_rebuild(power)
    assert isinstance(out, Max)
    assert str(out.body.body) == out.var
    assert stage6_rebuild(stage5_powerset(stage4_minterms(
        stage3_align(_with_domain(stage2_equations(TT), dom)), dom
    ))) == TT


def test_normalize_phi1(dom, terms):
    nf = normalize(terms["phi1"], dom)
    assert classify(nf, dom).shmlnf
    for name in ("pg", "pb"):
        lts = reachable(terms[name], 100)
        assert mc_eval(terms["phi1"], lts, {}, dom) == mc_eval(nf, lts, {}, dom)


def test_normalize_trivials(dom):
    assert normalize(TT, dom) == TT
    assert normalize(FF, dom) == FF


def test_normalize_overlapping_guards_to_guarded_ff(dom):
    f = parse_formula("max X.([(x)?req when x != j]X && [(x)?req when x != j]ff)", dom)
    nf = normalize(f, dom)
    assert isinstance(nf, Box) and nf.body == FF
    corpus = [gen_process(dom, 1 + (i % 5), 70 + i) for i in range(12)]
    for p in corpus:
        lts = reachable(p, 200)
        assert mc_eval(f, lts, {}, dom) == mc_eval(nf, lts, {}, dom)


def test_normalize_rejects_bad_inputs(dom, terms):
    with pytest.raises(NormalizeError):
        normalize(terms["phins"], dom)  # disjunction: not safety
    from enfkit.formulas import FVar, Max

    with pytest.raises(NormalizeError):
        normalize(Max("X", FVar("X")), dom)  # unguarded
    with pytest.raises(NormalizeError):
        normalize(FVar("X"), dom)  # open


@pytest.mark.parametrize("seed", range(0, 40))
def test_normalize_equivalence_and_structure(dom, seed):
    f = gen_formula(dom, 1 + (seed % 8), 1000 + seed)
    nf = normalize(f, dom)
    assert classify(nf, dom).shmlnf, f
    for i in range(4):
        p = gen_process(dom, 1 + ((seed + i) % 9), 2000 + seed * 4 + i)
        lts = reachable(p, 500)
        assert mc_eval(f, lts, {}, dom) == mc_eval(nf, lts, {}, dom), (f, nf, p)


@pytest.mark.parametrize("seed", range(0, 25))
def test_normalize_idempotent(dom, seed):
    f = gen_formula(dom, 1 + (seed % 8), 5000 + seed)
    n1 = normalize(f, dom)
    assert str(normalize(n1, dom)) == str(n1)


def test_dump_stages_is_printable(dom, terms):
    text = dump_stages(terms["phi1"], dom)
    for marker in ["stage 1", "stage 2", "stage 3", "stage 4", "stage 5", "stage 6"]:
        assert marker in text
