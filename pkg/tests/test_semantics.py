import random

import numpy as np
import pytest

from tempagent.formula import K, KnI, Not, Or, Today, Unc, Until, Var, parse
from tempagent.frames import Chain, Cluster, FrameIndex, FrameSpec
from tempagent.generators import random_formula, random_model
from tempagent.semantics import (
    EvaluationError, HorizonError, Model, evaluate, holds_at, minimum_horizon, oracle_eval,
    stable_horizon, truth_mask, unrolled_truth, valid_in_model,
)

ONE_CLASS = Cluster.of("ab", [[["a", "b"]]])
SPLIT = Cluster.of("ab", [[["a"], ["b"]]])


def two_state(cluster=ONE_CLASS):
    return Model(FrameSpec(1, (cluster,)), {1: {"t0.a"}})


def everywhere(model, text):
    return set(evaluate(model, parse(text)).values())


def test_tautology_everywhere():
    assert everywhere(two_state(), "x1 -> x1") == {True}


def test_unc_one_class():
    assert evaluate(two_state(), parse("Unc x1")) == {"t0.a": True, "t0.b": True}


def test_unc_split_classes():
    assert evaluate(two_state(SPLIT), parse("Unc x1")) == {"t0.a": False, "t0.b": False}


def test_unc_true_is_false():
    assert everywhere(two_state(), "Unc true") == {False}


def test_holds_at_examples():
    m = two_state()
    single = Model(FrameSpec(1, (Cluster.single("a"),)), {})
    assert holds_at(single, "t0.a", parse("true"))
    assert holds_at(m, "t0.a", parse("KnI x1"))
    assert not holds_at(m, "t0.a", parse("K1 x1"))
    with pytest.raises(EvaluationError):
        holds_at(m, "t0.z", parse("x1"))


def test_valid_in_model_examples():
    m = two_state()
    assert valid_in_model(m, parse("K1 x1 -> x1"))
    assert valid_in_model(m, parse("Today x1 -> x1"))
    assert not valid_in_model(m, parse("x1 -> K1 x1"))


def test_examples_agree_with_oracle():
    for m in (two_state(), two_state(SPLIT)):
        for text in ("Unc x1", "KnI x1", "K1 x1", "x1 -> K1 x1", "Unc true"):
            assert evaluate(m, parse(text)) == oracle_eval(m, parse(text))


def test_unknown_valuation_state_rejected():
    with pytest.raises(EvaluationError, match="unknown state"):
        Model(FrameSpec(1, (ONE_CLASS,)), {1: {"t0.z"}})


def test_agent_out_of_range():
    with pytest.raises(EvaluationError):
        evaluate(two_state(), parse("K2 x1"))


def test_missing_variable_is_false():
    assert everywhere(two_state(), "x7") == {False}


def test_next_vacuous_at_end_of_loop_free_frame():
    m = Model(FrameSpec(1, (Cluster.single("a"), Cluster.single("b")), ((),)), {})
    assert evaluate(m, parse("N false")) == {"t0.a": False, "t1.b": True}


def test_dist_counts_strict_steps():
    a, b = Cluster.single("a"), Cluster.single("b")
    m = Model(FrameSpec(1, (a, b, a), ((), ())), {1: {"t2.a"}})
    assert evaluate(m, parse("D2 x1")) == {"t0.a": True, "t1.b": False, "t2.a": False}
    assert evaluate(m, parse("D1 x1")) == {"t0.a": True, "t1.b": True, "t2.a": False}
    assert evaluate(m, parse("D0 x1")) == {"t0.a": False, "t1.b": False, "t2.a": True}


def _until_frame():
    # C0={a}, C1={b,c}, C2={d}; phi at a and b only, psi at d
    spec = FrameSpec(1, (Cluster.single("a"), Cluster.single("bc"), Cluster.single("d")), ((), ()))
    return Model(spec, {1: {"t0.a", "t1.b"}, 2: {"t2.d"}})


def test_until_needs_whole_intermediate_clusters():
    m = _until_frame()
    got = evaluate(m, parse("x1 Until x2"))
    assert got == oracle_eval(m, parse("x1 Until x2"))
    assert got == {"t0.a": False, "t1.b": True, "t1.c": False, "t2.d": True}


def test_successor_unfolding_is_not_the_until_clause():
    # "x1 at a and some Next-successor satisfies the Until" would make a true here
    m = _until_frame()
    index = FrameIndex(m.spec)
    u = truth_mask(m, parse("x1 Until x2"))
    assert u >> index.bit["t1.b"] & 1
    assert holds_at(m, "t0.a", parse("x1"))
    assert not u >> index.bit["t0.a"] & 1


def _random_cases(n, seed, **kw):
    rng = random.Random(seed)
    for _ in range(n):
        m = random_model(rng, variables=3, **kw)
        f = random_formula(rng, size=rng.randint(1, 12), variables=3, agents=m.spec.agents)
        yield m, f


def test_oracle_equivalence_random():
    for m, f in _random_cases(500, 101):
        assert evaluate(m, f) == oracle_eval(m, f), (m, f)


def test_horizon_doubling_lassos():
    for m, f in _random_cases(150, 102, loop=True):
        h = stable_horizon(m, f)
        assert oracle_eval(m, f, h) == oracle_eval(m, f, 2 * h)


def test_until_unfolding_characterization():
    rng = random.Random(203)
    for m, f in _random_cases(300, 103):
        phi, psi = f, random_formula(rng, 4, 3, m.spec.agents)
        index = FrameIndex(m.spec)
        u = truth_mask(m, Until(phi, psi))
        p, q = truth_mask(m, phi), truth_mask(m, psi)
        expected = q
        for i, s in enumerate(index.succ):
            if s is None:
                continue
            target = index.time_mask[s]
            step = bool(target & q) or target & u == target
            if step:
                expected |= p & index.group_mask[i]
        assert u == expected


def test_pointwise_invariants():
    for m, f in _random_cases(300, 104):
        t = lambda g: truth_mask(m, g)
        full = FrameIndex(m.spec).full
        assert t(Unc(f)) == t(KnI(f)) & t(KnI(Not(f)))
        assert t(Unc(f)) == t(Unc(Not(f)))
        assert t(Unc(f)) & t(Today(f)) == 0
        assert t(f) | t(KnI(f)) == t(KnI(f))
        assert t(Today(f)) | t(f) == t(f)
        for i in range(1, m.spec.agents + 1):
            assert t(K(i, f)) | t(f) == t(f)
        assert t(Var(1)) | t(Until(f, Var(1))) == t(Until(f, Var(1)))
        assert t(Or(f, Not(f))) == full


def test_variables_outside_formula_do_not_matter():
    rng = random.Random(105)
    for m, f in _random_cases(100, 105):
        extra = {v: {s for s in m.states if rng.random() < 0.5} for v in (8, 9)}
        other = Model(m.spec, {**m.valuation, **extra})
        assert evaluate(m, f) == evaluate(other, f)
        assert oracle_eval(m, f) == oracle_eval(other, f)


def test_truncated_unrolling_would_be_wrong():
    # one cluster looping on itself: D1 N false is false, yet at a horizon cut short
    # the last copy has no Next-successor and N false turns vacuously true.
    m = Model(FrameSpec(1, (Cluster.single("a"),), ((),), loop=0), {})
    f = parse("D1 N false")
    assert evaluate(m, f) == {"t0.a": False}
    assert oracle_eval(m, f) == {"t0.a": False}
    with pytest.raises(HorizonError):
        oracle_eval(m, f, 2)


def test_stable_horizon_examples():
    loop_free = Model(FrameSpec(1, (Cluster.single("a"),)), {})
    with pytest.raises(HorizonError):
        stable_horizon(loop_free, parse("x1"))
    a = Cluster.single("a")
    m1 = Model(FrameSpec(1, (a, a), ((), ()), loop=1), {})
    assert stable_horizon(m1, parse("N x1")) == 4
    m2 = Model(FrameSpec(1, (a, a, a, a), ((), (), (), ()), loop=2), {})
    assert stable_horizon(m2, parse("D2 x1")) == 10


def test_stable_horizon_covers_minimum():
    for m, f in _random_cases(200, 106, loop=True):
        assert stable_horizon(m, f) >= minimum_horizon(m.spec, f)


def test_horizon_checks():
    m = Model(FrameSpec(1, (Cluster.single("a"), Cluster.single("b")), ((),)), {})
    with pytest.raises(HorizonError):
        evaluate(m, parse("x1"), horizon=1)
    assert evaluate(m, parse("x1"), horizon=2) == {"t0.a": False, "t1.b": False}


def test_unrolled_truth_keys_copies():
    chain = Chain((Cluster.single("c"),))
    m = Model(FrameSpec(1, (Cluster.single("a"),), ((chain,),), loop=0), {1: {"g0.0.0.c"}})
    truth = unrolled_truth(m, parse("x1"), 3)
    assert truth == {"t0.a": False, "g0.0.0.c": True, "t0.a.c1": False, "g0.0.0.c.c1": True,
                     "t0.a.c2": False}


def test_oracle_batched_matches_single():
    from tempagent.semantics import oracle_truth
    rng = random.Random(107)
    for m, f in _random_cases(30, 107):
        names = m.spec.state_names()
        batch = {v: np.array([[rng.random() < 0.5 for _ in names] for _ in range(5)]) for v in (1, 2, 3)}
        truth, g = oracle_truth(m.spec, f, batch)
        for k in range(5):
            single, _ = oracle_truth(m.spec, f, {v: batch[v][k] for v in batch})
            assert (truth[k] == single).all()
