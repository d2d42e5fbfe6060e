import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_pta
from pmlo import formats
from pmlo.errors import ModelError
from pmlo.pta import (CAtom, CTrue, Config, PTA, classical_steps, eval_constraint, pta_product,
                      simulate, urgent_steps)

F = Fraction


def _one(guard, probs=(1,), clocks=("x",)):
    trans = [("q", "a", f"r{i}", guard if i == 0 else CTrue(), [], F(p)) for i, p in enumerate(probs)]
    return PTA(list(clocks), ["a"], ["q"] + [f"r{i}" for i in range(len(probs))], "q", trans)


def test_constraints():
    assert eval_constraint(CTrue(), {"x": F(7)})
    g = CAtom("x", "<=", 1)
    assert eval_constraint(g, {"x": F(1)}) and not eval_constraint(g, {"x": F(3, 2)})
    assert eval_constraint(CAtom("x", ">=", 2, "y"), {"x": F(3), "y": F(1, 2)})


def test_classical_all_enabled():
    t = _one(CTrue(), (F(1, 2), F(1, 2)))
    dist = classical_steps(t, Config.of("q", {"x": F(0)}), F(1), "a")
    assert sorted(p for _, p in dist) == [F(1, 2), F(1, 2)]
    assert all(c.loc != t.trap for c, _ in dist)


def test_classical_disabled_goes_to_trap():
    t = _one(CAtom("x", "<=", 1))
    dist = classical_steps(t, Config.of("q", {"x": F(0)}), F(2), "a")
    assert dist == [(Config.of(t.trap, {"x": F(2)}), F(1))]


def test_classical_half_disabled():
    t = PTA(["x"], ["a"], ["q", "r", "s"], "q",
            [("q", "a", "r", CTrue(), [], F(1, 2)), ("q", "a", "s", CAtom("x", "<", 1), [], F(1, 2))])
    dist = dict((c.loc, p) for c, p in classical_steps(t, Config.of("q", {"x": F(0)}), F(2), "a"))
    assert dist == {"r": F(1, 2), t.trap: F(1, 2)}


def test_urgent_minimum():
    t = PTA(["x"], ["a"], ["q", "r"], "q", [("q", "a", "r", CAtom("x", ">=", 2), ["x"], 1)])
    u = urgent_steps(t, Config.of("q", {"x": F(0)}))
    assert u.tau == 2 and not u.trap
    assert u.options["a"] == [(Config.of("r", {"x": F(0)}), F(1))]


def test_urgent_no_minimum():
    t = PTA(["x"], ["a"], ["q", "r"], "q", [("q", "a", "r", CAtom("x", ">", 1), [], 1)])
    u = urgent_steps(t, Config.of("q", {"x": F(1)}))
    assert u.trap and u.tau == 0
    assert u.options["a"] == [(Config.of(t.trap, {"x": F(1)}), F(1))]


def test_urgent_true_guard():
    u = urgent_steps(_one(CTrue()), Config.of("q", {"x": F(5, 3)}))
    assert u.tau == 0 and not u.trap


def test_product_unit():
    a = PTA(["x"], ["a"], ["p", "q"], "p", [("p", "a", "q", CAtom("x", "<", 2), ["x"], 1),
                                            ("q", "a", "p", CTrue(), [], 1)], {"q": ["B"]})
    unit = PTA([], ["z"], ["u"], "u", [("u", "z", "u", CTrue(), [], 1)])
    prod = pta_product(a, unit)
    assert len(prod.locations) == len(a.locations)
    assert len([e for e in prod.transitions if e.symbol == "a"]) == len(a.transitions)


def test_product_probabilities(fixtures_dir):
    a = formats.read_pta(fixtures_dir / "unit_a.pta")
    b = formats.read_pta(fixtures_dir / "unit_b.pta")
    prod = pta_product(a, b)
    assert len(prod.locations) == 4
    assert F(1, 6) in {e.prob for e in prod.transitions}
    sums = {}
    for e in prod.transitions:
        sums[(e.src, e.symbol)] = sums.get((e.src, e.symbol), 0) + e.prob
    assert set(sums.values()) == {1}


def test_product_commutes_up_to_renaming(fixtures_dir):
    a = formats.read_pta(fixtures_dir / "unit_a.pta")
    b = formats.read_pta(fixtures_dir / "unit_b.pta")
    ab, ba = pta_product(a, b), pta_product(b, a)
    assert len(ab.locations) == len(ba.locations)
    assert sorted(e.prob for e in ab.transitions) == sorted(e.prob for e in ba.transitions)
    assert sorted(map(sorted, map(ab.label, ab.locations))) == sorted(map(sorted, map(ba.label, ba.locations)))


def test_reachable_product_is_smaller(fixtures_dir):
    a = formats.read_pta(fixtures_dir / "unit_a.pta")
    b = formats.read_pta(fixtures_dir / "unit_b.pta")
    assert len(pta_product(a, b, reachable_only=True).locations) <= 4


def test_urgent_loop_delays():
    t = PTA(["x"], ["a"], ["q"], "q", [("q", "a", "q", CAtom("x", "=", 1), ["x"], 1)])
    run = simulate(t, "urgent", 10, seed=3)
    assert run.delays == [1] * 10


def test_simulate_reproducible():
    t = PTA(["x"], ["a", "b"], ["q", "r"], "q",
            [("q", "a", "r", CAtom("x", "<", 2), [], F(1, 2)), ("q", "a", "q", CTrue(), ["x"], F(1, 2)),
             ("r", "b", "q", CTrue(), ["x"], 1)])
    assert simulate(t, "classical", 20, seed=8) == simulate(t, "classical", 20, seed=8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from(["classical", "urgent"]))
def test_trap_is_absorbing(seed, sem):
    rng = random.Random(seed)
    try:
        t = random_pta(rng, 2, 2)
    except ModelError:
        return
    run = simulate(t, sem, 15, rng)
    locs = [c.loc for c in run.configs]
    if t.trap in locs:
        assert all(q == t.trap for q in locs[locs.index(t.trap):])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_pta_roundtrip(seed):
    try:
        t = random_pta(random.Random(seed), 3, 3)
    except ModelError:
        return
    again = formats.parse_pta(formats.write_pta(t))
    assert again.locations == t.locations and again.clocks == t.clocks
    assert formats.write_pta(again) == formats.write_pta(t)


def test_pta_parse_errors():
    good = "clocks: x\nsymbols: a\nstates:\n  q init\ntrans: q a q [x <= 1] {x} 1\n"
    formats.parse_pta(good)
    with pytest.raises(ModelError) as e:
        formats.parse_pta(good.replace("[x <= 1]", "[z <= 1]"))
    assert e.value.line == 5
    with pytest.raises(ModelError):
        formats.parse_pta(good.replace("} 1", "} 1/2"))
