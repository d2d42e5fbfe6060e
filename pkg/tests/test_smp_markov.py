from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pmlo import automata as A
from pmlo import formats, logic as L, markov
from pmlo.errors import ModelError
from pmlo.qualitative import Product
from pmlo.smp import SMP, FiniteRun, cylinder_measure, sample_run

COIN = """symbols: a
states:
  s0 init
  acc labels {acc}
  rej
trans: s0 a acc 1/2
trans: s0 a rej 1/2
trans: acc a acc 1
trans: rej a rej 1
"""


@pytest.fixture
def coin():
    return formats.parse_smp(COIN)


def test_parse_coin(coin):
    assert len(coin.states) == 3 and coin.init == "s0"
    assert coin.label("acc") == frozenset({"acc"})
    assert coin.is_markov()


def test_prob_sum_error():
    text = COIN.replace("trans: s0 a rej 1/2", "trans: s0 a rej 1/4")
    with pytest.raises(ModelError) as e:
        formats.parse_smp(text)
    assert e.value.code == "PROB_SUM" and e.value.line is not None


def test_zero_prob_error():
    with pytest.raises(ModelError) as e:
        formats.parse_smp(COIN + "trans: rej a acc 0/1\n")
    assert e.value.code == "ZERO_PROB"


def test_unknown_state_error():
    with pytest.raises(ModelError) as e:
        formats.parse_smp(COIN + "trans: nowhere a acc 1\n")
    assert e.value.code == "UNKNOWN_REF"


def test_smp_roundtrip(coin):
    again = formats.parse_smp(formats.write_smp(coin))
    assert again.states == coin.states and set(again.transitions) == set(coin.transitions)


def test_cylinder_measure(coin):
    assert cylinder_measure(coin, FiniteRun(("s0",))) == 1
    assert cylinder_measure(coin, FiniteRun(("s0", "acc"), ("a",))) == Fraction(1, 2)
    assert cylinder_measure(coin, FiniteRun(("s0", "acc", "acc"), ("a", "a"))) == Fraction(1, 2)
    with pytest.raises(ModelError):
        cylinder_measure(coin, FiniteRun(("s0", "s0"), ("a",)))


def test_product_with_universal_is_identity(coin):
    p = Product(coin, A.universal())
    states = p.states()
    assert {q for q, _ in states} == set(coin.reachable_states())
    assert len(states) == len(coin.reachable_states())


def test_product_with_eventually_acc(coin):
    aut = A.compile_wmlo(L.parse_formula("exists t. acc(t)"))
    p = Product(coin, aut)
    states = p.states()
    assert len(states) <= len(coin.states) * aut.num_states
    succ, init = markov.product_chain(coin, aut)
    assert markov.el_acceptance_probability(succ, init, aut.acc) == Fraction(1, 2)


def test_sampling_frequency(coin):
    hits = sum(sample_run(coin, {}, 1, seed=i).states[1] == "acc" for i in range(100_000))
    assert abs(hits / 100_000 - 0.5) <= 0.01


def test_sampling_deterministic_chain():
    m = SMP(["a"], ["u", "v"], "u", [("u", "a", "v", 1), ("v", "a", "u", 1)])
    assert sample_run(m, {}, 5, seed=1) == sample_run(m, {}, 5, seed=99)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_sampling_reproducible(seed):
    m = formats.parse_smp(COIN)
    assert sample_run(m, {}, 10, seed) == sample_run(m, {}, 10, seed)


def test_bsccs(coin):
    assert set(markov.bscc_decompose(coin)) == {frozenset({"acc"}), frozenset({"rej"})}
    single = {"z": [("z", Fraction(1))]}
    assert markov.bscc_decompose(single) == [frozenset({"z"})]
    ring = {"a": [("b", Fraction(1))], "b": [("a", Fraction(1))]}
    assert markov.bscc_decompose(ring) == [frozenset({"a", "b"})]


def test_acceptance_probabilities(coin, fixtures_dir):
    assert markov.acceptance_probability(coin, {"acc"}, "s0") == Fraction(1, 2)
    assert markov.acceptance_probability(coin, {"acc", "rej"}, "s0") == 1
    gambler = formats.read_smp(fixtures_dir / "gambler.smp")
    assert markov.acceptance_probability(gambler, {"acc"}, "s0") == Fraction(2, 3)
    ruin = formats.read_smp(fixtures_dir / "ruin.smp")
    assert markov.acceptance_probability(ruin, {"acc"}, "g2") == Fraction(2, 3)


@pytest.mark.parametrize("text,expected", [
    ("E P{>= 1/2}[ exists t. acc(t) ]", True),
    ("E P{> 1/2}[ exists t. acc(t) ]", False),
    ("E P{>= 0}[ exists t. acc(t) ]", True),
    ("E P{= 1/2}[ exists t. acc(t) | exists t. !acc(t) ]", True),
    ("!E P{< 1/3}[ exists t. acc(t) ]", True),
    ("E P{> 0}[ exists t. rej(t) ]", False),
])
def test_flat_quantitative(coin, text, expected):
    r = markov.check_flat_quantitative(coin, L.parse_formula(text))
    assert r.verdict is expected


def test_flat_quantitative_needs_markov(fixtures_dir):
    choice = formats.read_smp(fixtures_dir / "choice.smp")
    with pytest.raises(ModelError) as e:
        markov.check_flat_quantitative(choice, L.parse_formula("E P{>= 1/2}[ exists t. acc(t) ]"))
    assert e.value.code == "NOT_MARKOV"
