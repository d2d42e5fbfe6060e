import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_smp
from pmlo import automata as A
from pmlo import formats, logic as L
from pmlo.errors import ModelError, UnsupportedFormula
from pmlo.qualitative import (almost_sure_states, check_qualitative, eliminate_almost_sure,
                              eliminate_positive, positive_states)
from pmlo.smp import SMP

EX_ACC = L.parse_formula("exists t. acc(t)")
T = A.var_track("t")
E = frozenset()


@pytest.fixture
def coin(fixtures_dir):
    return formats.read_smp(fixtures_dir / "coin.smp")


@pytest.fixture
def choice(fixtures_dir):
    return formats.read_smp(fixtures_dir / "choice.smp")


def test_positive_states(coin, choice):
    assert positive_states(coin, {"acc"}) == {"s0", "acc"}
    assert positive_states(coin, set()) == set()
    assert positive_states(choice, {"acc"}) == {"s0", "acc"}


def test_almost_sure_states(coin, choice):
    assert almost_sure_states(coin, {"acc"}) == {"acc"}
    assert almost_sure_states(choice, {"acc"}) == {"s0", "acc"}
    ring = SMP(["a"], ["u", "v"], "u", [("u", "a", "v", 1), ("v", "a", "u", 1)])
    assert almost_sure_states(ring, {"u", "v"}) == {"u", "v"}


def test_eliminate_positive_closed(coin):
    assert eliminate_positive(coin, A.compile_wmlo(EX_ACC)).is_universal_shape()
    assert A.is_empty(eliminate_positive(coin, A.empty()))


def test_eliminate_positive_free_variable(coin):
    body = A.compile_wmlo(L.parse_formula("acc(t)", free_first=("t",)))
    out = eliminate_positive(coin, body, [T])
    assert not A.accepts_lasso(out, [frozenset({T})], [E])
    assert A.accepts_lasso(out, [E, frozenset({T})], [E])
    assert A.accepts_lasso(out, [E, E, E, frozenset({T})], [E])


def test_eliminate_almost_sure_closed(coin, choice):
    assert A.is_empty(eliminate_almost_sure(coin, A.compile_wmlo(EX_ACC)))
    assert eliminate_almost_sure(choice, A.compile_wmlo(EX_ACC)).is_universal_shape()
    assert eliminate_almost_sure(coin, A.universal()).is_universal_shape()


def test_check_examples(coin, choice):
    pos = check_qualitative(coin, L.parse_formula("E P{> 0}[ exists t. acc(t) ]"))
    assert pos.verdict
    assert pos.witness["run_prefix"][:2] == ["s0", "acc"]
    assert not check_qualitative(coin, L.parse_formula("E P{= 1}[ exists t. acc(t) ]")).verdict
    assert check_qualitative(choice, L.parse_formula("E P{= 1}[ exists t. acc(t) ]")).verdict


def test_counterexample_is_a_run(coin):
    r = check_qualitative(coin, EX_ACC)
    assert not r.verdict
    w = r.witness
    assert w["stem"][0] == "s0" and "acc" not in w["stem"] + w["loop"]


def test_probability_free_on_all_paths(coin):
    assert check_qualitative(coin, L.parse_formula("exists t. acc(t) | rej(t) | !acc(t)")).verdict
    assert not check_qualitative(coin, EX_ACC).verdict


def test_nested_nodes(coin):
    yes = "forall t. acc(t) -> E P{> 0}[ forall u. t <= u -> acc(u) ]"
    no = "forall t. acc(t) -> E P{= 1}[ forall u. t <= u -> acc(u) ]"
    assert check_qualitative(coin, L.parse_formula(yes)).verdict
    assert not check_qualitative(coin, L.parse_formula(no)).verdict


def test_rejects_quantitative(coin):
    with pytest.raises(UnsupportedFormula):
        check_qualitative(coin, L.parse_formula("E P{>= 1/2}[ exists t. acc(t) ]"))


def test_dead_end():
    m = SMP(["a"], ["u", "v"], "u", [("u", "a", "v", 1)])
    with pytest.raises(ModelError) as e:
        check_qualitative(m, L.parse_formula("E P{> 0}[ true ]"))
    assert e.value.code == "DEAD_END"


BODIES = ["exists t. p(t)", "forall t. exists u. t < u & p(u)", "exists t. forall u. t < u -> q(u)"]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from(BODIES))
def test_sure_implies_positive(seed, body):
    m = random_smp(random.Random(seed))
    sure = check_qualitative(m, L.parse_formula(f"E P{{= 1}}[ {body} ]")).verdict
    pos = check_qualitative(m, L.parse_formula(f"E P{{> 0}}[ {body} ]")).verdict
    assert pos or not sure


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from(BODIES))
def test_universal_duality(seed, body):
    m = random_smp(random.Random(seed))
    a = check_qualitative(m, L.parse_formula(f"A P{{> 0}}[ {body} ]")).verdict
    e = check_qualitative(m, L.parse_formula(f"E P{{= 1}}[ !({body}) ]")).verdict
    assert a == (not e)
