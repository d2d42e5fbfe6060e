from fractions import Fraction

import pytest

from pmlo import casestudy, formats, logic as L
from pmlo.regions import check_pta

SMALL = casestudy.CaseStudyConfig(n=2)


def test_components_are_labelled():
    comps = casestudy.components(SMALL)
    assert set(comps) == {"client", "manager", "replica0", "replica1"}
    for t in comps.values():
        assert all("good" in t.label(q) for q in t.locations)
    assert "faulty_1" in comps["replica1"].label("r1F")


def test_component_files_roundtrip():
    for t in casestudy.components(SMALL).values():
        text = casestudy.HEADER + formats.write_pta(t)
        assert formats.write_pta(formats.parse_pta(text)) == formats.write_pta(t)


def test_properties_parse_and_classify():
    for f in casestudy.parsed_properties(SMALL).values():
        assert L.classify(f) == L.QUALITATIVE and L.is_closed(f)


@pytest.fixture(scope="module")
def small_system():
    return casestudy.system(SMALL)


@pytest.mark.parametrize("name", sorted(casestudy.properties(SMALL)))
def test_small_instance_properties_hold(small_system, name):
    f = casestudy.parsed_properties(SMALL)[name]
    assert check_pta(small_system, f, "classical").verdict


def test_late_timeout_breaks_answer_window():
    cfg = casestudy.CaseStudyConfig(n=2, timeout=3)
    f = casestudy.parsed_properties(cfg)["healthy_answers_in_time"]
    assert not check_pta(casestudy.system(cfg), f, "classical").verdict


def test_no_faults_means_no_total_failure():
    cfg = casestudy.CaseStudyConfig(n=2, fault=Fraction(0))
    f = casestudy.parsed_properties(cfg)["all_may_fail"]
    assert not check_pta(casestudy.system(cfg), f, "classical").verdict


def test_unconditional_correctness_fails(small_system):
    f = L.parse_formula("forall t. A P{= 1}[ (finish(t) -> correct(t)) | good(t) ]")
    assert not check_pta(small_system, f, "classical").verdict
