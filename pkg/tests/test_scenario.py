import json

import pytest

from iesched.scenario import (MODE_FEATURES, ScenarioInvariantError, ScenarioParseError,
                              ScenarioSchemaError, apply_mode, from_dict, load_scenario, loads)


@pytest.fixture()
def doc():
    from importlib import resources
    return json.loads(resources.files("iesched.data").joinpath("paper_case.json").read_text())


def test_bundled(paper):
    assert len(paper.thermal_units) == 4
    assert len(paper.chp_units) == 2
    assert paper.horizon == 24
    assert all(u.hst is not None for u in paper.chp_units)
    assert paper.bess is not None and paper.eb is not None


def test_illustrative_profiles_are_labelled(doc):
    for key in ("t_outdoor", "wind", "pv"):
        text = json.dumps(doc[key])
        assert "illustrative" in text


def test_load_by_path(tmp_path, doc):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    assert load_scenario(p).elec_load == load_scenario("paper_case").elec_load


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioParseError):
        load_scenario(tmp_path / "nope.json")


def test_parse_error_position():
    with pytest.raises(ScenarioParseError, match="line 2"):
        loads('{"horizon": 1,\n "dt": }')


def test_p_min_above_p_max(doc):
    doc["thermal_units"][2]["p_min"] = 500
    with pytest.raises(ScenarioInvariantError, match=doc["thermal_units"][2]["name"]):
        from_dict(doc)


def test_mode_2_needs_bess(doc):
    doc.pop("bess")
    doc["mode"] = 2
    with pytest.raises(ScenarioInvariantError, match="BESS"):
        from_dict(doc)


def test_mode_1_without_bess_is_fine(doc):
    doc.pop("bess")
    doc.pop("eb")
    doc["mode"] = 1
    assert from_dict(doc).bess is None


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d.pop("horizon"), "horizon"),
    (lambda d: d.update(colour="red"), "colour"),
    (lambda d: d["thermal_units"][0].update(a="x"), r"thermal_units\[0\].a"),
    (lambda d: d.update(elec_load=d["elec_load"][:5]), "elec_load"),
    (lambda d: d.update(q_step=True), "q_step"),
    (lambda d: d.update(schema_version=99), "schema_version"),
    (lambda d: d["bess"].update(extra=1), "bess"),
])
def test_schema_errors(doc, mutate, match):
    mutate(doc)
    with pytest.raises(ScenarioSchemaError, match=match):
        from_dict(doc)


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d.update(alpha=0.0), "alpha"),
    (lambda d: d.update(q_step=-1), "q_step"),
    (lambda d: d.update(elec_load=[-1.0] * 24), "elec_load"),
    (lambda d: d.update(chance_formulation="magic"), "chance_formulation"),
])
def test_invariant_errors(doc, mutate, match):
    mutate(doc)
    with pytest.raises(ScenarioInvariantError, match=match):
        from_dict(doc)


def test_errors_are_distinct():
    assert not issubclass(ScenarioSchemaError, ScenarioInvariantError)
    assert not issubclass(ScenarioParseError, ScenarioSchemaError)


def test_apply_mode(paper):
    m1 = apply_mode(paper, 1)
    assert m1.bess is None and m1.eb is None and all(u.hst is None for u in m1.chp_units)
    assert m1.features.uncertainty and m1.features.inertia
    m2 = apply_mode(paper, 2)
    assert m2.bess is not None and m2.eb is None
    m3 = apply_mode(paper, 3)
    assert m3.features == MODE_FEATURES[3] and m3.bess is not None
    m6 = apply_mode(paper, 6)
    assert m6.eb is not None and not m6.features.uncertainty and not m6.features.inertia
    with pytest.raises(ScenarioInvariantError):
        apply_mode(paper, 7)


def test_expected_dg_cached(paper):
    assert paper.expected_dg is paper.expected_dg
    assert len(paper.dg_sequences) == 24
    assert all(abs(s.probs.sum() - 1) < 1e-9 for s in paper.dg_sequences)
