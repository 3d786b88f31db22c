import json
import pathlib

import pytest

import statecheck

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def fixture(name):
    return (FIXTURES / name).read_text()


def test_banking_levels():
    bank = fixture("banking.json")
    si = statecheck.check_isolation(bank, "si")
    assert si["satisfied"]
    assert si["witness"]["order"] == ["t0", "t_w1", "t_w2"]
    ser = statecheck.check_isolation(bank, "ser")
    assert ser["outcome"] == "violated"
    assert "t_w2" in ser["diagnosis"]


def test_dict_input_and_session_guarantees():
    flip = json.loads(fixture("flipflop.json"))
    assert not statecheck.check_session(flip, ["mr"])["satisfied"]
    assert statecheck.check_session(flip, "rmw")["satisfied"]


def test_oracle():
    assert statecheck.phenomena(fixture("writeskew.json"))["G2"]
    assert not statecheck.phenomena(fixture("writeskew.json"))["G-single"]
    assert not statecheck.pl_check(fixture("fractured.json"), "pl2plus")
    assert statecheck.pl_check(fixture("chain.json"), "pl3")


def test_generate_closed_loop():
    h = statecheck.generate(sessions=3, seed=7, level="ser")
    assert h == statecheck.generate(sessions=3, seed=7, level="ser")
    assert statecheck.check_isolation(h, "ser")["satisfied"]
    assert statecheck.normalize(h) == statecheck.normalize(json.dumps(h))
    assert len(statecheck.digest(h)) == 16


def test_crosscheck_small_family():
    report = statecheck.crosscheck(2, 2, 2, 2, ["ser", "psi", "cc4"])
    assert report["disagreements"] == []
    assert report["cases"] == report["agreements"] > 0


def test_errors():
    with pytest.raises(statecheck.StatecheckError, match="line"):
        statecheck.check_isolation("{", "ser")
    with pytest.raises(statecheck.StatecheckError):
        statecheck.check_isolation(fixture("banking.json"), "bogus")
