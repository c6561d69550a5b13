from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfhom import rates
from perfhom.scenario import ConfigError, load, parse

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

BASE = """
name = "x"
theorem = "T2"
eps = [0.25, 0.125]

[eta]
rule = "fixed"
value = 0.5
"""


@pytest.mark.parametrize("path", sorted(p.name for p in SCENARIOS.glob("*.toml") if "malformed" not in p.name))
def test_shipped_scenarios_parse(path):
    sf = load(SCENARIOS / path)
    assert sf.eps_list == sorted(sf.eps_list, reverse=True)


def test_minimal_defaults():
    sf = parse(BASE)
    scn = sf.scenario
    assert scn.theorem == "T2" and scn.layout.bc_rule == "dirichlet"
    assert scn.eta_rule == rates.Fixed(0.5)
    assert scn.tol == rates.DEFAULT_TOL


def test_power_rules():
    sf = parse(BASE.replace('rule = "fixed"\nvalue = 0.5', 'rule = "power"\ngamma = 0.5')
               + '\n[mu]\nrule = "power"\nbeta = 0.5\n')
    assert sf.scenario.eta_rule(0.25) == pytest.approx(0.5)
    assert sf.scenario.mu(0.25) == pytest.approx(2.0)


def test_malformed_eta_rule_names_field_and_line():
    with pytest.raises(ConfigError) as exc:
        load(SCENARIOS / "malformed_eta.toml")
    assert exc.value.field == "eta.rule"
    assert exc.value.line == 6


@pytest.mark.parametrize("patch, field", [
    (('eps = [0.25, 0.125]', 'eps = [0.125, 0.25]'), "eps"),
    (('eps = [0.25, 0.125]', 'eps = "small"'), "eps"),
    (('theorem = "T2"', 'theorem = "T3"'), "theorem"),
    (('value = 0.5', 'value = 1.5'), "eta.value"),
    (('value = 0.5', 'value = "half"'), "eta.value"),
    (('theorem = "T2"', 'theorem = "T1"'), "mu"),
])
def test_field_diagnostics(patch, field):
    with pytest.raises(ConfigError) as exc:
        parse(BASE.replace(*patch))
    assert exc.value.field == field


def test_layout_fields_validated():
    with pytest.raises(ConfigError) as exc:
        parse(BASE + '\n[layout]\nbc = "neumann"\n')
    assert exc.value.field == "layout.bc" and exc.value.line == 11
    with pytest.raises(ConfigError):
        parse(BASE + "\n[layout]\nradii = [1.0, 0.5, 1.9, 3.0]\n")
    with pytest.raises(ConfigError):
        parse(BASE + '\n[layout]\ngenerator = "explicit"\n')


def test_coefficients_validated():
    sf = parse(BASE + "\n[coefficients]\nA = [[2.0, 0.0], [0.0, 1.0]]\nb = [1.0, 0.0]\nc = 0.5\n")
    assert sf.scenario.coeffs.c0 == pytest.approx(1.0)
    assert sf.scenario.coeffs.b_sup == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        parse(BASE + "\n[coefficients]\nA = [[1.0, 2.0], [0.0, 1.0]]\n")
    with pytest.raises(ConfigError):
        parse(BASE + "\n[coefficients]\nA = [[-1.0, 0.0], [0.0, 1.0]]\n")


def test_toml_syntax_error_has_line():
    with pytest.raises(ConfigError) as exc:
        parse(BASE + "\n[eta\n")
    assert exc.value.line is not None


def test_seed_override():
    assert parse(BASE + "seed = 3\n".join(["", ""]), seed=9).seed == 9
    assert parse("seed = 4\n" + BASE).seed == 4


def test_missing_file():
    with pytest.raises(ConfigError):
        load("/nonexistent/file.toml")


@settings(max_examples=30, deadline=None)
@given(eps=st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=5, unique=True))
def test_eps_order_enforced(eps):
    text = BASE.replace("eps = [0.25, 0.125]", f"eps = {eps!r}")
    if all(b < a for a, b in zip(eps, eps[1:])):
        assert parse(text).eps_list == eps
    else:
        with pytest.raises(ConfigError):
            parse(text)
