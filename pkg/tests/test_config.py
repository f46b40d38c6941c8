import json

import pytest

from weakdisorder import canonical
from weakdisorder.config import config_from_dict, parse_config
from weakdisorder.errors import ParseError, ValidationError

MINIMAL = {
    "perturbation": {"L1": {"type": "multiplication", "terms": [[0, 1.0, 0.0]]}},
    "disorder": {"s_minus": -1, "s_plus": 1},
}


def violations(d):
    with pytest.raises(ValidationError) as info:
        config_from_dict(d)
    return info.value.violations


def test_defaults_are_filled(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(MINIMAL))
    cfg = parse_config(path)
    assert cfg.discretization.N == 256
    assert cfg.sweeps.theta_points == 64
    assert cfg.sweeps.momenta_per_cell == 16
    assert cfg.operator.order == 1
    assert cfg.disorder.support == (-1.0, 1.0)


@pytest.mark.parametrize("name", sorted(canonical.CANONICAL))
def test_canonical_configs_validate(name):
    cfg = config_from_dict(canonical.CANONICAL[name]())
    assert cfg.sweeps.eps_list == tuple(sorted(cfg.sweeps.eps_list))


def test_zero_eps_is_rejected():
    d = dict(MINIMAL, sweeps={"eps_list": [0.0, 0.1]})
    assert any("positive" in v for v in violations(d))


def test_descending_eps_is_rejected():
    d = dict(MINIMAL, sweeps={"eps_list": [0.2, 0.1]})
    assert any("ascending" in v for v in violations(d))


def test_trivial_disorder_is_rejected():
    d = dict(MINIMAL, disorder={"s_minus": 1, "s_plus": 1})
    assert any("non-trivial" in v for v in violations(d))


def test_all_violations_are_collected():
    d = {
        "perturbation": {"t_max": 0.05, "L1": {"type": "magic"}},
        "disorder": {"s_minus": -1, "s_plus": 1, "alternative": "nonneg"},
        "discretization": {"scheme": "wavelet", "N": 4},
        "sweeps": {"eps_list": [0.1], "s_grid": 5, "max_period": 9, "colour": "red"},
        "seed": -3,
    }
    v = violations(d)
    needles = ["unknown perturbation type", "does not match", "unknown scheme", "at least 8",
               "s_grid", "max_period", "unknown fields", "seed"]
    for n in needles:
        assert any(n in x for x in v), n


def test_eps_times_coupling_must_fit_t_max():
    d = dict(MINIMAL, perturbation={"t_max": 0.1, "L1": {"type": "multiplication", "terms": [[0, 1.0, 0.0]]}},
             sweeps={"eps_list": [0.05, 0.2]})
    assert any("t_max" in v for v in violations(d))


def test_spectral_elements_need_order_one():
    d = canonical.fourth_order()
    d["discretization"] = {"scheme": "sem", "N": 64}
    assert any("m = 1 only" in v for v in violations(d))


def test_kernel_and_differential_perturbations():
    d = dict(MINIMAL)
    d["perturbation"] = {
        "L1": {"type": "multiplication", "terms": [[1, 1.0, 0.0]]},
        "L2": {"type": "kernel", "terms": [[1, 1, 0.5, 0.0], [-1, -1, 0.5, 0.0]]},
        "L3a": {"type": "differential", "coefficients": [{"alpha": 1, "beta": 1, "terms": [[0, 0.1, 0.0]]}]},
    }
    cfg = config_from_dict(d)
    assert cfg.family.L2.terms[0] == (1, 1, 0.5 + 0j)
    assert (1, 1) in cfg.family.L3a.coefficients


def test_parse_errors_report_the_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "seed": 1,\n  "disorder": {,}\n}\n')
    with pytest.raises(ParseError, match="line 3"):
        parse_config(path)
    with pytest.raises(ParseError):
        parse_config(tmp_path / "missing.json")
