import json
import math

import pytest

from absorbns.config import ConfigError, config_to_dict, load_config, parse_config, parse_document
from absorbns.manifest import RunManifest
from absorbns.solver import BoundedConstant, RandomDivFree, TaylorGreen, VanishingPower, ZeroForcing
from absorbns.theory import build_theory_report, mu

MINIMAL = "nu: 0.1\nalpha: 0.1\nsigma: 1.5\ngrid: 64\ndt: 1.0e-3\nt_end: 10\n"


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.grid.n == 64 and cfg.grid.length == pytest.approx(2 * math.pi)
    assert cfg.sample_interval == 1e-3
    assert cfg.initial_condition == TaylorGreen(1.0)
    assert cfg.forcing == ZeroForcing()
    echo = config_to_dict(cfg)
    assert echo["extinction_tol"] == 1e-12 and echo["splitting"] == "compensated"


def test_sigma_constraint_named():
    with pytest.raises(ConfigError, match="σ > 1 required"):
        parse_config(MINIMAL.replace("sigma: 1.5", "sigma: 0.5"))


def test_dt_exceeds_t_end():
    with pytest.raises(ConfigError, match="dt <= t_end"):
        parse_config(MINIMAL.replace("t_end: 10", "t_end: 1.0e-4"))


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"viscosity \(line 7\)"):
        parse_config(MINIMAL + "viscosity: 3\n")


def test_unknown_nested_key():
    with pytest.raises(ConfigError, match="ic.amp"):
        parse_config(MINIMAL + "ic: {type: taylor_green, amp: 2}\n")


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config("nu: 0.1\nalpha: 0.1\nsigma: [1.5\n")


def test_missing_key():
    with pytest.raises(ConfigError, match="t_end"):
        parse_config(MINIMAL.replace("t_end: 10\n", ""))


def test_type_error():
    with pytest.raises(ConfigError, match="nu"):
        parse_config(MINIMAL.replace("nu: 0.1", "nu: fast"))


def test_sections_parse():
    text = MINIMAL + (
        "ic: {type: random, energy: 2.0, spectrum_exponent: -2, seed: 5}\n"
        "forcing: {type: vanishing_power, t_f: 5, epsilon: 1.0e-3, mu: auto}\n"
        "theory: {calibrate: true, calibration_samples: 2}\n"
    )
    cfg, topts = parse_document(text)
    assert cfg.initial_condition == RandomDivFree(2.0, -2.0, 5, None)
    assert cfg.forcing == VanishingPower(5.0, 1e-3, mu(1.5), TaylorGreen())
    assert topts.calibrate and topts.calibration_samples == 2


def test_echo_round_trips():
    import yaml

    text = MINIMAL.replace("sigma: 1.5", "sigma: 3") + "forcing: {type: bounded_constant, C_f: 0.2, shape: {type: random, seed: 1}}\n"
    cfg, topts = parse_document(text)
    echo = config_to_dict(cfg, topts)
    again, topts2 = parse_document(yaml.safe_dump(echo))
    # Resolved defaults are echoed explicitly, so compare echoes.
    assert config_to_dict(again, topts2) == echo
    assert again.grace == cfg.grace and topts2 == topts
    assert isinstance(again.forcing, BoundedConstant)


def test_load_from_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(MINIMAL)
    assert load_config(p)[0] == parse_config(MINIMAL)
    with pytest.raises(ConfigError, match="missing.yaml"):
        load_config(tmp_path / "missing.yaml")


def test_manifest_round_trip(tmp_path):
    cfg = parse_config(MINIMAL)
    rep = build_theory_report(1.5, 0.1, 0.1, 1.0)
    m = RunManifest(command="run", config=config_to_dict(cfg), seed=3, theory=rep.to_dict(),
                    fits=[{"kind": "exponential_rate", "rate": 0.1 + 0.2}],
                    checks={"x": {"max_ratio": float("inf")}}, pass_flags={"envelope": True})
    path = m.write(tmp_path / "m.json")
    back = RunManifest.read(path)
    assert back.to_json() == m.to_json()
    assert json.loads(back.to_json())["fits"][0]["rate"] == 0.1 + 0.2
    assert back.passed


def test_manifest_rejects_unknown_fields():
    with pytest.raises(ValueError):
        RunManifest.from_dict({"command": "run", "config": {}, "seed": 0, "surprise": 1})


def test_unsigned_exponent_floats():
    cfg = parse_config(MINIMAL.replace("dt: 1.0e-3", "dt: 1e-3").replace("t_end: 10", "t_end: 1.0e1"))
    assert cfg.dt == 1e-3 and cfg.t_end == 10.0
