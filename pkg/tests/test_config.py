import json

import pytest

from conftest import CONFIGS
from pathtrace.config import DEFAULT_SEED, KNOWN_KEYS, PRESETS, build_config, load_config
from pathtrace.errors import ConfigError
from pathtrace.problems import problem_ids


def write(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_minimal_file_gets_documented_defaults(tmp_path):
    cfg = load_config(write(tmp_path, {"problem": "fa", "lambda0": 10}))
    assert cfg.problem == "fa" and cfg.mode == "improved" and cfg.lambda0 == 10.0
    s = cfg.step
    assert (s.k_max, s.K_min, s.K_max, s.h_dec, s.h_inc, s.h_min) == (20, 5, 10, 0.5, 1.5, 1e-4)
    assert s.eps_F == 1e-7 and s.eps_x == 1e-7
    sg = cfg.safeguards
    assert (sg.c_min, sg.eps_lambda, sg.eps_lambda_star, sg.eps_diff) == (0.95, 1e-5, 0.2, 1e-7)
    assert cfg.deflation.period == 5 and cfg.deflation.power == 2 and cfg.deflation.shift == 1
    assert cfg.seed == DEFAULT_SEED


def test_c_min_above_one_rejected():
    with pytest.raises(ConfigError) as err:
        build_config({"problem": "fa", "lambda0": 10, "c_min": 1.5})
    assert any("c_min" in v for v in err.value.violations)


def test_delta_crit_below_delta_maxU_rejected_with_guideline():
    with pytest.raises(ConfigError) as err:
        build_config({"problem": "fa", "delta_crit": 1.0, "delta_maxU": 1.6})
    assert any("should always be greater than" in v for v in err.value.violations)


def test_every_violation_is_listed():
    with pytest.raises(ConfigError) as err:
        build_config({"problem": "fa", "c_min": 2, "h": -1, "bogus": 1, "deflation_period": 0,
                      "mode": "fast"})
    text = " | ".join(err.value.violations)
    for needle in ("bogus", "c_min", "h_min <= h", "deflation period", "mode"):
        assert needle in text
    assert len(err.value.violations) >= 5


def test_missing_or_unknown_problem():
    with pytest.raises(ConfigError, match="problem"):
        build_config({"lambda0": 1.0})
    with pytest.raises(ConfigError, match="unknown id"):
        build_config({"problem": "fz"})


def test_type_errors():
    with pytest.raises(ConfigError, match="integer"):
        build_config({"problem": "fa", "k_max": 2.5})
    with pytest.raises(ConfigError, match="number"):
        build_config({"problem": "fa", "h": "big"})
    with pytest.raises(ConfigError, match="only applies"):
        build_config({"problem": "fa", "gamma": 3.0})


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    with pytest.raises(ConfigError):
        build_config(["problem", "fa"])


def test_overrides_and_seed_env(monkeypatch):
    cfg = build_config({"problem": "bratu"}, {"mesh_elems": 10, "gamma": 50.0, "c_min": 0.9})
    assert cfg.fem == {"mesh_elems": 10, "gamma": 50.0} and cfg.safeguards.c_min == 0.9
    monkeypatch.setenv("PATHTRACE_SEED", "77")
    assert build_config({"problem": "fa"}).seed == 77
    monkeypatch.setenv("PATHTRACE_SEED", "x")
    with pytest.raises(ConfigError, match="PATHTRACE_SEED"):
        build_config({"problem": "fa"})


def test_resolved_document_round_trips():
    cfg = build_config({"problem": "manufactured", "zeta": 10.0})
    again = build_config(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_every_problem_has_a_preset():
    assert set(PRESETS) == set(problem_ids())


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_committed_configs_are_valid(path):
    doc = json.loads(path.read_text())
    assert set(doc) <= KNOWN_KEYS
    cfg = load_config(path)
    assert cfg.mode == path.stem.rsplit("_", 1)[1]
