from __future__ import annotations

import json

import pytest

from odp_cba.config import (
    DEFAULT_CONFIG,
    ParseError,
    SchemaViolation,
    UnknownKey,
    default_config_path,
    load_config,
    parse_config,
)


def test_shipped_default_loads():
    cfg = load_config()
    assert cfg.mode == "fixture"
    assert json.loads(default_config_path().read_text()) == DEFAULT_CONFIG


def test_zero_trials_rejected():
    with pytest.raises(SchemaViolation):
        parse_config({"montecarlo": {"n_trials": 0}})


def test_missing_rate_defaults():
    cfg = parse_config({"discount": {"base_year": 2025}})
    assert cfg["discount"]["rate"] == 0.04


def test_unknown_key_rejected():
    with pytest.raises(UnknownKey):
        parse_config({"montecarlo": {"trials": 10}})
    with pytest.raises(UnknownKey):
        parse_config({"colour": "blue"})


def test_parse_error_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "mode": "fixture",\n  "discount": {"rate": }\n}\n')
    with pytest.raises(ParseError) as exc:
        load_config(p)
    assert exc.value.line == 3


def test_mode_enum():
    with pytest.raises(SchemaViolation):
        parse_config({"mode": "both"})


def test_relative_paths_anchor_at_config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"fixtures": "pack"}))
    assert load_config(p).path("fixtures") == tmp_path / "pack"


def test_override_is_revalidated():
    cfg = load_config()
    assert cfg.override(**{"montecarlo.n_trials": 10})["montecarlo"]["n_trials"] == 10
    with pytest.raises(SchemaViolation):
        cfg.override(**{"discount.rate": 0.9})
