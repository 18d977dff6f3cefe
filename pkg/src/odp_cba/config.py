"""Run configuration: JSON document, schema validation, defaults."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import jsonschema

from .model import CbaError

__all__ = [
    "ConfigError",
    "ParseError",
    "SchemaViolation",
    "UnknownKey",
    "RunConfig",
    "DEFAULT_CONFIG",
    "SCHEMA",
    "load_config",
    "parse_config",
    "default_config_path",
]


class ConfigError(CbaError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int, column: int):
        self.line, self.column = line, column
        super().__init__(f"line {line}, column {column}: {message}")


class SchemaViolation(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}


def _obj(props: dict, **kw) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, **kw}


_dist = _obj(
    {
        "dist": {"enum": ["normal", "uniform", "triangular", "degenerate"]},
        "mean": _num,
        "sd": {"type": "number", "minimum": 0},
        "lo": _num,
        "mode": _num,
        "hi": _num,
        "value": _num,
        "truncation_sd": {"type": "number", "exclusiveMinimum": 0},
    },
    required=["dist"],
)

SCHEMA = _obj(
    {
        "mode": {"enum": ["fixture", "formula"]},
        "assumptions": {"type": ["string", "null"]},
        "fixtures": {"type": ["string", "null"]},
        "reconcile_streams": {"type": "boolean"},
        "discount": _obj(
            {"rate": {"type": "number", "exclusiveMinimum": -0.5, "exclusiveMaximum": 0.5}, "base_year": {"type": "integer"}}
        ),
        "benefits": _obj(
            {
                "ledger": {"type": "boolean"},
                "aec_mode": {"enum": ["parametric", "kpi_delta"]},
                "roetas_mode": {"enum": ["proxy", "hourly"]},
                "params": {"type": "object"},
                "drivers": {
                    "type": "object",
                    "additionalProperties": _obj(
                        {
                            "kind": {"enum": ["fleet", "res", "composite", "flat"]},
                            "fleet": {"type": "number", "minimum": 0},
                            "res": {"type": "number", "minimum": 0},
                        },
                        required=["kind"],
                    ),
                },
            }
        ),
        "costs": _obj(
            {
                "unit_cost_targets": _obj(
                    {"ev": {"type": "number", "minimum": 0}, "et": {"type": "number", "minimum": 0}, "res_mw": {"type": "number", "minimum": 0}}
                ),
                "opex_base": {"type": "number", "minimum": 0},
                "opex_decay": {"type": ["number", "null"], "minimum": 0, "maximum": 0.2},
            }
        ),
        "scenarios": {
            "type": "array",
            "items": _obj(
                {
                    "name": {"type": "string"},
                    "benefit_multiplier": {"type": "number", "exclusiveMinimum": 0},
                    "cost_multiplier": {"type": "number", "exclusiveMinimum": 0},
                    "stream_multipliers": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
                    "discount_override": {"type": ["number", "null"]},
                },
                required=["name"],
            ),
        },
        "impact_matrix": {
            "type": ["object", "null"],
            "properties": {
                "slopes": {"type": "object", "additionalProperties": {"type": "object", "additionalProperties": _num}},
                "rate_slopes": {"type": "object", "additionalProperties": _num},
            },
            "additionalProperties": False,
        },
        "tornado": _obj(
            {
                "ranges": {
                    "type": "object",
                    "additionalProperties": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                }
            }
        ),
        "montecarlo": _obj(
            {
                "n_trials": _pos_int,
                "n_trials_country": _pos_int,
                "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "workers": _pos_int,
                "histogram_bins": _pos_int,
                "bindings": {"type": ["object", "null"], "additionalProperties": _dist},
            }
        ),
    }
)

DEFAULT_CONFIG: dict = {
    "mode": "fixture",
    "assumptions": None,
    "fixtures": None,
    "reconcile_streams": True,
    "discount": {"rate": 0.04, "base_year": 2025},
    "benefits": {"ledger": True, "aec_mode": "parametric", "roetas_mode": "proxy", "params": {}, "drivers": {}},
    "costs": {"unit_cost_targets": {"ev": 280.0, "et": 120.0, "res_mw": 71.65}, "opex_base": 37.4, "opex_decay": None},
    "scenarios": [
        {"name": "benefits -10%", "benefit_multiplier": 0.9},
        {"name": "benefits +10%", "benefit_multiplier": 1.1},
        {"name": "costs +10%", "cost_multiplier": 1.1},
        {"name": "costs -10%", "cost_multiplier": 0.9},
        {"name": "discount 3%", "discount_override": 0.03},
        {"name": "discount 5%", "discount_override": 0.05},
    ],
    "impact_matrix": None,
    "tornado": {"ranges": {}},
    "montecarlo": {
        "n_trials": 50000,
        "n_trials_country": 10000,
        "master_seed": 20250101,
        "workers": 1,
        "histogram_bins": 40,
        "bindings": None,
    },
}


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with defaults applied; ``origin`` anchors relative paths."""

    doc: Mapping[str, Any]
    origin: Optional[Path] = None

    def __getitem__(self, key):
        return self.doc[key]

    @property
    def mode(self) -> str:
        return self.doc["mode"]

    def path(self, key: str) -> Optional[Path]:
        v = self.doc.get(key)
        if v is None:
            return None
        p = Path(v)
        if not p.is_absolute() and self.origin is not None:
            p = self.origin / p
        return p

    def override(self, **kw) -> "RunConfig":
        """Copy with top-level or dotted (``montecarlo.n_trials``) overrides, re-validated."""
        doc = copy.deepcopy(dict(self.doc))
        for key, v in kw.items():
            parts = key.split(".")
            node = doc
            for p in parts[:-1]:
                node = node[p]
            node[parts[-1]] = v
        return parse_config(doc, self.origin)


def _validate(doc: Mapping) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    err = errors[0]
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator == "additionalProperties":
        raise UnknownKey(f"{where}: {err.message}")
    raise SchemaViolation(f"{where}: {err.message}")


def parse_config(doc: Mapping, origin: Optional[Path] = None) -> RunConfig:
    if not isinstance(doc, Mapping):
        raise SchemaViolation("<root>: configuration must be a JSON object")
    _validate(doc)
    merged = _merge(DEFAULT_CONFIG, doc)
    _validate(merged)
    return RunConfig(merged, origin)


def default_config_path() -> Path:
    return Path(str(resources.files("odp_cba") / "data" / "default_config.json"))


def load_config(path: Union[str, Path, None] = None) -> RunConfig:
    p = default_config_path() if path is None else Path(path)
    text = p.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return parse_config(doc, p.parent if path is not None else None)
