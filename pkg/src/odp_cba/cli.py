"""Command-line entry point (``odp-cba``).

Exit codes: 0 success, 2 validation failure, 3 fixture discrepancy beyond
tolerance (or unreadable fixtures), 4 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .benefits import STREAMS
from .config import ConfigError, load_config
from .fixtures import ChecksumMismatch, MalformedRow, MissingFixture
from .model import CbaError, ValidationError
from .pipeline import Run
from .report import OUT_ENV, csv_text, json_text, json_value, build_bundle, emit_report

log = logging.getLogger("odp_cba")

EXIT_OK, EXIT_VALIDATION, EXIT_FIXTURE, EXIT_RUNTIME = 0, 2, 3, 4
COMMANDS = ("project", "benefits", "costs", "appraise", "scenario", "tornado", "montecarlo", "report", "check-fixtures")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration JSON (default: packaged)")
    common.add_argument("--fixtures", type=Path, help="fixture directory (default: packaged)")
    common.add_argument("--seed", type=int, help="Monte Carlo master seed")
    common.add_argument("--trials", type=int, help="Monte Carlo trial count (aggregate run)")
    common.add_argument("--out", type=Path, help=f"output directory (else ${OUT_ENV}; stdout when neither is set)")
    common.add_argument("--format", choices=("csv", "json", "plotdata"), default=None)
    common.add_argument("--mode", choices=("fixture", "formula"))
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="odp-cba", description="Cost-benefit appraisal engine")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def _config(args):
    cfg = load_config(args.config)
    over = {}
    if args.mode:
        over["mode"] = args.mode
    if args.fixtures:
        over["fixtures"] = str(args.fixtures.resolve())
    if args.seed is not None:
        over["montecarlo.master_seed"] = args.seed
    if args.trials is not None:
        over["montecarlo.n_trials"] = args.trials
    return cfg.override(**over) if over else cfg


def _rows(run: Run, command: str) -> list[dict]:
    if command == "project":
        p = run.projections
        return [
            {"year": y, "country": c, "ev_stock": p.ev_stock[c][y], "et_stock": p.et_stock[c][y], "res_gw": p.res_capacity[c][y]}
            for c in p.countries
            for y in p.axis.years
        ]
    if command == "benefits":
        t = run.benefits
        return [
            {"year": y, "country": c, **{s: t.value(s, c, y) for s in STREAMS}}
            for c in t.countries
            for y in t.axis.years
        ]
    if command == "costs":
        k = run.costs
        return [
            {"year": y, "capex": k.capex[y], "opex": k.opex[y], "one_time": k.one_time_series()[y]} for y in k.axis.years
        ]
    if command == "appraise":
        r = run.result
        rows = [{"scope": "ALL", **r.headline()}]
        rows += [{"scope": c, **x.headline()} for c, x in run.country_results.items()]
        return rows
    if command == "scenario":
        return [{"name": s.name, "npv": r.npv, "bcr": r.bcr, "pv_benefits": r.pv_benefits, "pv_costs": r.pv_costs} for s, r in run.scenarios]
    if command == "tornado":
        return [
            {"parameter": e.parameter, "low": e.low, "high": e.high, "range": e.range, "npv_low": e.npv_low, "npv_high": e.npv_high}
            for e in run.tornado
        ]
    if command == "montecarlo":
        s = run.montecarlo.summary
        return [{k: v for k, v in s.as_dict().items() if not k.startswith("hist")}]
    raise AssertionError(command)


def _check(run: Run, out: Optional[Path]) -> int:
    chk = run.fixture_check
    rows = [
        {"code": f.code, "kind": f.kind, "within_tolerance": f.within_tolerance, "acknowledged": f.code in chk.acknowledged, "message": f.message}
        for f in chk.anomalies + chk.comparisons
    ]
    text = csv_text(rows)
    if out:
        (out / "fixture_check.csv").parent.mkdir(parents=True, exist_ok=True)
        (out / "fixture_check.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    for f in chk.unacknowledged:
        log.error("unacknowledged fixture finding: %s", f.message)
    return EXIT_OK if chk.ok else EXIT_FIXTURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = args.out or (Path(os.environ[OUT_ENV]) if os.environ.get(OUT_ENV) else None)
    try:
        run = Run(_config(args))
        if args.command == "check-fixtures":
            return _check(run, out)
        if args.command == "report":
            formats = (args.format,) if args.format else ("csv", "json", "plotdata")
            for path in emit_report(build_bundle(run), out, formats):
                print(path)
            return EXIT_OK
        rows = _rows(run, args.command)
        fmt = args.format or "csv"
        text = json_text([json_value("", r) for r in rows]) if fmt != "csv" else csv_text(rows)
        if out:
            out.mkdir(parents=True, exist_ok=True)
            ext = "csv" if fmt == "csv" else "json"
            (out / f"{args.command}.{ext}").write_text(text, encoding="utf-8")
        sys.stdout.write(text)
        return EXIT_OK
    except (ConfigError, ValidationError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (MissingFixture, ChecksumMismatch, MalformedRow) as exc:
        log.error("%s", exc)
        return EXIT_FIXTURE
    except CbaError as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort exit code for CI
        log.exception("unexpected failure: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
