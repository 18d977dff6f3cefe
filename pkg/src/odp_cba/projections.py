"""Fleet and RES capacity trajectories, plus the growth-driver indices used
to carry base-year benefit values forward in time.

Fleet stocks grow multiplicatively (CAGR); RES capacity grows additively
(MW per year). Any generated series can be replaced cell-for-cell by a
fixture table.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import nnls

from .model import (
    AssumptionModel,
    CagrOutOfRange,
    CbaError,
    NegativeStock,
    TimeAxis,
    YearSeries,
)

__all__ = [
    "ZeroBaseStock",
    "ProjectionSet",
    "DriverIndex",
    "DRIVER_KINDS",
    "project_stock",
    "project_res",
    "generate_projections",
    "build_driver",
    "fit_driver_weights",
]

DRIVER_KINDS = ("fleet", "res", "composite", "flat")


class ZeroBaseStock(CbaError):
    pass


def project_stock(stock_0: float, cagr: float, axis: TimeAxis) -> YearSeries:
    """``stock_0 * (1 + cagr) ** (year - first_year)`` for every axis year."""
    if stock_0 < 0:
        raise NegativeStock("?", "stock_0", f"{stock_0} < 0")
    if not -1.0 < cagr < 1.0:
        raise CagrOutOfRange("?", "cagr", f"{cagr} not in (-1, 1)")
    return YearSeries(axis, tuple(stock_0 * (1.0 + cagr) ** k for k in range(len(axis))))


def project_res(capacity_0: float, addition_mw: float, axis: TimeAxis) -> YearSeries:
    """Installed capacity in GW, growing by ``addition_mw / 1000`` each year."""
    if capacity_0 < 0:
        raise NegativeStock("?", "capacity_0", f"{capacity_0} < 0")
    step = addition_mw / 1000.0
    return YearSeries(axis, tuple(capacity_0 + step * k for k in range(len(axis))))


@dataclass(frozen=True)
class ProjectionSet:
    """EV/ET stock (thousands) and RES capacity (GW) per country."""

    axis: TimeAxis
    ev_stock: Mapping[str, YearSeries]
    et_stock: Mapping[str, YearSeries]
    res_capacity: Mapping[str, YearSeries]
    source: str = "generated"

    @property
    def countries(self) -> tuple[str, ...]:
        return tuple(self.ev_stock)

    def fleet(self, country: str) -> YearSeries:
        return self.ev_stock[country] + self.et_stock[country]

    def override(
        self,
        ev_stock: Optional[Mapping[str, YearSeries]] = None,
        et_stock: Optional[Mapping[str, YearSeries]] = None,
        res_capacity: Optional[Mapping[str, YearSeries]] = None,
        source: str = "fixture",
    ) -> "ProjectionSet":
        """Replace whole series by fixture series; countries not given keep theirs."""
        return replace(
            self,
            ev_stock={**self.ev_stock, **(ev_stock or {})},
            et_stock={**self.et_stock, **(et_stock or {})},
            res_capacity={**self.res_capacity, **(res_capacity or {})},
            source=source,
        )

    def aggregate(self) -> "ProjectionSet":
        def total(d):
            series = list(d.values())
            out = series[0]
            for s in series[1:]:
                out = out + s
            return {"ALL": out}

        return ProjectionSet(
            self.axis, total(self.ev_stock), total(self.et_stock), total(self.res_capacity), self.source
        )


def generate_projections(model: AssumptionModel) -> ProjectionSet:
    ev, et, res = {}, {}, {}
    for a in model.countries:
        cid = a.country.id
        ev[cid] = project_stock(a.ev_stock_0, a.ev_cagr, model.axis)
        et[cid] = project_stock(a.et_stock_0, a.et_cagr, model.axis)
        res[cid] = project_res(a.res_capacity_0, a.res_addition, model.axis)
    return ProjectionSet(model.axis, ev, et, res)


@dataclass(frozen=True)
class DriverIndex:
    """Growth index normalised to 1.0 in the first year.

    ``composite`` is the weighted geometric mean of the fleet index, the RES
    index and the flat index; ``weights`` holds the fleet and RES exponents,
    the flat index takes the remainder.
    """

    kind: str
    series: YearSeries
    weights: Mapping[str, float] = field(default_factory=dict)

    def __getitem__(self, year: int) -> float:
        return self.series[year]


def _normalised(s: YearSeries) -> YearSeries:
    base = s.values[0]
    if base == 0:
        raise ZeroBaseStock("first-year base is zero")
    return YearSeries(s.axis, tuple(v / base for v in s.values))


def build_driver(
    kind: str,
    proj: ProjectionSet,
    country: str,
    weights: Optional[Mapping[str, float]] = None,
) -> DriverIndex:
    if kind not in DRIVER_KINDS:
        raise CbaError(f"unknown driver kind {kind!r}")
    axis = proj.axis
    if kind == "flat":
        return DriverIndex("flat", YearSeries.constant(axis, 1.0))
    if country not in proj.ev_stock:
        raise CbaError(f"no projections for {country!r}")
    if kind == "fleet":
        return DriverIndex("fleet", _normalised(proj.fleet(country)))
    if kind == "res":
        return DriverIndex("res", _normalised(proj.res_capacity[country]))
    w = dict(weights or {})
    unknown = set(w) - {"fleet", "res"}
    if unknown:
        raise CbaError(f"composite weights only take 'fleet'/'res', got {sorted(unknown)}")
    wf, wr = float(w.get("fleet", 0.0)), float(w.get("res", 0.0))
    if wf < 0 or wr < 0 or wf + wr > 1.0 + 1e-12:
        raise CbaError(f"composite weights must be >= 0 and sum <= 1, got {w}")
    fi = _normalised(proj.fleet(country)) if wf else None
    ri = _normalised(proj.res_capacity[country]) if wr else None
    vals = []
    for k in range(len(axis)):
        v = 1.0
        if fi is not None:
            v *= fi.values[k] ** wf
        if ri is not None:
            v *= ri.values[k] ** wr
        vals.append(v)
    vals[0] = 1.0
    return DriverIndex("composite", YearSeries(axis, tuple(vals)), {"fleet": wf, "res": wr})


def fit_driver_weights(target, fleet_index, res_index) -> dict[str, float]:
    """Non-negative least squares in log space for composite exponents.

    Fits ``log(target_t / target_0) ~ a*log(fleet_t) + b*log(res_t)``; used to
    derive the shipped default driver map from fixture trajectories. If
    ``a + b`` exceeds one the pair is rescaled so the result stays a
    weighted geometric mean.
    """
    y = np.log(np.asarray(target, dtype=float) / float(target[0]))
    A = np.column_stack([np.log(np.asarray(fleet_index, float)), np.log(np.asarray(res_index, float))])
    w, _ = nnls(A, y)
    s = float(w.sum())
    if s > 1.0:
        w = w / s
    return {"fleet": float(w[0]), "res": float(w[1])}
