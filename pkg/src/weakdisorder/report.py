"""Two-sided bounds over an eps sweep, convergence-order fits and CSV output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .disorder import DisorderSpec
from .errors import InsufficientData
from .expansion import EdgeExpansion, rayleigh_cross_check, upper_bound
from .grid import Discretization
from .lower import HatCellProblem, lower_bound
from .ensemble import sigma_eps_bottom
from .operators import PerturbationFamily, PeriodicOperatorSpec

MACHINE_FLOOR = 100 * np.finfo(float).eps


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    n_used: int


def fit_slope(eps_list: Sequence[float], errors: Sequence[float], floor=MACHINE_FLOOR) -> SlopeFit:
    """Least-squares slope of ``log|error|`` against ``log eps``.

    Only points with ``|error| > floor`` enter; ``floor`` is a scalar or one
    value per point.  At least four usable points are required.
    """
    eps = np.asarray(eps_list, dtype=float)
    err = np.abs(np.asarray(errors, dtype=float))
    fl = np.broadcast_to(np.asarray(floor, dtype=float), err.shape)
    keep = (err > fl) & (eps > 0) & np.isfinite(err)
    if keep.sum() < 4:
        raise InsufficientData(f"only {int(keep.sum())} points above the precision floor; need 4")
    x, y = np.log(eps[keep]), np.log(err[keep])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(math.sqrt(res[0] / len(x))) if res.size else 0.0
    return SlopeFit(float(coef[0]), float(coef[1]), resid, int(keep.sum()))


@dataclass(frozen=True)
class BoundsRow:
    eps: float
    upper: float
    rayleigh_oracle: float
    lower: Optional[float]
    inf_estimate: float
    floor: float

    @property
    def upper_minus_inf(self) -> float:
        return self.upper - self.inf_estimate

    @property
    def inf_minus_lower(self) -> Optional[float]:
        return None if self.lower is None else self.inf_estimate - self.lower

    @property
    def sandwich_ok(self) -> bool:
        ok = self.inf_estimate <= self.upper
        if self.lower is not None:
            ok = ok and self.lower <= self.inf_estimate
        return ok


@dataclass(frozen=True)
class BoundsReport:
    rows: tuple[BoundsRow, ...]
    second_order: tuple[float, float, float]  # Lambda0, s* Lambda1, s*^2 Lambda2
    slopes: Mapping[str, Optional[SlopeFit]] = field(default_factory=dict)
    slope_notes: Mapping[str, str] = field(default_factory=dict)
    checks: Mapping[str, bool] = field(default_factory=dict)

    def expansion_error(self) -> np.ndarray:
        L0, a1, a2 = self.second_order
        return np.array([abs(r.inf_estimate - (L0 + r.eps * a1 + r.eps**2 * a2)) for r in self.rows])

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def csv_rows(self):
        err = self.expansion_error()
        for r, e in zip(self.rows, err):
            yield {
                "eps": r.eps,
                "upper": r.upper,
                "rayleigh_oracle": r.rayleigh_oracle,
                "lower": r.lower,
                "inf_estimate": r.inf_estimate,
                "upper_minus_inf": r.upper_minus_inf,
                "inf_minus_lower": r.inf_minus_lower,
                "expansion_error": e,
                "precision_floor": r.floor,
            }

    def summary(self) -> str:
        lines = ["eps  upper  lower  inf_estimate  sandwich"]
        for r in self.rows:
            lines.append(
                f"{r.eps:.6g}  {r.upper:.12e}  {r.lower if r.lower is None else format(r.lower, '.12e')}  "
                f"{r.inf_estimate:.12e}  {'ok' if r.sandwich_ok else 'FAILED'}"
            )
        for name, fit in self.slopes.items():
            if fit is None:
                lines.append(f"{name}: not fitted ({self.slope_notes.get(name, '')})")
            else:
                lines.append(f"{name}: {fit.slope:.4f} (residual {fit.residual:.2e}, {fit.n_used} points)")
        for name, ok in self.checks.items():
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}")
        return "\n".join(lines)


def _try_fit(eps, errors, floor):
    try:
        return fit_slope(eps, errors, floor), ""
    except InsufficientData as exc:
        return None, str(exc)


def bounds_report(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    disorder: DisorderSpec,
    exp: EdgeExpansion,
    disc: Discretization,
    supercell_disc: Discretization,
    supercell_disc_fine: Optional[Discretization],
    eps_list: Sequence[float],
    hat: Optional[HatCellProblem] = None,
    max_period: int = 2,
    s_grid: int = 33,
    momenta_per_cell: int = 16,
    min_order: float = 2.7,
) -> BoundsReport:
    """Upper bound, Rayleigh oracle, lower bound and enumerated ``inf`` at every eps.

    The precision floor for the slope fits is ``100 *`` the change of the
    enumerated ``inf`` between ``supercell_disc`` and ``supercell_disc_fine``,
    floored at the machine level relative to the energy.
    """
    rows = []
    for eps in sorted(eps_list):
        up = upper_bound(exp, eps)
        ray = rayleigh_cross_check(exp, op, disc, fam, eps)
        low = lower_bound(hat, fam, disorder, exp.s_star, eps, s_grid).bound_value if hat is not None else None
        inf = sigma_eps_bottom(op, fam, disorder, eps, max_period, supercell_disc, momenta_per_cell).inf_estimate
        fl = MACHINE_FLOOR * max(abs(inf), abs(exp.Lambda0))
        if supercell_disc_fine is not None:
            fine = sigma_eps_bottom(op, fam, disorder, eps, max_period, supercell_disc_fine, momenta_per_cell).inf_estimate
            fl = max(fl, 100 * abs(fine - inf))
        rows.append(BoundsRow(float(eps), up, ray, low, inf, fl))

    t = exp.s_star
    report = BoundsReport(tuple(rows), (exp.Lambda0, t * exp.Lambda1, t * t * exp.Lambda2))
    eps = [r.eps for r in rows]
    floors = [r.floor for r in rows]
    slopes, notes = {}, {}
    data = {
        "order_upper_gap": [r.upper_minus_inf for r in rows],
        "order_expansion_error": list(report.expansion_error()),
    }
    if hat is not None:
        data["order_lower_gap"] = [r.inf_minus_lower for r in rows]
    for name, errs in data.items():
        slopes[name], notes[name] = _try_fit(eps, errs, floors)
    checks = {
        "lower <= inf_estimate <= upper at every eps": all(r.sandwich_ok for r in rows),
        "upper bound equals the Rayleigh quotient (1e-10 relative)": all(
            abs(r.upper - r.rayleigh_oracle) <= 1e-10 * max(abs(r.upper), 1e-300) for r in rows
        ),
        f"expansion error order >= {min_order}": slopes["order_expansion_error"] is not None
        and slopes["order_expansion_error"].slope >= min_order,
    }
    return BoundsReport(report.rows, report.second_order, slopes, notes, checks)


# ---------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def header_line(command: str) -> str:
    return f"# weakdisorder {__version__} {command}"


def write_csv(path, rows: Iterable[Mapping], columns: Sequence[str], command: str) -> None:
    """CSV with a versioned comment header and round-trip float formatting."""
    buf = io.StringIO()
    buf.write(header_line(command) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    r = csv.DictReader(lines)
    return list(r.fieldnames or []), list(r)

