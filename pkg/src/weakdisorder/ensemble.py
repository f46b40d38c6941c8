"""Spectra of periodic disorder configurations on supercells.

A ``P``-periodic configuration turns ``Op0 + sum_k L(eps xi_k)`` (cell ``k``
receiving its own copy of the perturbation) into a periodic operator with
period ``P L``; its spectrum is the union over supercell momenta of the
eigenvalues on one supercell.  The almost-sure spectrum is the closure of the
union of these spectra over all periodic configurations with values in the
support, so small-period enumeration approximates its bottom from inside.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bands import BandData, _wrap
from .disorder import Configuration, DisorderSpec, periodize
from .errors import CombinatorialBlowup, EpsOutOfRange, SupercellTooLarge, ValidationError
from .grid import CellGeometry, Discretization, QuadraticForm
from .linalg import golden_section, lowest_eigenpairs, ritz_refine
from .operators import PerturbationFamily, PeriodicOperatorSpec, _quadrature_points, differential_form, family_form

MAX_SUPERCELL_SIZE = 8192
DEFAULT_CONFIG_CAP = 4096
THREADS_ENV = "WEAKDISORDER_THREADS"


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def supercell_grid(disc: Discretization, P: int) -> Discretization:
    if P * disc.N > MAX_SUPERCELL_SIZE:
        raise SupercellTooLarge(f"P * N = {P * disc.N} exceeds {MAX_SUPERCELL_SIZE}")
    if not disc.periodic:
        raise ValidationError("supercells need a periodic cell grid")
    return Discretization(CellGeometry(P * disc.cell_length), P * disc.N, disc.scheme, disc.order, True)


def supercell_form(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    config: Configuration,
    eps: float,
    disc: Discretization,
    momentum: float,
) -> QuadraticForm:
    if eps < 0:
        raise EpsOutOfRange("eps must be non-negative")
    t = eps * np.asarray(config.values)
    if np.max(np.abs(t)) > fam.t_max:
        raise EpsOutOfRange(f"eps * max|xi| = {np.max(np.abs(t)):.3g} exceeds t_max = {fam.t_max}")
    sdisc = supercell_grid(disc, config.period)
    op.check_ellipticity(_quadrature_points(disc))
    # coefficients keep the cell period; only the grid grows
    base = differential_form(op.coefficient_fns(), sdisc, momentum, op.order)
    return base + family_form(fam, sdisc, momentum, t, cell_length=disc.cell_length)


def supercell_assemble(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    config: Configuration,
    eps: float,
    disc: Discretization,
    momentum: float,
) -> np.ndarray:
    """Hermitian ``(P N) x (P N)`` matrix of the configuration at one supercell momentum."""
    return supercell_form(op, fam, config, eps, disc, momentum).matrix()


@dataclass(frozen=True, eq=False)
class SupercellSpectrum:
    config: Configuration
    eps: float
    momentum_samples: np.ndarray
    eigenvalues: np.ndarray  # (n_momenta, n_eigs), ascending per row
    inf_value: float
    inf_momentum: float

    def below(self, cap: float) -> np.ndarray:
        ev = self.eigenvalues.ravel()
        return ev[ev < cap]


def _lowest(form: QuadraticForm, k: int) -> np.ndarray:
    _, vecs = lowest_eigenpairs(form.matrix(), k)
    return ritz_refine(form, vecs)[0]


def periodic_spectrum(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    config: Configuration,
    eps: float,
    disc: Discretization,
    n_momenta: Optional[int] = None,
    n_eigs: int = 4,
    refine: bool = True,
) -> SupercellSpectrum:
    """Lowest ``n_eigs`` eigenvalues at ``n_momenta`` supercell momenta (default ``16 P``).

    With ``refine`` the minimising momentum is polished by golden section; a
    polished value replaces the sample only if lower by more than
    ``1e-9 * max(1, |E|)``.
    """
    P = config.period
    n_momenta = 16 * P if n_momenta is None else n_momenta
    if n_momenta < 1:
        raise ValidationError("need at least one momentum sample")
    period = 2.0 * math.pi / (P * disc.cell_length)
    thetas = np.arange(n_momenta) * period / n_momenta
    ev = np.array([_lowest(supercell_form(op, fam, config, eps, disc, th), n_eigs) for th in thetas])
    j = int(np.argmin(ev[:, 0]))
    inf_value, inf_theta = float(ev[j, 0]), float(thetas[j])
    if refine and n_momenta > 1:
        spacing = period / n_momenta
        f = lambda th: float(_lowest(supercell_form(op, fam, config, eps, disc, th), 2)[0])
        x, fx = golden_section(f, inf_theta - spacing, inf_theta + spacing, 1e-10 * period)
        if fx < inf_value - 1e-9 * max(1.0, abs(inf_value)):
            inf_value, inf_theta = fx, _wrap(x, period)
    return SupercellSpectrum(config, float(eps), thetas, ev, inf_value, inf_theta)


# ---------------------------------------------------------------------------
# enumeration


def enumerate_configurations(support: Sequence[float], max_period: int, cap: int = DEFAULT_CONFIG_CAP) -> list[Configuration]:
    """All configurations up to ``max_period``, one per cyclic-shift class of primitive words."""
    if not 1 <= max_period <= 4:
        raise ValidationError(f"max_period must be in 1..4, got {max_period}")
    total = sum(len(support) ** P for P in range(1, max_period + 1))
    if total > cap:
        raise CombinatorialBlowup(f"{total} configurations exceed the cap {cap}")
    seen = set()
    out = []
    for P in range(1, max_period + 1):
        for word in itertools.product(support, repeat=P):
            c = Configuration(word).canonical()
            if c.values not in seen:
                seen.add(c.values)
                out.append(c)
    return out


@dataclass(frozen=True, eq=False)
class SigmaEstimate:
    eps: float
    inf_estimate: float
    best: Configuration
    spectra: tuple[SupercellSpectrum, ...]

    def table(self) -> list[tuple[Configuration, float]]:
        return [(s.config, s.inf_value) for s in self.spectra]


def sigma_eps_bottom(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    disorder: DisorderSpec,
    eps: float,
    max_period: int,
    disc: Discretization,
    momenta_per_cell: int = 16,
    n_eigs: int = 4,
    cap: int = DEFAULT_CONFIG_CAP,
) -> SigmaEstimate:
    """Minimum of ``inf spec`` over all periodic configurations with period ``<= max_period``.

    Every enumerated value belongs to the almost-sure spectrum, so the result
    approximates its bottom from above and can only decrease as
    ``max_period`` grows.  Only the support of the distribution is used.
    """
    configs = enumerate_configurations(disorder.support, max_period, cap)

    def work(c):
        return periodic_spectrum(op, fam, c, eps, disc, momenta_per_cell * c.period, n_eigs)

    workers = min(_workers(), len(configs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            spectra = list(pool.map(work, configs))
    else:
        spectra = [work(c) for c in configs]
    k = min(range(len(spectra)), key=lambda i: (spectra[i].inf_value, i))
    return SigmaEstimate(float(eps), spectra[k].inf_value, configs[k], tuple(spectra))


def periodization_diagnostic(
    op: PeriodicOperatorSpec,
    fam: PerturbationFamily,
    sample: Sequence[float],
    eps: float,
    disc: Discretization,
    N_max: int,
    momenta_per_cell: int = 16,
) -> list[tuple[int, float]]:
    """``inf spec`` of the ``2^N``-periodic continuations for ``N = 1..N_max``."""
    out = []
    for N in range(1, N_max + 1):
        c = periodize(sample, N)
        out.append((N, periodic_spectrum(op, fam, c, eps, disc, momenta_per_cell * c.period).inf_value))
    return out


# ---------------------------------------------------------------------------
# resolvent inclusion


def distance_to_bands(lam: np.ndarray, intervals: Sequence[tuple[float, float]]) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    d = np.full(lam.shape, np.inf)
    for lo, hi in intervals:
        d = np.minimum(d, np.maximum(0.0, np.maximum(lo - lam, lam - hi)))
    return d


@dataclass(frozen=True)
class InclusionReport:
    eps: float
    n_eigenvalues: int
    max_distance: float
    empirical_C: float


def check_inclusion(spectra: Sequence[SupercellSpectrum], band: BandData, eps: float, cap: float = 100.0) -> InclusionReport:
    """``max dist(lambda, spec Op0) / (eps (|lambda| + 1))`` over eigenvalues below ``cap``."""
    intervals = band.band_intervals()
    top = intervals[-1][1]
    if cap > top:
        raise ValidationError(f"band data only reaches {top:.6g}; lower the cap {cap} or sweep more bands")
    lam = np.concatenate([s.below(cap) for s in spectra]) if spectra else np.array([])
    if lam.size == 0 or eps == 0:
        return InclusionReport(float(eps), int(lam.size), 0.0, 0.0)
    d = distance_to_bands(lam, intervals)
    ratio = d / (eps * (np.abs(lam) + 1.0))
    return InclusionReport(float(eps), int(lam.size), float(d.max()), float(ratio.max()))


def inclusion_stability(reports: Sequence[InclusionReport]) -> float:
    """Largest ratio of empirical constants between consecutive halvings (1 if all zero)."""
    r = sorted(reports, key=lambda x: x.eps)
    worst = 1.0
    for a, b in zip(r, r[1:]):
        if a.empirical_C == 0 and b.empirical_C == 0:
            continue
        if a.empirical_C == 0 or b.empirical_C == 0:
            return math.inf
        worst = max(worst, a.empirical_C / b.empirical_C, b.empirical_C / a.empirical_C)
    return worst
