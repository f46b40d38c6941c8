"""Self-contained acceptance checks built on the canonical examples.

Every check returns a :class:`CheckResult`; :func:`run_all` runs them in order.
The reference values are closed-form results for the cosine examples (a
Mathieu-type problem) and exact algebraic identities.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import canonical
from .bands import analyze_bands
from .config import ExperimentConfig, config_from_dict
from .disorder import Configuration, DisorderSpec, sample_configurations
from .ensemble import (
    check_inclusion,
    inclusion_stability,
    periodic_spectrum,
    sigma_eps_bottom,
    supercell_form,
)
from .expansion import (
    second_order_check,
    expand_edge,
    orthogonality_defect,
    rayleigh_cross_check,
    upper_bound,
)
from .grid import CellGeometry, build_grid, hermiticity_defect
from .lower import BoundaryOperatorSet, build_hat_problem, compute_bj
from .operators import (
    DifferentialTerm,
    IntegralKernel,
    Multiplication,
    PerturbationFamily,
    PeriodicOperatorSpec,
    bloch_form,
    perturbation_form,
)
from .grid import PeriodicFunction
from .report import bounds_report

PI = math.pi


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(name: str, fn: Callable[[], tuple[bool, str, dict]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail, values = fn()
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0, values)


def _load(d: dict) -> ExperimentConfig:
    return config_from_dict(d)


def _edge(cfg: ExperimentConfig, N: int | None = None):
    disc = cfg.grid(N)
    band = analyze_bands(cfg.operator, disc, cfg.sweeps.theta_points, cfg.sweeps.n_bands)
    exp = expand_edge(cfg.operator, cfg.family, cfg.disorder, disc, band)
    return disc, band, exp


# ---------------------------------------------------------------------------
# 1


def free_baseline() -> CheckResult:
    def run():
        cfg = _load(canonical.free())
        disc, band, exp = _edge(cfg, 64)
        mean = cfg.family.L1.potential.mean()
        psi_err = float(np.max(np.abs(exp.psi0.values - 1.0)))
        errs = {
            "theta0": abs(exp.triple.theta0),
            "Lambda0": abs(exp.Lambda0),
            "psi0": psi_err,
            "Lambda1": abs(exp.Lambda1 - mean),
        }
        ok = all(v <= 1e-10 for v in errs.values())
        detail = ", ".join(f"|{k} err| = {v:.1e}" for k, v in errs.items())
        return ok, detail, errs

    return _timed("1 free-operator baseline", run)


# ---------------------------------------------------------------------------
# 2


def cosine_oracle() -> CheckResult:
    def run():
        cfg = _load(canonical.cosine())
        disc, band, exp = _edge(cfg, 64)
        x = disc.nodes
        psi1_ref = -np.cos(2 * PI * x) / (4 * PI**2)
        d = cfg.discretization
        hat = build_hat_problem(cfg.operator, cfg.family, exp, d.hat_N, d.hat_order)
        L2_ref = -1.0 / (8 * PI**2)
        errs = {
            "Lambda1": abs(exp.Lambda1),
            "psi1": float(np.max(np.abs(exp.psi1.values - psi1_ref))),
            "Lambda2": abs(exp.Lambda2 - L2_ref),
            "hat_Lambda2": abs(hat.hat_Lambda2 - exp.Lambda2),
            "b1": max(abs(hat.b1_left), abs(hat.b1_right)),
            "hat_gap_rel": abs(hat.hat_gap - PI**2) / PI**2,
        }
        ok = (
            errs["Lambda1"] <= 1e-10
            and errs["psi1"] <= 1e-9
            and errs["Lambda2"] <= 1e-8
            and errs["hat_Lambda2"] <= 1e-7
            and errs["b1"] <= 1e-8
            and hat.a2.holds
            and errs["hat_gap_rel"] <= 1e-4
        )
        detail = (
            f"Lambda2 = {exp.Lambda2:.12f} (err {errs['Lambda2']:.1e}), psi1 err {errs['psi1']:.1e}, "
            f"hat Lambda2 err {errs['hat_Lambda2']:.1e}, b1 = ({hat.b1_left:.1e}, {hat.b1_right:.1e}), "
            f"A2 {'holds' if hat.a2.holds else 'fails'} with gap {hat.hat_gap:.6f}"
        )
        return ok, detail, errs

    return _timed("2 cosine example coefficients", run)


# ---------------------------------------------------------------------------
# 3


def sandwich_and_order():
    """Returns the check and the report it was computed from."""
    holder = {}

    def run():
        cfg = _load(canonical.cosine())
        d = cfg.discretization
        disc, band, exp = _edge(cfg)
        hat = build_hat_problem(cfg.operator, cfg.family, exp, d.hat_N, d.hat_order)
        rep = bounds_report(
            cfg.operator,
            cfg.family,
            cfg.disorder,
            exp,
            disc,
            cfg.supercell_grid(),
            cfg.supercell_grid(refine=2),
            cfg.sweeps.eps_list,
            hat,
            max_period=2,
            s_grid=cfg.sweeps.s_grid,
            momenta_per_cell=cfg.sweeps.momenta_per_cell,
        )
        holder["report"] = rep
        fit = rep.slopes["order_expansion_error"]
        sandwich = all(r.sandwich_ok for r in rep.rows)
        ok = sandwich and fit is not None and fit.slope >= 2.7
        slope = "not fitted" if fit is None else f"{fit.slope:.3f}"
        detail = f"sandwich {'holds' if sandwich else 'FAILS'} at all eps, expansion error slope {slope}"
        return ok, detail, {"slope": None if fit is None else fit.slope}

    res = _timed("3 two-sided bounds and convergence order", run)
    return res, holder.get("report")


# ---------------------------------------------------------------------------
# 4


def exact_shift() -> CheckResult:
    def run():
        cfg = _load(canonical.constant_shift())
        disc, band, exp = _edge(cfg, 64)
        errs = {"s_star": abs(exp.s_star + 1.0), "psi1": float(np.max(np.abs(exp.psi1.values)))}
        sdisc = cfg.supercell_grid()
        for eps in (0.05, 0.1):
            errs[f"upper({eps})"] = abs(upper_bound(exp, eps) - (exp.Lambda0 - eps))
            spec = periodic_spectrum(cfg.operator, cfg.family, Configuration.constant(-1.0), eps, sdisc)
            errs[f"inf({eps})"] = abs(spec.inf_value - (exp.Lambda0 - eps))
        ok = errs["s_star"] == 0 and errs["psi1"] <= 1e-10 and all(
            v <= 1e-10 for k, v in errs.items() if k.startswith(("upper", "inf"))
        )
        detail = f"s* = {exp.s_star:g}, max|psi1| = {errs['psi1']:.1e}, " + ", ".join(
            f"{k} err {v:.1e}" for k, v in errs.items() if "(" in k
        )
        return ok, detail, errs

    return _timed("4 exact constant shift", run)


# ---------------------------------------------------------------------------
# 5


def _rich_family() -> PerturbationFamily:
    """All four components present, including a kernel and a differential term."""
    return PerturbationFamily(
        L1=Multiplication(PeriodicFunction(((1, 1.0, 0.3), (2, 0.4, 0.0)))),
        L2=IntegralKernel.cosine(1, -0.5),
        L3a=DifferentialTerm({(1, 1): PeriodicFunction(((0, 0.2, 0.0), (1, 0.1, 0.0)))}),
        L3b=Multiplication(PeriodicFunction(((0, 0.3, 0.0), (3, 0.0, 0.5)))),
        t_max=1.0,
    )


def rayleigh_identity() -> CheckResult:
    def run():
        eps_values = np.geomspace(1e-3, 0.5, 20)
        cases = {}
        cfg = _load(canonical.cosine())
        disc, band, exp = _edge(cfg, 64)
        cases["cosine"] = (cfg.operator, disc, cfg.family, exp)
        op = PeriodicOperatorSpec.schrodinger(PeriodicFunction(((1, 2.0, 0.0),)))
        fam = _rich_family()
        disc2 = build_grid(op.geometry, 64)
        band2 = analyze_bands(op, disc2)
        exp2 = expand_edge(op, fam, cfg.disorder, disc2, band2)
        cases["potential, all components"] = (op, disc2, fam, exp2)
        worst = {}
        for name, (o, dd, f, e) in cases.items():
            rel = [
                abs(upper_bound(e, eps) - rayleigh_cross_check(e, o, dd, f, eps)) / max(abs(upper_bound(e, eps)), 1e-300)
                for eps in eps_values
            ]
            worst[name] = max(rel)
        ok = all(v <= 1e-10 for v in worst.values())
        detail = ", ".join(f"{k}: max rel diff {v:.1e}" for k, v in worst.items()) + " over 20 eps"
        return ok, detail, worst

    return _timed("5 upper bound equals the Rayleigh quotient", run)


# ---------------------------------------------------------------------------
# 6


def second_order_inequality() -> CheckResult:
    def run():
        out = {}
        for name, builder in (("cosine", canonical.cosine), ("two harmonics", canonical.cosine_two_harmonics)):
            cfg = _load(builder())
            disc, band, exp = _edge(cfg, 64)
            out[name] = second_order_check(exp, band)
        eq = out["cosine"]
        strict = out["two harmonics"]
        ok = eq.holds and abs(eq.margin) <= 1e-9 and strict.holds and strict.slack > 1e-9
        detail = (
            f"cosine margin {eq.margin:.1e} (Lambda2 {eq.Lambda2:.10f} vs bound {eq.bound:.10f}); "
            f"two harmonics slack {strict.slack:.6f}"
        )
        return ok, detail, {"cosine_margin": eq.margin, "two_harmonics_slack": strict.slack}

    return _timed("6 second-order coefficient inequality", run)


# ---------------------------------------------------------------------------
# 7


def resolvent_inclusion(n_configs: int = 50, eps_values=(0.1, 0.05), cap: float = 100.0) -> CheckResult:
    def run():
        cfg = _load(canonical.cosine())
        disc = cfg.grid(64)
        band = analyze_bands(cfg.operator, disc, 64, 6)
        sdisc = cfg.supercell_grid()
        configs = sample_configurations(cfg.disorder, cfg.sweeps.sample_period, n_configs, cfg.seed)
        reports = []
        for eps in eps_values:
            spectra = [
                periodic_spectrum(cfg.operator, cfg.family, c, eps, sdisc, 8 * c.period, n_eigs=16, refine=False)
                for c in configs
            ]
            # every eigenvalue below the cap must be resolved
            top = min(float(s.eigenvalues[:, -1].min()) for s in spectra)
            if top < cap:
                return False, f"only eigenvalues up to {top:.1f} resolved; cap {cap}", {}
            reports.append(check_inclusion(spectra, band, eps, cap))
        ratio = inclusion_stability(reports)
        ok = ratio <= 2.0
        detail = ", ".join(f"eps {r.eps:g}: C = {r.empirical_C:.4e} ({r.n_eigenvalues} eigenvalues)" for r in reports)
        detail += f"; ratio {ratio:.6f}"
        return ok, detail, {"ratio": ratio, "C": [r.empirical_C for r in reports]}

    return _timed("7 spectrum stays near the unperturbed bands", run)


# ---------------------------------------------------------------------------
# 8


def _raw_defect(form) -> float:
    n = form.size
    K = sum((t.stiffness(n) for t in form.terms), np.zeros((n, n), dtype=complex))
    return hermiticity_defect(K)


def structural_invariants() -> CheckResult:
    def run():
        res = {}
        cfg = _load(canonical.cosine())
        op, fam = cfg.operator, cfg.family
        geom = CellGeometry(1.0)
        theta = 0.7
        rich = _rich_family()
        vop = PeriodicOperatorSpec.schrodinger(PeriodicFunction(((1, 2.0, 1.0), (2, 0.5, 0.0))), PeriodicFunction(((0, 1.0, 0.0), (1, 0.3, 0.0))))
        herm = []
        for scheme, order in (("fourier", 2), ("fd", 2), ("fd", 4), ("sem", 8)):
            disc = build_grid(geom, 64, scheme, order, degree=8)
            herm.append(_raw_defect(bloch_form(vop, disc, theta)))
            for _, _, p in rich.components():
                herm.append(_raw_defect(perturbation_form(p, disc, theta)))
        c = Configuration((1.0, -1.0, 1.0))
        herm.append(_raw_defect(supercell_form(vop, rich, c, 0.1, cfg.supercell_grid(), 0.3)))
        res["hermiticity"] = max(herm)

        disc, band, exp = _edge(cfg, 64)
        hat = build_hat_problem(op, fam, exp, cfg.discretization.hat_N, cfg.discretization.hat_order)
        herm_hat = _raw_defect(hat.form)
        res["hermiticity"] = max(res["hermiticity"], herm_hat)
        res["psi1_orthogonality"] = orthogonality_defect(exp)

        # boundary coefficients of a non-symmetric edge (potential makes b1 nonzero)
        vdisc = build_grid(geom, 64)
        vband = analyze_bands(vop, vdisc)
        vexp = expand_edge(vop, fam, cfg.disorder, vdisc, vband)
        bc = compute_bj(vexp.psi0, BoundaryOperatorSet(vop, vexp.triple.theta0))
        res["b1_antisymmetry"] = bc.antisymmetry_defect

        # only the support of the distribution matters
        sdisc = cfg.supercell_grid()
        d1 = DisorderSpec(-1.0, 1.0, (-1.0, 1.0), (0.5, 0.5))
        d2 = DisorderSpec(-1.0, 1.0, (-1.0, 1.0), (0.9, 0.1))
        a = sigma_eps_bottom(op, fam, d1, 0.1, 2, sdisc).inf_estimate
        b = sigma_eps_bottom(op, fam, d2, 0.1, 2, sdisc).inf_estimate
        res["support_only"] = abs(a - b)

        # enlarging max_period can only lower the estimate
        d3 = DisorderSpec(-1.0, 1.0, (-1.0, 0.0, 1.0))
        chain = [sigma_eps_bottom(op, fam, d3, 0.1, P, sdisc, momenta_per_cell=8).inf_estimate for P in (1, 2, 3)]
        res["monotone_union"] = max(0.0, max(y - x for x, y in zip(chain, chain[1:])))

        # spectral and fourth-order finite differences agree to O(N^-4)
        ref = _edge(cfg, 64)[2]
        diffs = []
        for N in (32, 64):
            d = build_grid(geom, N, "fd", 4)
            bnd = analyze_bands(op, d)
            e = expand_edge(op, fam, cfg.disorder, d, bnd)
            diffs.append((abs(e.Lambda0 - ref.Lambda0), abs(e.Lambda2 - ref.Lambda2)))
        ratio2 = diffs[0][1] / diffs[1][1]
        res["fd4_Lambda0"] = diffs[1][0]
        res["fd4_Lambda2_ratio"] = ratio2

        ok = (
            res["hermiticity"] <= 1e-12
            and res["psi1_orthogonality"] <= 1e-9
            and res["b1_antisymmetry"] <= 1e-8
            and res["support_only"] == 0.0
            and res["monotone_union"] == 0.0
            and res["fd4_Lambda0"] <= 1e-10
            and 12.0 <= ratio2 <= 20.0
        )
        detail = (
            f"hermiticity {res['hermiticity']:.1e}, psi1 orthogonality {res['psi1_orthogonality']:.1e}, "
            f"b1 = ({bc.b1_left:.4f}, {bc.b1_right:.4f}) defect {bc.antisymmetry_defect:.1e}, "
            f"support-only diff {res['support_only']:.1e}, max_period chain {['%.10f' % v for v in chain]}, "
            f"fd4 Lambda2 error ratio on doubling {ratio2:.2f}"
        )
        return ok, detail, res

    return _timed("8 structural invariants", run)


def run_all(verbose_report: bool = False) -> tuple[list[CheckResult], object]:
    results = [free_baseline(), cosine_oracle()]
    c3, report = sandwich_and_order()
    results += [c3, exact_shift(), rayleigh_identity(), second_order_inequality(), resolvent_inclusion(), structural_invariants()]
    return results, report
