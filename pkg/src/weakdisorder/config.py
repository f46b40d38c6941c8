"""JSON experiment descriptions.

Schema (all sections optional except ``perturbation`` and ``disorder``)::

    {
      "operator": {"m": 1, "cell_length": 1.0, "ellipticity": 1e-9,
                   "coefficients": [{"alpha": 1, "beta": 1, "terms": [[0, 1.0, 0.0]]}]},
      "perturbation": {"t_max": 1.0,
                       "L1": {"type": "multiplication", "terms": [[1, 1.0, 0.0]]},
                       "L2": {"type": "kernel", "terms": [[1, 1, 0.5, 0.0]]},
                       "L3a": {"type": "differential", "coefficients": [...]},
                       "L3b": null},
      "disorder": {"s_minus": -1, "s_plus": 1, "support": [-1, 1], "weights": [0.5, 0.5],
                   "alternative": "signed"},
      "discretization": {"scheme": "fourier", "N": 256, "fd_order": 2,
                         "hat_N": 128, "hat_order": 4,
                         "supercell_scheme": "sem", "supercell_N": 32, "sem_degree": 8},
      "sweeps": {"theta_points": 64, "n_bands": 4, "eps_list": [0.05, 0.1],
                 "s_grid": 33, "max_period": 2, "momenta_per_cell": 16,
                 "samples": 0, "sample_period": 4, "inclusion_cap": 100.0},
      "seed": 0,
      "output_dir": "out"
    }

Fourier terms ``[k, a, b]`` mean ``a cos(2 pi k x / L) + b sin(2 pi k x / L)``;
kernel terms ``[p, q, re, im]`` mean ``(re + i im) exp(2 pi i (p x - q y) / L)``.
When ``operator`` is omitted the free operator ``-d^2/dx^2`` is used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .disorder import DisorderSpec
from .errors import ConfigError, ParseError, ValidationError
from .grid import SCHEME_ALIASES, CellGeometry, Discretization, PeriodicFunction, build_grid
from .operators import (
    DifferentialTerm,
    IntegralKernel,
    Multiplication,
    PerturbationFamily,
    PeriodicOperatorSpec,
)


@dataclass(frozen=True)
class DiscretizationConfig:
    scheme: str = "fourier"
    N: int = 256
    fd_order: int = 2
    hat_N: int = 128
    hat_order: int = 4
    supercell_scheme: str = "sem"
    supercell_N: int = 32
    sem_degree: int = 8


@dataclass(frozen=True)
class SweepConfig:
    theta_points: int = 64
    n_bands: int = 4
    eps_list: tuple[float, ...] = (0.0125, 0.025, 0.05, 0.1, 0.2)
    s_grid: int = 33
    max_period: int = 2
    momenta_per_cell: int = 16
    samples: int = 0
    sample_period: int = 4
    inclusion_cap: float = 100.0


@dataclass(frozen=True)
class ExperimentConfig:
    operator: PeriodicOperatorSpec
    family: PerturbationFamily
    disorder: DisorderSpec
    discretization: DiscretizationConfig = field(default_factory=DiscretizationConfig)
    sweeps: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 0
    output_dir: str = "out"
    alternative: Optional[str] = None

    @property
    def geometry(self) -> CellGeometry:
        return self.operator.geometry

    def grid(self, N: Optional[int] = None) -> Discretization:
        d = self.discretization
        return build_grid(self.geometry, N or d.N, d.scheme, d.fd_order)

    def supercell_grid(self, refine: int = 1) -> Discretization:
        """Per-cell grid for supercells; spectral elements fall back to ``grid`` when ``m = 2``."""
        d = self.discretization
        scheme = SCHEME_ALIASES.get(d.supercell_scheme, d.supercell_scheme)
        if scheme == "sem" and self.operator.order > 1:
            return self.grid(d.N * refine)
        return build_grid(self.geometry, d.supercell_N * refine, scheme, d.fd_order, d.sem_degree)


# ---------------------------------------------------------------------------
# parsing


def _terms(raw, where: str, problems: list) -> Optional[PeriodicFunction]:
    try:
        return PeriodicFunction(tuple(tuple(t) for t in raw))
    except (TypeError, ValueError) as exc:
        problems.append(f"{where}: Fourier terms must be [k, a, b] triples ({exc})")
    except ConfigError as exc:
        problems.append(f"{where}: {exc}")
    return None


def _coefficients(raw, where: str, problems: list) -> dict:
    out = {}
    if not isinstance(raw, list):
        problems.append(f"{where}: coefficients must be a list")
        return out
    for i, c in enumerate(raw):
        try:
            key = (int(c["alpha"]), int(c["beta"]))
        except (KeyError, TypeError, ValueError):
            problems.append(f"{where}[{i}]: needs integer 'alpha' and 'beta'")
            continue
        f = _terms(c.get("terms", []), f"{where}[{i}].terms", problems)
        if f is not None:
            out[key] = f
    return out


def _perturbation(raw, where: str, problems: list):
    if raw is None:
        return None
    if not isinstance(raw, dict) or "type" not in raw:
        problems.append(f"{where}: expected an object with a 'type' field")
        return None
    kind = raw["type"]
    if kind == "multiplication":
        f = _terms(raw.get("terms", []), f"{where}.terms", problems)
        return None if f is None else Multiplication(f)
    if kind == "kernel":
        try:
            terms = tuple((int(p), int(q), complex(re, im)) for p, q, re, im in raw.get("terms", []))
        except (TypeError, ValueError):
            problems.append(f"{where}.terms: kernel terms must be [p, q, re, im]")
            return None
        return IntegralKernel(terms)
    if kind == "differential":
        coeffs = _coefficients(raw.get("coefficients", []), f"{where}.coefficients", problems)
        try:
            return DifferentialTerm(coeffs)
        except ConfigError as exc:
            problems.append(f"{where}: {exc}")
            return None
    problems.append(f"{where}.type: unknown perturbation type {kind!r}")
    return None


def _section(data: dict, name: str, cls, problems: list):
    raw = data.get(name, {}) or {}
    if not isinstance(raw, dict):
        problems.append(f"{name}: expected an object")
        return cls()
    known = set(cls.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        problems.append(f"{name}: unknown fields {sorted(unknown)}")
    kwargs = {k: v for k, v in raw.items() if k in known}
    if "eps_list" in kwargs:
        kwargs["eps_list"] = tuple(kwargs["eps_list"])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        problems.append(f"{name}: {exc}")
        return cls()


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    """Build and validate a config; every violation is collected before raising."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ValidationError("the configuration must be a JSON object")
    unknown = set(data) - {"operator", "perturbation", "disorder", "discretization", "sweeps", "seed", "output_dir"}
    if unknown:
        problems.append(f"unknown top-level fields {sorted(unknown)}")

    # operator
    op = None
    raw_op = data.get("operator") or {}
    try:
        m = int(raw_op.get("m", 1))
        L = float(raw_op.get("cell_length", 1.0))
        coeffs = _coefficients(
            raw_op.get("coefficients", [{"alpha": m, "beta": m, "terms": [[0, 1.0, 0.0]]}]), "operator.coefficients", problems
        )
        op = PeriodicOperatorSpec(m, coeffs, CellGeometry(L), float(raw_op.get("ellipticity", 1e-9)))
    except ConfigError as exc:
        problems.extend(getattr(exc, "violations", [str(exc)]))
    except Exception as exc:  # assumption failures while building the operator are config problems here
        problems.append(f"operator: {exc}")

    # perturbation
    raw_p = data.get("perturbation")
    fam = None
    if not isinstance(raw_p, dict):
        problems.append("perturbation: required object is missing")
    else:
        parts = {name: _perturbation(raw_p.get(name), f"perturbation.{name}", problems) for name in ("L1", "L2", "L3a", "L3b")}
        try:
            fam = PerturbationFamily(**parts, t_max=float(raw_p.get("t_max", 1.0)))
        except ConfigError as exc:
            problems.extend(exc.violations if hasattr(exc, "violations") else [str(exc)])

    # disorder
    raw_d = data.get("disorder")
    disorder = None
    alternative = None
    if not isinstance(raw_d, dict):
        problems.append("disorder: required object is missing")
    else:
        try:
            disorder = DisorderSpec(
                float(raw_d["s_minus"]),
                float(raw_d["s_plus"]),
                tuple(raw_d.get("support", ())),
                tuple(raw_d.get("weights", ())),
            )
        except KeyError as exc:
            problems.append(f"disorder: missing field {exc}")
        except ValidationError as exc:
            problems.extend(f"disorder: {v}" for v in exc.violations)
        alternative = raw_d.get("alternative")
        if disorder is not None and alternative is not None and alternative != disorder.alternative:
            problems.append(f"disorder.alternative: {alternative!r} does not match the endpoints ({disorder.alternative!r})")

    disc = _section(data, "discretization", DiscretizationConfig, problems)
    sweeps = _section(data, "sweeps", SweepConfig, problems)

    # cross-field checks
    scheme = SCHEME_ALIASES.get(disc.scheme)
    if scheme is None:
        problems.append(f"discretization.scheme: unknown scheme {disc.scheme!r}")
    if disc.N < 8:
        problems.append("discretization.N must be at least 8")
    if scheme == "fourier" and disc.N % 2:
        problems.append("discretization.N must be even for the fourier scheme")
    if scheme == "sem" and op is not None and op.order > 1:
        problems.append("discretization.scheme 'sem' supports m = 1 only")
    if disc.fd_order not in (2, 4):
        problems.append("discretization.fd_order must be 2 or 4")
    if disc.hat_order not in (2, 4) or disc.hat_N < 8 or (disc.hat_order == 4 and disc.hat_N % 2):
        problems.append("discretization.hat_N/hat_order: need hat_N >= 8, hat_order in {2, 4}, even hat_N for order 4")
    if SCHEME_ALIASES.get(disc.supercell_scheme) is None:
        problems.append(f"discretization.supercell_scheme: unknown scheme {disc.supercell_scheme!r}")
    if SCHEME_ALIASES.get(disc.supercell_scheme) == "sem" and (disc.sem_degree < 2 or disc.supercell_N % disc.sem_degree):
        problems.append("discretization.supercell_N must be a multiple of sem_degree")

    eps = list(sweeps.eps_list)
    if not eps:
        problems.append("sweeps.eps_list must not be empty")
    if any((not isinstance(e, (int, float))) or e <= 0 for e in eps):
        problems.append("sweeps.eps_list entries must be strictly positive numbers")
    elif any(b <= a for a, b in zip(eps, eps[1:])):
        problems.append("sweeps.eps_list must be strictly ascending")
    if fam is not None and disorder is not None and eps and all(isinstance(e, (int, float)) for e in eps):
        worst = max(eps) * disorder.max_abs
        if worst > fam.t_max:
            problems.append(f"sweeps.eps_list: eps * max|s| = {worst:.3g} exceeds t_max = {fam.t_max}")
    if sweeps.theta_points < 8:
        problems.append("sweeps.theta_points must be at least 8")
    if sweeps.n_bands < 2:
        problems.append("sweeps.n_bands must be at least 2")
    if sweeps.s_grid < 33:
        problems.append("sweeps.s_grid must be at least 33")
    if not 1 <= sweeps.max_period <= 4:
        problems.append("sweeps.max_period must be in 1..4")
    if sweeps.momenta_per_cell < 1:
        problems.append("sweeps.momenta_per_cell must be positive")
    if sweeps.samples < 0 or sweeps.sample_period < 1:
        problems.append("sweeps.samples must be >= 0 and sweeps.sample_period >= 1")

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        problems.append("seed must be a non-negative integer")

    if problems:
        raise ValidationError(problems)
    sweeps = SweepConfig(**{**sweeps.__dict__, "eps_list": tuple(float(e) for e in eps)})
    return ExperimentConfig(op, fam, disorder, disc, sweeps, seed, str(data.get("output_dir", "out")), alternative)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)
