"""Single-site distributions and periodic configurations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class DisorderSpec:
    """Distribution ``mu`` of the i.i.d. couplings through its finite support.

    Both endpoints ``s_minus < s_plus`` must be in the support.  ``weights``
    only matter for sampling; everything spectral depends on the support.
    """

    s_minus: float
    s_plus: float
    support: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        problems = []
        if not self.s_minus < self.s_plus:
            problems.append("disorder must be non-trivial: need s_minus < s_plus")
        support = tuple(sorted(float(s) for s in (self.support or (self.s_minus, self.s_plus))))
        if len(set(support)) != len(support):
            problems.append("support values must be distinct")
        if support and (support[0] != self.s_minus or support[-1] != self.s_plus):
            problems.append("support must contain both endpoints and lie inside [s_minus, s_plus]")
        if self.s_minus < self.s_plus and self.s_plus <= 0:
            problems.append("need s_minus < 0 < s_plus or 0 <= s_minus < s_plus")
        weights = tuple(float(w) for w in self.weights) or tuple(1.0 / len(support) for _ in support)
        if len(weights) != len(support):
            problems.append("weights and support differ in length")
        elif any(w <= 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            problems.append("weights must be positive and sum to 1")
        if problems:
            raise ValidationError(problems)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @property
    def alternative(self) -> str:
        return "signed" if self.s_minus < 0 < self.s_plus else "nonneg"

    @property
    def max_abs(self) -> float:
        return max(abs(self.s_minus), abs(self.s_plus))


@dataclass(frozen=True)
class Configuration:
    """A periodic coupling sequence ``xi_k = values[k mod P]``."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValidationError("a configuration needs at least one value")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def period(self) -> int:
        return len(self.values)

    @classmethod
    def constant(cls, s: float) -> "Configuration":
        return cls((s,))

    def check_support(self, disorder: DisorderSpec) -> None:
        bad = [v for v in self.values if v not in disorder.support]
        if bad:
            raise ValidationError(f"configuration values {bad} are not in the support")

    def canonical(self) -> "Configuration":
        """Lexicographically smallest rotation of the primitive period."""
        vals = self.values
        P = len(vals)
        for d in range(1, P + 1):
            if P % d == 0 and vals == vals[:d] * (P // d):
                vals = vals[:d]
                break
        rots = [vals[i:] + vals[:i] for i in range(len(vals))]
        return Configuration(min(rots))


def sample_configurations(disorder: DisorderSpec, P: int, count: int, seed: Optional[int] = None) -> list[Configuration]:
    """Reproducible i.i.d. draws of ``P``-periodic configurations from ``mu``."""
    if count < 1:
        raise ValidationError("count must be at least 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(disorder.support), size=(count, P), p=np.asarray(disorder.weights))
    sup = np.asarray(disorder.support)
    return [Configuration(tuple(sup[row])) for row in idx]


def periodize(sample: Sequence[float], N: int) -> Configuration:
    """The ``2^N``-periodic continuation of ``sample[0 : 2^N]``."""
    P = 2**N
    if len(sample) < P:
        raise ValidationError(f"need at least {P} sample values, got {len(sample)}")
    return Configuration(tuple(sample[:P]))
