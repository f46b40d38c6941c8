"""Built-in experiment descriptions with known answers.

Each function returns a plain JSON-compatible dict accepted by
:func:`weakdisorder.config.config_from_dict`.
"""

from __future__ import annotations

import copy

_COSINE = {
    "operator": {"m": 1, "coefficients": [{"alpha": 1, "beta": 1, "terms": [[0, 1.0, 0.0]]}]},
    "perturbation": {"t_max": 1.0, "L1": {"type": "multiplication", "terms": [[1, 1.0, 0.0]]}},
    "disorder": {"s_minus": -1.0, "s_plus": 1.0, "support": [-1.0, 1.0], "weights": [0.5, 0.5]},
    "discretization": {
        "scheme": "fourier",
        "N": 64,
        "hat_N": 128,
        "hat_order": 4,
        "supercell_scheme": "sem",
        "supercell_N": 32,
        "sem_degree": 8,
    },
    "sweeps": {"eps_list": [0.0125, 0.025, 0.05, 0.1, 0.2], "max_period": 2, "samples": 50, "sample_period": 4},
    "seed": 20240601,
}


def cosine() -> dict:
    """``-d^2/dx^2`` perturbed by ``eps xi_k cos(2 pi x)`` with symmetric Bernoulli couplings."""
    return copy.deepcopy(_COSINE)


def cosine_two_harmonics() -> dict:
    """As :func:`cosine` with ``L1 = cos(2 pi x) + cos(4 pi x)``."""
    d = cosine()
    d["perturbation"]["L1"]["terms"] = [[1, 1.0, 0.0], [2, 1.0, 0.0]]
    return d


def free() -> dict:
    """Free operator with a multiplier of mean one half."""
    d = cosine()
    d["perturbation"]["L1"]["terms"] = [[0, 0.5, 0.0], [1, 1.0, 0.0]]
    return d


def constant_shift() -> dict:
    """``L1 = 1``: the edge moves by exactly ``-eps``."""
    d = cosine()
    d["perturbation"]["L1"]["terms"] = [[0, 1.0, 0.0]]
    d["sweeps"]["eps_list"] = [0.05, 0.1]
    return d


def fourth_order() -> dict:
    """``d^4 - 2 pi^2 d^2`` (order two): ground band minimum at the zone edge."""
    d = cosine()
    d["operator"] = {
        "m": 2,
        "coefficients": [
            {"alpha": 2, "beta": 2, "terms": [[0, 1.0, 0.0]]},
            {"alpha": 1, "beta": 1, "terms": [[0, -19.739208802178716, 0.0]]},
        ],
    }
    d["discretization"] = {"scheme": "fourier", "N": 64}
    return d


CANONICAL = {
    "free": free,
    "cosine": cosine,
    "cosine_two_harmonics": cosine_two_harmonics,
    "constant_shift": constant_shift,
    "fourth_order": fourth_order,
}
