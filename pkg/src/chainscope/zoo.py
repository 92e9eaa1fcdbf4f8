"""Built-in systems with default run configurations."""
from __future__ import annotations

import copy
import textwrap

import tomli_w

from .config import RunConfig, parse_config

_H9 = 2.0**-9
_H7 = 2.0**-7

_SYSTEMS = {
    "identity": {
        "about": "Identity on [0,1]; every point is a fixed point and a terminal component.",
        "config": {
            "model": {"kind": "grid", "map": "identity", "mesh": 1 / 16},
            "schedule": {"epsilons": [0.25, 0.125, 0.0625], "deltas": [0.05, 0.02, 0.01],
                         "radii": [0.25, 0.125, 0.0625]},
            "analysis": {"scales": [0.25], "n_range": [1, 8], "rb_grid": [[0.25, 0.25], [0.125, 0.25]]},
        },
    },
    "rotation": {
        "about": "Half-turn rotation of the circle; an isometry, so nothing is sensitive.",
        "config": {
            "model": {"kind": "grid", "map": "rotation", "mesh": 1 / 16, "params": {"alpha": 0.5}},
            "schedule": {"epsilons": [0.25, 0.125, 0.0625], "deltas": [0.05, 0.02, 0.01],
                         "radii": [0.25, 0.125, 0.0625]},
            "analysis": {"scales": [0.25], "n_range": [1, 8], "rb_grid": [[0.25, 0.25], [0.125, 0.25]]},
        },
    },
    "doubling": {
        "about": "Angle doubling on the circle; expanding, shadowing, entropy log 2.",
        "config": {
            "model": {"kind": "grid", "map": "doubling", "mesh": _H9},
            "schedule": {"epsilons": [8 * _H9, 4 * _H9], "deltas": [2 * _H9, "proj_error"],
                         "radii": [1 / 8, 1 / 16, 1 / 32]},
            "analysis": {"scales": [0.25], "n_range": [1, 12], "rb_grid": [[0.25, 0.5], [0.125, 0.5]]},
        },
    },
    "tent": {
        "about": "Full tent map on [0,1]; expanding with entropy log 2.",
        "config": {
            "model": {"kind": "grid", "map": "tent", "mesh": _H9},
            "schedule": {"epsilons": [8 * _H9, 4 * _H9], "deltas": [2 * _H9, "proj_error"],
                         "radii": [1 / 8, 1 / 16, 1 / 32]},
            "analysis": {"scales": [0.25], "n_range": [1, 12], "rb_grid": [[0.25, 0.25], [0.125, 0.25]]},
        },
    },
    "north_south": {
        "about": "North-south map of the circle: a repelling and an attracting fixed point.",
        "config": {
            "model": {"kind": "grid", "map": "north_south", "mesh": _H7,
                      "params": {"a": 0.5, "phase": _H7 / 2}},
            "schedule": {"epsilons": [8 * _H7, 4 * _H7], "deltas": [2 * _H7, "proj_error"],
                         "radii": [1 / 8, 1 / 16, 1 / 32]},
            "analysis": {"scales": [0.25], "n_range": [1, 12], "rb_grid": [[0.25, 0.25], [0.125, 0.25]]},
        },
    },
    "full_shift": {
        "about": "Full shift on two symbols, windows of radius 4, metric sup 2^-|n| |x_n - y_n|.",
        "config": {
            "model": {"kind": "subshift", "alphabet": ["0", "1"], "forbidden": [], "window": 4},
            "schedule": {"epsilons": [0.25, 0.1], "deltas": [0.07, 1e-9],
                         "radii": [0.5, 0.25, 0.125]},
            "analysis": {"scales": [0.5], "n_range": [1, 8], "rb_grid": [[0.5, 0.5], [0.5, 0.25]]},
        },
    },
    "golden_mean": {
        "about": "Golden-mean shift (no two adjacent 1s), windows of radius 4.",
        "config": {
            "model": {"kind": "subshift", "alphabet": ["0", "1"], "forbidden": ["11"], "window": 4},
            "schedule": {"epsilons": [0.25, 0.1], "deltas": [0.07, 1e-9],
                         "radii": [0.5, 0.25, 0.125]},
            "analysis": {"scales": [0.5], "n_range": [1, 8], "rb_grid": [[0.5, 0.1], [0.25, 0.1]]},
        },
    },
    "example31": {
        "about": ("Staircase shift over {+-1, +-s_k}: |x_n| nondecreasing, each s_k followed by "
                  "k copies of -s_k, a 1 followed only by -1. Chain components X_1..X_K and "
                  "X_inf; only X_inf is terminal, and X_inf carries no entropy points although "
                  "pairs of its points are entropy pairs."),
        "config": {
            "model": {"kind": "example31", "K": 2, "N": 4, "s": [0.9, 0.99]},
            "schedule": {"epsilons": [0.5, 0.25], "deltas": [0.02, 1e-9],
                         "radii": [0.5, 0.375, 0.25]},
            "analysis": {"scales": [0.5], "n_range": [1, 10],
                         "rb_grid": [[0.5, 0.5], [0.25, 0.5], [0.5, 1.0]]},
        },
    },
}


def names() -> list:
    return list(_SYSTEMS)


def _lookup(name: str) -> dict:
    if name not in _SYSTEMS:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(_SYSTEMS)}")
    return _SYSTEMS[name]


def default_config_dict(name: str) -> dict:
    data = copy.deepcopy(_lookup(name)["config"])
    data["model"].setdefault("name", name)
    return data


def default_config(name: str) -> RunConfig:
    return parse_config(default_config_dict(name))


def describe(name: str) -> str:
    entry = _lookup(name)
    head = "\n".join(f"# {line}" for line in textwrap.wrap(entry["about"], 76))
    return f"# {name}\n{head}\n" + tomli_w.dumps(default_config_dict(name))
