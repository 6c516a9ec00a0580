"""Frequency-stability certificates for power networks."""

import json as _json

from . import _core
from ._core import (
    Error,
    __version__,
    bus_transfer,
    is_positive_real,
    polynomial_roots,
    popov_transform,
    secant_factor,
)

__all__ = [
    "Error",
    "__version__",
    "analyze",
    "bus_transfer",
    "is_positive_real",
    "polynomial_roots",
    "popov_transform",
    "secant_factor",
    "simulate",
    "sweep",
    "table2",
]


def _decode(result):
    if result["report"] is not None:
        result["report"] = _json.loads(result["report"])
    return result


def analyze(scenario, out_dir=None, rho_grid=None):
    return _decode(_core.analyze(str(scenario), out_dir, rho_grid))


def simulate(scenario, out_dir=None):
    return _decode(_core.simulate(str(scenario), out_dir))


def table2(scenario, out_dir=None, rho_grid=None):
    return _decode(_core.table2(str(scenario), out_dir, rho_grid))


def sweep(scenario, parameter, bus, range, certificate=None, out_dir=None):
    return _decode(_core.sweep(str(scenario), parameter, bus, list(range), certificate, out_dir))
