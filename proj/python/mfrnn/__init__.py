"""Mean-field signal propagation for gated recurrent networks.

Hyperparameters are passed as dicts in the same layout the CLI reads::

    {"arch": "GRU", "gates": {"f": {"sigma2": 1, "nu2": 1, "rho2": 0.1, "mu": 2}, ...}}

A path to such a JSON file works too.
"""

from __future__ import annotations

import json
import math
import os
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import _mfrnn
from ._errors import MfrnnError

__all__ = [
    "MfrnnError",
    "DEFAULT_ORDER",
    "architectures",
    "gate_labels",
    "preset_names",
    "preset",
    "fixed_point",
    "jacobian",
    "search",
    "sweep",
    "simulate",
    "mean_field",
    "spectrum",
    "cell_ensemble",
    "simulate_cells",
    "ks_distance",
    "verify",
]

DEFAULT_ORDER = _mfrnn.DEFAULT_ORDER

_NON_FINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def _decode(obj: Any) -> Any:
    if isinstance(obj, str):
        return _NON_FINITE.get(obj, obj)
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    return obj


def _loads(text: str) -> Any:
    return _decode(json.loads(text))


def _theta_text(theta: Mapping[str, Any] | str | os.PathLike) -> str:
    if isinstance(theta, Mapping):
        return json.dumps(theta)
    with open(theta, encoding="utf-8") as fh:
        return fh.read()


def _schedule(sigma_z: float | Iterable[float]) -> list[float]:
    if isinstance(sigma_z, (int, float)):
        return [float(sigma_z)]
    return [float(v) for v in sigma_z]


def architectures() -> list[str]:
    return _mfrnn.architectures()


def gate_labels(arch: str) -> list[str]:
    return _mfrnn.gate_labels(arch)


def preset_names() -> list[str]:
    return _mfrnn.preset_names()


def preset(name: str, arch: str = "", N: int = 256, input_dim: int = 0, with_meta: bool = False):
    """Theta dict of a named preset; ``with_meta`` also returns the preset metadata."""
    theta, meta = _mfrnn.preset(name, arch, N, input_dim)
    return (_loads(theta), _loads(meta)) if with_meta else _loads(theta)


def fixed_point(theta, arch: str = "", *, R: float = 1.0, sigma_z: float = 1.0, c0: float = 0.5,
                tol: float = 1e-9, order: int = DEFAULT_ORDER, n_s: int = 200, n_iters: int = 200,
                seed: int = 0) -> dict:
    """Moment and correlation fixed points with chi and the timescale xi."""
    return _loads(_mfrnn.fixed_point(_theta_text(theta), arch, R, sigma_z, c0, tol, order, n_s, n_iters, seed))


def jacobian(theta, arch: str = "", *, R: float = 1.0, sigma_z: float = 1.0, threshold: float = 1e-2,
             rule: str = "documented", tol: float = 1e-9, order: int = DEFAULT_ORDER, n_s: int = 200,
             n_iters: int = 200, seed: int = 0) -> dict:
    """Squared-singular-value moments of the state-to-state Jacobian and the isometry residuals."""
    return _loads(_mfrnn.jacobian(_theta_text(theta), arch, R, sigma_z, threshold, rule, tol, order, n_s, n_iters,
                                  seed))


def search(arch: str, *, target_xi: float | None = None, free: Sequence[str] = ("f.mu",), base=None,
           R: float = 1.0, sigma_z: float = 1.0, order: int = DEFAULT_ORDER, seed: int = 0):
    """Search for a critical Theta. Returns ``(theta, report)``."""
    base_text = "" if base is None else _theta_text(base)
    theta, meta = _mfrnn.search(arch, target_xi, list(free), base_text, R, sigma_z, order, seed)
    return _loads(theta), _loads(meta)


def sweep(theta, alphas: Iterable[float], direction: Mapping[str, Any] | None = None, arch: str = "", *,
          R: float = 1.0, sigma_z: float = 1.0, order: int = DEFAULT_ORDER, seed: int = 0,
          workers: int = 1) -> list[dict]:
    """Evaluate theta + alpha * direction; the default direction moves the forget-gate bias mean."""
    dir_text = "" if direction is None else json.dumps(direction)
    return _mfrnn.sweep(_theta_text(theta), dir_text, arch, [float(a) for a in alphas], R, sigma_z, order, seed,
                        workers)


def simulate(theta, arch: str = "", *, N: int = 256, T: int = 100, sigma_z: float | Iterable[float] = 1.0,
             R: float = 1.0, seed: int = 0, replicas: int = 1, tied: bool = False, backend: str = "projected",
             init_mean: float = 0.0, init_var: float = 0.0, workers: int = 1) -> dict[str, np.ndarray]:
    """Empirical (mu, q, c) and their standard errors for steps 0..T of a finite network pair."""
    out = _mfrnn.simulate(_theta_text(theta), arch, N, T, _schedule(sigma_z), R, seed, replicas, tied, backend,
                          init_mean, init_var, workers)
    return {k: np.asarray(v) for k, v in out.items()}


def mean_field(theta, arch: str = "", *, T: int = 100, sigma_z: float | Iterable[float] = 1.0, R: float = 1.0,
               init_mean: float = 0.0, init_var: float = 0.0, order: int = DEFAULT_ORDER, n_s: int = 200,
               n_iters: int = 200, seed: int = 0) -> dict[str, np.ndarray]:
    """Predicted (mu, q, c) for steps 0..T."""
    out = _mfrnn.mean_field(_theta_text(theta), arch, T, _schedule(sigma_z), R, init_mean, init_var, order, n_s,
                            n_iters, seed)
    return {k: np.asarray(v) for k, v in out.items()}


def spectrum(theta, arch: str = "", *, N: int = 256, R: float = 1.0, sigma_z: float = 1.0, seed: int = 0,
             burn_in: int = 100) -> np.ndarray:
    """Squared singular values (descending) of one sampled one-step Jacobian."""
    return np.asarray(_mfrnn.spectrum(_theta_text(theta), arch, N, R, sigma_z, seed, burn_in))


def cell_ensemble(theta, arch: str = "", *, R: float = 1.0, sigma_z: float = 1.0, n_s: int = 200,
                  n_iters: int = 200, order: int = DEFAULT_ORDER, seed: int = 0) -> np.ndarray:
    """Samples of the stationary LSTM cell state at the moment fixed point."""
    return np.asarray(_mfrnn.cell_ensemble(_theta_text(theta), arch, R, sigma_z, n_s, n_iters, order, seed))


def simulate_cells(theta, arch: str = "", *, N: int = 200, T: int = 200, R: float = 1.0, sigma_z: float = 1.0,
                   seed: int = 0) -> np.ndarray:
    """Cell values of one untied width-N network after T steps."""
    return np.asarray(_mfrnn.simulate_cells(_theta_text(theta), arch, N, T, R, sigma_z, seed))


def ks_distance(a: Iterable[float], b: Iterable[float]) -> float:
    return _mfrnn.ks_distance(list(map(float, a)), list(map(float, b)))


def verify(seed: int = 0) -> list[dict]:
    """Reduced-size property suite; one dict per check."""
    return _mfrnn.verify(seed)
