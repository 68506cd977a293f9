"""Closed-form spectra for the separable gallery cases."""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import robin_1d
from .errors import ConfigError
from .gallery import parse_preset


def dirichlet(length: float, k: int) -> np.ndarray:
    return (np.arange(1, k + 1) * math.pi / length) ** 2


def neumann(length: float, k: int) -> np.ndarray:
    return (np.arange(k) * math.pi / length) ** 2


def zaremba(length: float, k: int) -> np.ndarray:
    return ((np.arange(k) + 0.5) * math.pi / length) ** 2


def bloch(length: float, alpha: float, k: int) -> np.ndarray:
    """The ``k`` smallest ``((2 pi m + alpha) / L)^2`` over integer m."""
    m = np.arange(-k - 1, k + 2)
    return np.sort(((2 * math.pi * m + alpha) / length) ** 2)[:k]


def robin_neumann(length: float, c: float, k: int) -> np.ndarray:
    """Neumann at 0, ``Phi'(L) = c Phi(L)`` at L."""
    s = robin_1d.spectrum(robin_1d.RobinParams(c, length), k)
    vals = list(s.positive_eigenvalues)
    if s.negative_eigenvalue is not None:
        vals.insert(0, s.negative_eigenvalue)
    return np.array(vals[:k])


def tensor_sum(ax: np.ndarray, ay: np.ndarray, k: int) -> np.ndarray:
    return np.sort([a + b for a, b in itertools.product(ax, ay)])[:k]


def _axis_spectrum(kind: str, length: float, k: int, **kw) -> np.ndarray:
    if kind == "D":
        return dirichlet(length, k)
    if kind == "N":
        return neumann(length, k)
    if kind == "Z":
        return zaremba(length, k)
    if kind == "P":
        return bloch(length, kw.get("alpha", 0.0), k)
    if kind == "R":
        return robin_neumann(length, kw["c"], k)
    raise ValueError(kind)


def preset_spectrum(mesh, spec: str, k: int, float_parser=float) -> np.ndarray | None:
    """Analytic lowest ``k`` eigenvalues for a preset on a mesh, or None if not separable here."""
    name, p = parse_preset(spec)
    if mesh.kind == "interval":
        L = mesh.lengths[0]
        if name == "dirichlet":
            return dirichlet(L, k)
        if name == "neumann":
            return neumann(L, k)
        if name == "periodic":
            return bloch(L, 0.0, k)
        if name == "quasiperiodic":
            return bloch(L, float_parser(p.get("alpha", "0")), k)
        if name in ("zaremba", "mixed") and "beta" not in p:
            d = p.get("dirichlet", "left")
            d = set(d if isinstance(d, list) else [d])
            return {frozenset(): neumann, frozenset({"left", "right"}): dirichlet}.get(frozenset(d), zaremba)(L, k)
        if name == "robin" and p.get("on", "right") == "right":
            c = float_parser(p["c"]) if "c" in p else -math.tan(float_parser(p.get("beta", "0")) / 2)
            return robin_neumann(L, c, k)
        return None
    Lx, Ly = mesh.lengths
    axes = {"x": "N", "y": "N"}
    extra = {"x": {}, "y": {}}
    if name == "dirichlet":
        axes = {"x": "D", "y": "D"}
    elif name == "neumann":
        pass
    elif name in ("periodic", "quasiperiodic"):
        alpha = float_parser(p.get("alpha", "0")) if name == "quasiperiodic" else 0.0
        for a in p.get("axes", "x"):
            axes[a] = "P"
            extra[a] = {"alpha": alpha}
    elif name in ("zaremba", "mixed") and "beta" not in p:
        d = p.get("dirichlet", "left")
        d = set(d if isinstance(d, list) else [d])
        for a, pair in (("x", ("left", "right")), ("y", ("bottom", "top"))):
            hit = d & set(pair)
            axes[a] = "D" if len(hit) == 2 else ("Z" if hit else "N")
        if d - {"left", "right", "bottom", "top"}:
            raise ConfigError(f"unknown edges {sorted(d)}")
    elif name == "robin" and p.get("on", "right") == "right":
        c = float_parser(p["c"]) if "c" in p else -math.tan(float_parser(p.get("beta", "0")) / 2)
        axes["x"] = "R"
        extra["x"] = {"c": c}
    else:
        return None
    sx = _axis_spectrum(axes["x"], Lx, k, **extra["x"])
    sy = _axis_spectrum(axes["y"], Ly, k, **extra["y"])
    return tensor_sum(sx, sy, k)
