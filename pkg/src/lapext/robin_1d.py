"""Reference 1D problem: -d^2/dr^2 on [0, L], Neumann at 0, Phi'(L) = c Phi(L).

Positive eigenvalues Lambda = lambda^2 solve ``tan(L lambda) = -c / lambda``;
the negative one, Lambda = -mu^2, solves ``exp(-2 L mu) = (mu - c)/(mu + c)``
and exists only for c > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import BracketFailure

MAX_ITER = 200
XTOL = 1e-14
POLE_OFFSET = 1e-9


@dataclass(frozen=True)
class RobinParams:
    c: float
    length: float = 2 * math.pi

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"interval length must be positive, got {self.length}")


@dataclass(frozen=True)
class RobinSpectrum:
    negative_eigenvalue: float | None
    positive_eigenvalues: tuple
    residuals: tuple


def positive_residual(lam: float, params: RobinParams) -> float:
    """``lambda sin(L lambda) + c cos(L lambda)``, the pole-free form of the tan equation."""
    L = params.length
    return lam * math.sin(L * lam) + params.c * math.cos(L * lam)


def negative_residual(mu: float, params: RobinParams) -> float:
    c, L = params.c, params.length
    return math.exp(-2 * L * mu) - (mu - c) / (mu + c)


def _bisect(f, a: float, b: float, branch: int) -> float:
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise BracketFailure(branch, f"f({a:.6g})={fa:.3e}, f({b:.6g})={fb:.3e}")
    return bisect(f, a, b, xtol=XTOL, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)


def solve_positive_roots(params: RobinParams, k_max: int) -> list[float]:
    """The ``k_max`` smallest nonnegative roots ``lambda`` (not squared)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    c, L = params.c, params.length
    f = lambda x: positive_residual(x, params)
    roots: list[float] = []
    if c == 0:
        roots.append(0.0)
    # branch k lives between the poles of tan(L lambda) at (k -/+ 1/2) pi / L;
    # branch 0 is (0, pi/2L) and holds a root only for c < 0
    k = 0 if c < 0 else 1
    while len(roots) < k_max:
        lo = max(k - 0.5, 0.0) * math.pi / L
        hi = (k + 0.5) * math.pi / L
        eps = POLE_OFFSET * math.pi / L
        # no pole at lambda = 0, and f(0) = c < 0 on branch 0
        roots.append(_bisect(f, lo + eps if k > 0 else 0.0, hi - eps, k))
        k += 1
    return roots


def solve_positive(params: RobinParams, k_max: int) -> list[float]:
    """The ``k_max`` smallest nonnegative eigenvalues, ascending."""
    return [lam * lam for lam in solve_positive_roots(params, k_max)]


def solve_negative_root(params: RobinParams) -> float | None:
    """The root ``mu`` in (c, inf), or None when c <= 0."""
    c = params.c
    if c <= 0:
        return None
    g = lambda m: negative_residual(m, params)
    lo = c
    hi = 2 * c + math.sqrt(c / params.length) + 1.0
    while g(hi) > 0:
        hi *= 2
    # g(c) = exp(-2Lc) >= 0 exactly in floating point
    return _bisect(g, lo, hi, -1)


def solve_negative(params: RobinParams) -> float | None:
    mu = solve_negative_root(params)
    return None if mu is None else -mu * mu


def spectrum(params: RobinParams, k_max: int) -> RobinSpectrum:
    roots = solve_positive_roots(params, k_max)
    mu = solve_negative_root(params)
    res = [abs(positive_residual(r, params)) for r in roots]
    if mu is not None:
        res = [abs(negative_residual(mu, params))] + res
    return RobinSpectrum(
        negative_eigenvalue=None if mu is None else -mu * mu,
        positive_eigenvalues=tuple(r * r for r in roots),
        residuals=tuple(res),
    )


def lower_bound(c_effective: float, length: float) -> float:
    """``min(0, Lambda_0)``: the semi-bound of the Neumann/Robin interval operator."""
    neg = solve_negative(RobinParams(c_effective, length))
    return 0.0 if neg is None else min(0.0, neg)
