"""Unitaries on the discretized boundary space.

A boundary unitary ``U`` acts on L2-normalized trace coordinates: if ``phi``
holds node values of a trace and ``w`` the boundary quadrature weights, ``U``
acts on ``sqrt(w) * phi``. In these coordinates the discrete boundary inner
product is the Euclidean one, so unitarity is the plain ``U U^H = I``.

The module covers spectral resolution with snapping of phases near pi, the
gap test at -1, the partial Cayley transform and a discrete H^{1/2}
operator norm used as the admissibility surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, NoGap, NotUnitary

SNAP_TOL = 1e-10
DELTA_MIN = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def default_unitarity_tol(dim: int) -> float:
    return 1e-12 * max(dim, 1)


@dataclass(frozen=True)
class BoundaryUnitary:
    """A decomposed boundary unitary.

    ``eigenphases`` are ascending in (-pi, pi]; phases that were within
    ``snap_tol`` of pi are stored as exactly pi.
    """

    matrix: np.ndarray
    eigenphases: np.ndarray
    eigenvectors: np.ndarray
    snap_tol: float = SNAP_TOL

    def __post_init__(self):
        for name in ("matrix", "eigenphases", "eigenvectors"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def minus_one_mask(self) -> np.ndarray:
        return self.eigenphases == np.pi

    def unitarity_defect(self) -> float:
        return float(np.linalg.norm(self.matrix @ self.matrix.conj().T - np.eye(self.dim), 2))

    def reconstruction_error(self) -> float:
        V = self.eigenvectors
        R = (V * np.exp(1j * self.eigenphases)) @ V.conj().T
        return float(np.linalg.norm(R - self.matrix, 2))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.matrix.imag) <= tol))

    def to_json(self) -> dict:
        return matrix_to_json(self.matrix)


@dataclass(frozen=True)
class GapReport:
    has_minus_one: bool
    gap_width: float
    passes: bool

    def to_json(self) -> dict:
        return {"has_minus_one": self.has_minus_one, "gap_width": self.gap_width, "passes": self.passes}


@dataclass(frozen=True)
class PartialCayley:
    """Partial Cayley transform ``A_U = i P (U - I)(U + I)^{-1}`` of a gapped unitary."""

    matrix: np.ndarray
    projector_P: np.ndarray
    norm: float
    w_basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("matrix", "projector_P", "w_basis"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def projector_perp(self) -> np.ndarray:
        return np.eye(self.dim) - self.projector_P

    def restricted(self) -> np.ndarray:
        """A_U as a map on W, in the orthonormal eigenbasis of W."""
        Vw = self.w_basis
        return Vw.conj().T @ self.matrix @ Vw


def decompose(U, unitarity_tol: float | None = None, snap_tol: float = SNAP_TOL) -> BoundaryUnitary:
    """Spectral resolution of a unitary matrix.

    Uses the complex Schur form, which is diagonal for normal matrices and
    gives an orthonormal eigenbasis even for degenerate phases.

    Raises:
        NotUnitary: if ``||U U^H - I||_2`` exceeds ``unitarity_tol``.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {U.shape}")
    n = U.shape[0]
    tol = default_unitarity_tol(n) if unitarity_tol is None else unitarity_tol
    deviation = float(np.linalg.norm(U @ U.conj().T - np.eye(n), 2))
    if deviation > tol:
        raise NotUnitary(deviation, tol)

    T, Z = sla.schur(U, output="complex")
    phases = np.angle(np.diag(T))
    phases[np.abs(np.abs(phases) - np.pi) <= snap_tol] = np.pi
    order = np.argsort(phases, kind="stable")
    return BoundaryUnitary(matrix=U, eigenphases=phases[order], eigenvectors=Z[:, order], snap_tol=snap_tol)


def as_unitary(U) -> BoundaryUnitary:
    return U if isinstance(U, BoundaryUnitary) else decompose(U)


def gap_report(U: BoundaryUnitary, delta_min: float = DELTA_MIN) -> GapReport:
    U = as_unitary(U)
    at_pi = U.minus_one_mask
    rest = U.eigenphases[~at_pi]
    # circle distance to pi of a phase in (-pi, pi]
    gap = float(np.min(np.pi - np.abs(rest))) if rest.size else float(np.pi)
    return GapReport(has_minus_one=bool(at_pi.any()), gap_width=gap, passes=gap >= delta_min)


def partial_cayley(U: BoundaryUnitary, delta_min: float = DELTA_MIN) -> PartialCayley:
    """Partial Cayley transform of ``U``.

    Raises:
        NoGap: if ``U`` fails :func:`gap_report` at ``delta_min``.
    """
    U = as_unitary(U)
    report = gap_report(U, delta_min)
    if not report.passes:
        raise NoGap(
            f"eigenphase at distance {report.gap_width:.3e} from pi (delta_min={delta_min:.1e}); "
            "the extension is outside the admissible family"
        )
    keep = ~U.minus_one_mask
    Vw = U.eigenvectors[:, keep]
    values = -np.tan(U.eigenphases[keep] / 2)
    A = (Vw * values) @ Vw.conj().T
    A = 0.5 * (A + A.conj().T)
    P = Vw @ Vw.conj().T
    P = 0.5 * (P + P.conj().T)
    norm = float(np.max(np.abs(values))) if values.size else 0.0
    return PartialCayley(matrix=A, projector_P=P, norm=norm, w_basis=Vw)


# --- discrete H^{1/2} norm --------------------------------------------------


@dataclass(frozen=True)
class BoundaryMesh:
    """Graph structure of the discretized boundary.

    Attributes:
        weights: boundary quadrature weight per degree of freedom.
        segments: ``(i, j, length)`` boundary edges between degrees of freedom.
        elements: degree-of-freedom index lists (one per triangulation element).
    """

    weights: np.ndarray
    segments: tuple
    elements: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.weights)

    @classmethod
    def circle(cls, n: int, length: float = 2 * np.pi, n_elements: int = 1) -> "BoundaryMesh":
        h = length / n
        segs = tuple((k, (k + 1) % n, h) for k in range(n))
        bounds = np.linspace(0, n, n_elements + 1).round().astype(int)
        elements = tuple(tuple(range(bounds[e], bounds[e + 1])) for e in range(n_elements))
        return cls(weights=np.full(n, h), segments=segs, elements=elements)

    def laplacian(self, per_element: bool = False) -> np.ndarray:
        """Boundary Laplacian in L2-normalized coordinates, ``W^{-1/2} K_b W^{-1/2}``.

        With ``per_element`` only segments inside one element are kept: a
        path-graph Laplacian per open element.
        """
        n = self.dim
        owner = np.full(n, -1)
        for e, nodes in enumerate(self.elements):
            owner[list(nodes)] = e
        K = np.zeros((n, n))
        for i, j, length in self.segments:
            if per_element and (owner[i] != owner[j] or owner[i] < 0):
                continue
            w = 1.0 / length
            K[i, i] += w
            K[j, j] += w
            K[i, j] -= w
            K[j, i] -= w
        s = 1.0 / np.sqrt(self.weights)
        return s[:, None] * K * s[None, :]


def admissibility_norm(A, boundary_mesh: BoundaryMesh, per_element: bool = False) -> float:
    """Operator norm of ``A`` in the discrete H^{1/2} boundary norm.

    ``||phi||_{1/2}^2 = phi^H (I + L_b)^{1/2} phi``, so the operator norm is
    ``||S A S^{-1}||_2`` with ``S = (I + L_b)^{1/4}``.
    """
    A = A.matrix if isinstance(A, PartialCayley) else np.asarray(A)
    if A.shape != (boundary_mesh.dim, boundary_mesh.dim):
        raise DimensionMismatch(f"operator of shape {A.shape} on a boundary with {boundary_mesh.dim} dofs")
    L = boundary_mesh.laplacian(per_element=per_element)
    evals, V = np.linalg.eigh(L)
    evals = np.clip(evals, 0.0, None)
    S = (V * (1.0 + evals) ** 0.25) @ V.T
    S_inv = (V * (1.0 + evals) ** -0.25) @ V.T
    return float(np.linalg.norm(S @ A @ S_inv, 2))


# --- random unitaries --------------------------------------------------------


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_phases(
    rng: np.random.Generator,
    dim: int,
    gap: float = 0.1,
    max_cayley_norm: float | None = None,
    n_minus_one: int = 0,
) -> np.ndarray:
    """Phases in (-pi, pi] with ``n_minus_one`` entries at pi and the rest at least ``gap`` from pi.

    ``max_cayley_norm`` caps ``|tan(phase/2)|``.
    """
    limit = np.pi - gap
    if max_cayley_norm is not None:
        limit = min(limit, 2 * np.arctan(max_cayley_norm))
    phases = rng.uniform(-limit, limit, dim)
    phases[:n_minus_one] = np.pi
    return phases


def random_unitary(rng: np.random.Generator, dim: int, phases: Sequence[float] | None = None) -> np.ndarray:
    """``Q diag(e^{i phases}) Q^H`` with Haar-distributed ``Q``."""
    Q = haar_unitary(rng, dim)
    if phases is None:
        return Q
    return (Q * np.exp(1j * np.asarray(phases))) @ Q.conj().T


# --- serialization -----------------------------------------------------------


def matrix_to_json(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return {"dim": int(M.shape[0]), "re": M.real.ravel().tolist(), "im": M.imag.ravel().tolist()}


def matrix_from_json(doc: dict) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; nested row lists are accepted too."""
    n = int(doc["dim"])
    re = np.asarray(doc["re"], dtype=float).reshape(n, n)
    im = np.asarray(doc.get("im", np.zeros(n * n)), dtype=float).reshape(n, n)
    return re + 1j * im
