"""Discretization of Q_U and its constrained generalized eigenproblem.

On a mesh with stiffness ``K`` (FD Dirichlet energy), lumped mass ``M`` and
boundary weights ``w``, the form is

    Q_U(x) = x^H K x - (sqrt(w) g x)^H A_U (sqrt(w) g x),

where ``g`` is the trace, restricted to ``{x : P_perp sqrt(w) g x = 0}``.
The constraint space is eliminated with an orthonormal null-space basis
``C``; eigenpairs solve ``C^H (K + B) C y = Lambda C^H M C y``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import robin_1d
from .boundary_unitary import DELTA_MIN, BoundaryUnitary, PartialCayley, as_unitary, matrix_to_json, partial_cayley
from .errors import DimensionMismatch, SolverFailure
from .mesh import Mesh

NULL_TOL = 1e-12
SOLVER_TOL = 1e-9
DENSE_LIMIT = 3000


def unitary_fingerprint(U) -> str:
    M = U.matrix if isinstance(U, BoundaryUnitary) else np.asarray(U)
    blob = json.dumps(matrix_to_json(M), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def stiffness_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Sum over grid edges of ``w_e |u_a - u_b|^2``."""
    rows, cols, vals = [], [], []
    shape = mesh.shape
    for axis, w in enumerate(mesh.edge_weights):
        idx = np.arange(mesh.n_nodes).reshape(shape, order="F")
        a = np.take(idx, np.arange(shape[axis] - 1), axis=axis).ravel(order="F")
        b = np.take(idx, np.arange(1, shape[axis]), axis=axis).ravel(order="F")
        w = np.asarray(w).ravel(order="F")
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [w, w, -w, -w]
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(mesh.n_nodes,) * 2)
    return K.tocsr()


def mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    return sp.diags(mesh.node_density).tocsr()


def _lift_boundary(mesh: Mesh, Ab: np.ndarray) -> sp.csr_matrix:
    """Embed a boundary-dof matrix into node space, ``g^T Ab g``."""
    r, c = np.nonzero(Ab)
    nodes = mesh.boundary_map
    return sp.csr_matrix((Ab[r, c], (nodes[r], nodes[c])), shape=(mesh.n_nodes,) * 2)


def constraint_null_basis(P_perp: np.ndarray, sqrt_w: np.ndarray, tol: float = NULL_TOL) -> np.ndarray:
    """Orthonormal basis of ``{phi : P_perp diag(sqrt_w) phi = 0}`` on boundary dofs."""
    nb = sqrt_w.size
    G = P_perp * sqrt_w[None, :]
    scale = max(np.linalg.norm(G, 2), 1e-300)
    if np.linalg.norm(G) <= tol:
        return np.eye(nb)
    offdiag = G - np.diag(np.diag(G))
    if np.max(np.abs(offdiag)) <= tol * scale:
        free = np.abs(np.diag(G)) <= tol * scale
        return np.eye(nb)[:, free]
    return sla.null_space(G, rcond=tol)


@dataclass
class QuadraticFormSystem:
    mesh: Mesh
    unitary: BoundaryUnitary
    cayley: PartialCayley
    K: sp.csr_matrix
    M: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    _reduced: dict = field(default_factory=dict, repr=False)

    @property
    def constrained_dim(self) -> int:
        return self.C.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.B.data) or np.iscomplexobj(self.C.data)

    def reduced_stiffness(self) -> sp.csr_matrix:
        if "K" not in self._reduced:
            CH = self.C.conj().T.tocsr()
            self._reduced["K"] = (CH @ (self.K + self.B) @ self.C).tocsr()
        return self._reduced["K"]

    def reduced_mass(self) -> sp.csr_matrix:
        if "M" not in self._reduced:
            CH = self.C.conj().T.tocsr()
            self._reduced["M"] = (CH @ self.M @ self.C).tocsr()
        return self._reduced["M"]

    def form(self, x) -> complex:
        x = np.asarray(x)
        return complex(np.vdot(x, (self.K + self.B) @ x))


def assemble(mesh: Mesh, U, delta_min: float = DELTA_MIN) -> QuadraticFormSystem:
    """Assemble stiffness, mass, boundary coupling and constraint basis for Q_U.

    Raises:
        DimensionMismatch: ``U`` does not act on the mesh's boundary dofs.
        NoGap: ``U`` fails the gap test.
    """
    U = as_unitary(U)
    if U.dim != mesh.n_boundary:
        raise DimensionMismatch(f"unitary of dimension {U.dim} on a mesh with {mesh.n_boundary} boundary dofs")
    A = partial_cayley(U, delta_min)
    sqrt_w = np.sqrt(mesh.boundary_weights)

    Ab = -(sqrt_w[:, None] * A.matrix * sqrt_w[None, :])
    if np.max(np.abs(Ab.imag), initial=0.0) == 0.0:
        Ab = Ab.real
    B = _lift_boundary(mesh, Ab)

    Nb = constraint_null_basis(A.projector_perp, sqrt_w)
    if np.max(np.abs(Nb.imag), initial=0.0) <= 1e-15 * max(np.max(np.abs(Nb), initial=0.0), 1.0):
        Nb = np.ascontiguousarray(Nb.real)
    interior = np.flatnonzero(mesh.interior_mask)
    n_int = interior.size
    Ci = sp.csr_matrix((np.ones(n_int), (interior, np.arange(n_int))), shape=(mesh.n_nodes, n_int))
    r, c = np.nonzero(np.abs(Nb) > 0)
    Cb = sp.csr_matrix((Nb[r, c], (mesh.boundary_map[r], c)), shape=(mesh.n_nodes, Nb.shape[1]))
    C = sp.hstack([Ci, Cb]).tocsr()
    return QuadraticFormSystem(mesh=mesh, unitary=U, cayley=A, K=stiffness_matrix(mesh), M=mass_matrix(mesh), B=B, C=C)


def hermiticity_defect(matrix, reference_norm: float | None = None) -> float:
    """``||H - H^H||_F / ||ref||_F``; ``ref`` defaults to ``H`` itself."""
    H = matrix
    D = H - H.conj().T
    dn = spla.norm(D) if sp.issparse(D) else np.linalg.norm(D)
    ref = reference_norm
    if ref is None:
        ref = spla.norm(H) if sp.issparse(H) else np.linalg.norm(H)
    return float(dn / max(ref, 1e-300))


def system_hermiticity(system: QuadraticFormSystem) -> float:
    """Hermiticity defect of the constrained form, relative to ``||K + B||``."""
    return hermiticity_defect(system.reduced_stiffness(), spla.norm(system.K + system.B))


def sesquilinear_form_matrix(mesh: Mesh, C=None, B=None) -> sp.csr_matrix:
    """Unsymmetrized form ``<d x, d y> + x^H B y - <g x, normal derivative of y>_boundary``.

    This keeps the boundary term of one integration by parts instead of
    closing it with a boundary condition; on a constraint space ``C`` it is
    Hermitian only if the space is isotropic for the Lagrange form.
    """
    W = sp.diags(mesh.boundary_weights)
    Q = stiffness_matrix(mesh) - mesh.trace_operator.T @ W @ mesh.normal_derivative_operator
    if B is not None:
        Q = Q + B
    if C is not None:
        Q = C.conj().T @ Q @ C
    return sp.csr_matrix(Q)


# --- eigensolver -------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    metadata: dict

    @property
    def k(self) -> int:
        return self.eigenvalues.size


def collar_lengths(mesh: Mesh) -> tuple:
    """Collar width per axis: half the extent, so the collars of opposite sides are disjoint."""
    return tuple(L / 2 for L in mesh.lengths)


def semi_bound(mesh: Mesh, cayley_norm: float) -> tuple[float, float, float]:
    """``(c_eff, Lambda_0, bound)`` for a partial Cayley transform of norm ``cayley_norm``.

    Each axis contributes the Neumann/Robin interval bound over its collar;
    the metric distortion enters through ``c_eff`` and the final ratio.
    """
    delta = mesh.metric_distortion
    c_eff = cayley_norm / (1 - delta)
    lam0 = sum(robin_1d.lower_bound(c_eff, ell) for ell in collar_lengths(mesh))
    bound = -abs(lam0) * (1 - delta) / (1 + delta)
    return c_eff, lam0, bound


def solve(system: QuadraticFormSystem, k: int, dense_limit: int = DENSE_LIMIT, solver_tol: float = SOLVER_TOL) -> Spectrum:
    """The ``k`` smallest eigenpairs of the constrained problem.

    Eigenvectors are returned in node space and are M-orthonormal.

    Raises:
        SolverFailure: no convergence, or residuals above ``solver_tol (|Lambda| + 1) ||x||``.
    """
    n = system.constrained_dim
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    Kc = system.reduced_stiffness()
    Mc = system.reduced_mass()
    method = "dense" if n <= dense_limit else "shift-invert"
    try:
        if method == "dense":
            evals, Y = sla.eigh(Kc.toarray(), Mc.toarray(), subset_by_index=[0, k - 1])
        else:
            _, _, bound = semi_bound(system.mesh, system.cayley.norm)
            sigma = 2 * bound - 1.0
            v0 = np.ones(n, dtype=Kc.dtype)
            evals, Y = spla.eigsh(Kc, k=k, M=Mc, sigma=sigma, which="LM", v0=v0, tol=0)
            evals = np.real(evals)
            order = np.argsort(evals)
            evals, Y = evals[order], Y[:, order]
    except (spla.ArpackNoConvergence, np.linalg.LinAlgError, RuntimeError) as exc:
        raise SolverFailure(f"{method} eigensolver failed: {exc}") from exc

    X = system.C @ Y
    MX = system.M @ X
    norms = np.sqrt(np.real(np.einsum("ij,ij->j", X.conj(), MX)))
    X = X / norms
    R = system.C.conj().T @ ((system.K + system.B) @ X - (system.M @ X) * evals)
    residuals = np.linalg.norm(R, axis=0)
    limit = solver_tol * (np.abs(evals) + 1) * np.linalg.norm(X, axis=0)
    if np.any(residuals > limit):
        worst = int(np.argmax(residuals / limit))
        raise SolverFailure(f"eigenpair {worst} residual {residuals[worst]:.3e} above {limit[worst]:.3e}")

    mesh = system.mesh
    meta = {
        "kind": mesh.kind,
        "lengths": list(mesh.lengths),
        "n_cells": list(mesh.n_cells),
        "h": list(mesh.spacings),
        "metric_distortion": mesh.metric_distortion,
        "unitary_fingerprint": unitary_fingerprint(system.unitary),
        "method": method,
        "solver_tol": solver_tol,
    }
    return Spectrum(eigenvalues=np.asarray(evals, dtype=float), eigenvectors=X, residuals=residuals, metadata=meta)


# --- checks ------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    c_eff: float
    collar_lengths: tuple
    lambda0: float
    bound: float
    min_eigenvalue: float
    slack: float
    metric_distortion: float
    passes: bool
    rigorous_bound: float = 0.0
    passes_rigorous: bool = True
    norm_kind: str = "H0 (2-norm on the discrete trace space)"

    def to_json(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def verify_lower_bound(system: QuadraticFormSystem, spectrum: Spectrum, mesh: Mesh | None = None, A: PartialCayley | None = None) -> BoundReport:
    """Check the lowest eigenvalue against ``-|Lambda_0| (1 - delta)/(1 + delta)``.

    With ``delta > 0`` that constant is not a valid lower bound in general:
    a Robin end inside a cell of density ``1 - delta`` reaches ``Lambda_0``
    itself. ``rigorous_bound = -|Lambda_0|`` is reported alongside.
    """
    mesh = system.mesh if mesh is None else mesh
    A = system.cayley if A is None else A
    c_eff, lam0, bound = semi_bound(mesh, A.norm)
    slack = 10 * mesh.h**2 * abs(bound) + 1e-10
    lowest = float(spectrum.eigenvalues[0])
    return BoundReport(
        c_eff=c_eff,
        collar_lengths=collar_lengths(mesh),
        lambda0=lam0,
        bound=bound,
        min_eigenvalue=lowest,
        slack=slack,
        metric_distortion=mesh.metric_distortion,
        passes=lowest >= bound - slack,
        rigorous_bound=-abs(lam0),
        passes_rigorous=lowest >= -abs(lam0) - (10 * mesh.h**2 * abs(lam0) + 1e-10),
    )


def interior_stencil(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """``-(1/m) div_h(rho grad_h u)`` at every node (meaningful at interior nodes)."""
    m = mesh.node_density
    if mesh.dim == 1:
        (w,) = mesh.edge_weights
        flux = w * np.diff(u)
        out = np.zeros_like(u)
        out[:-1] -= flux
        out[1:] += flux
        return out / m
    wx, wy = mesh.edge_weights
    V = u.reshape(mesh.shape, order="F")
    out = np.zeros_like(V)
    fx = wx * (V[1:, :] - V[:-1, :])
    out[:-1, :] -= fx
    out[1:, :] += fx
    fy = wy * (V[:, 1:] - V[:, :-1])
    out[:, :-1] -= fy
    out[:, 1:] += fy
    return out.ravel(order="F") / m


@dataclass(frozen=True)
class ConsistencyReport:
    residuals: np.ndarray
    limits: np.ndarray
    passes: bool


def extension_consistency(spectrum: Spectrum, mesh: Mesh, solver_tol: float | None = None) -> ConsistencyReport:
    """Interior residual ``max |(-Delta_h - Lambda) u|`` for each eigenpair."""
    tol = spectrum.metadata.get("solver_tol", SOLVER_TOL) if solver_tol is None else solver_tol
    inner = mesh.interior_mask
    res, lim = [], []
    for lam, x in zip(spectrum.eigenvalues, spectrum.eigenvectors.T):
        r = interior_stencil(mesh, x) - lam * x
        res.append(float(np.max(np.abs(r[inner]))))
        lim.append(tol * (abs(lam) + 1) * float(np.linalg.norm(x)))
    res, lim = np.array(res), np.array(lim)
    return ConsistencyReport(residuals=res, limits=lim, passes=bool(np.all(res <= lim)))
