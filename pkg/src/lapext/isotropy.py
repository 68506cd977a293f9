"""The Lagrange boundary form and its maximally isotropic subspaces.

Pairs ``(phi1, phi2)`` play the roles of (trace, normal derivative). Inner
products are conjugate-linear in the first slot throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg as sla

from .boundary_unitary import BoundaryUnitary, as_unitary, decompose, matrix_from_json, matrix_to_json
from .errors import DegenerateBasis, DimensionMismatch, NotIsotropic, NotMaximal

ISOTROPY_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryPair:
    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self):
        p1 = np.asarray(self.phi1, dtype=complex).ravel()
        p2 = np.asarray(self.phi2, dtype=complex).ravel()
        if p1.shape != p2.shape or p1.size == 0:
            raise DimensionMismatch(f"pair components of lengths {p1.size} and {p2.size}")
        object.__setattr__(self, "phi1", p1)
        object.__setattr__(self, "phi2", p2)

    @property
    def n(self) -> int:
        return self.phi1.size

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.phi1, self.phi2])

    @classmethod
    def from_stacked(cls, v) -> "BoundaryPair":
        v = np.asarray(v)
        n = v.size // 2
        return cls(v[:n], v[n:])

    def norm(self) -> float:
        return float(np.linalg.norm(self.stacked()))


def _check_same(p: BoundaryPair, q: BoundaryPair):
    if p.n != q.n:
        raise DimensionMismatch(f"pairs of lengths {p.n} and {q.n}")


def sigma(p: BoundaryPair, q: BoundaryPair) -> complex:
    """Lagrange boundary form ``<p1, q2> - <p2, q1>``."""
    _check_same(p, q)
    return complex(np.vdot(p.phi1, q.phi2) - np.vdot(p.phi2, q.phi1))


def sigma_c(a: BoundaryPair, b: BoundaryPair) -> complex:
    """Diagonal form ``-i(<a+, b+> - <a-, b->)`` on Cayley-transformed pairs."""
    _check_same(a, b)
    return complex(-1j * (np.vdot(a.phi1, b.phi1) - np.vdot(a.phi2, b.phi2)))


def cayley(p: BoundaryPair) -> BoundaryPair:
    """``(phi1 + i phi2, phi1 - i phi2) / sqrt(2)``; a unitary map on pairs."""
    s = 1 / np.sqrt(2)
    return BoundaryPair(s * (p.phi1 + 1j * p.phi2), s * (p.phi1 - 1j * p.phi2))


def inverse_cayley(c: BoundaryPair) -> BoundaryPair:
    s = 1 / np.sqrt(2)
    return BoundaryPair(s * (c.phi1 + c.phi2), -1j * s * (c.phi1 - c.phi2))


@dataclass(frozen=True)
class IsotropicSubspace:
    """Subspace of pairs, stored as an orthonormal ``2n x m`` column basis ``[phi1; phi2]``."""

    n: int
    basis: np.ndarray
    source_unitary: BoundaryUnitary | None = None

    @classmethod
    def from_pairs(cls, pairs: Iterable[BoundaryPair], source_unitary=None, rank_tol: float = 1e-12):
        pairs = list(pairs)
        if not pairs:
            raise DimensionMismatch("empty basis")
        n = pairs[0].n
        for p in pairs:
            if p.n != n:
                raise DimensionMismatch("basis pairs of different lengths")
        X = np.column_stack([p.stacked() for p in pairs])
        return cls(n=n, basis=orthonormalize(X, rank_tol), source_unitary=source_unitary)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def pairs(self) -> list[BoundaryPair]:
        return [BoundaryPair.from_stacked(c) for c in self.basis.T]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def sigma_gram(self) -> np.ndarray:
        """Matrix of ``sigma(b_i, b_j)`` over the basis."""
        B1, B2 = self.basis[: self.n], self.basis[self.n :]
        return B1.conj().T @ B2 - B2.conj().T @ B1

    def isotropy_defect(self) -> float:
        # basis is orthonormal, so this is already relative to ||b_i|| ||b_j||
        return float(np.max(np.abs(self.sigma_gram())))

    def contains(self, p: BoundaryPair, tol: float = 1e-10) -> bool:
        v = p.stacked()
        r = v - self.basis @ (self.basis.conj().T @ v)
        return bool(np.linalg.norm(r) <= tol * max(np.linalg.norm(v), 1e-300))


def orthonormalize(X: np.ndarray, rank_tol: float = 1e-12) -> np.ndarray:
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    r = int(np.sum(s > rank_tol * s[0]))
    return U[:, :r]


def subspace_from_unitary(U) -> IsotropicSubspace:
    """Maximally isotropic subspace ``{((I+U)phi, -i(I-U)phi)}``."""
    U = as_unitary(U)
    M = U.matrix
    I = np.eye(U.dim)
    X = np.vstack([I + M, -1j * (I - M)])
    # X^H X = 2(I + U^H U) = 4I, so X / 2 is already orthonormal
    return IsotropicSubspace(n=U.dim, basis=X / 2, source_unitary=U)


def boundary_equation_residual(p: BoundaryPair, U) -> float:
    """``||(phi1 - i phi2) - U (phi1 + i phi2)||``."""
    M = U.matrix if isinstance(U, BoundaryUnitary) else np.asarray(U)
    if M.shape != (p.n, p.n):
        raise DimensionMismatch(f"pair of length {p.n} against a unitary of shape {M.shape}")
    return float(np.linalg.norm((p.phi1 - 1j * p.phi2) - M @ (p.phi1 + 1j * p.phi2)))


def sigma_complement(W: IsotropicSubspace, rank_tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of ``{q : sigma(q, w) = 0 for all w in W}``."""
    n = W.n
    B1, B2 = W.basis[:n], W.basis[n:]
    # sigma(q, b) = q^H J b with J b = [b2; -b1]
    JB = np.vstack([B2, -B1])
    return sla.null_space(JB.conj().T, rcond=rank_tol)


def projector_distance(A: np.ndarray, B: np.ndarray) -> float:
    """2-norm distance between the orthogonal projectors onto the column spans."""
    PA = A @ A.conj().T
    PB = B @ B.conj().T
    return float(np.linalg.norm(PA - PB, 2))


def recover_unitary(W: IsotropicSubspace, tol: float = ISOTROPY_TOL) -> BoundaryUnitary:
    """Unitary whose graph (after the Cayley transform) is ``W``.

    Raises:
        NotMaximal: ``dim W != n``.
        NotIsotropic: ``|sigma(b_i, b_j)| > tol``.
        DegenerateBasis: the ``phi+`` block is rank deficient.
    """
    if W.dim != W.n:
        raise NotMaximal(f"subspace of dimension {W.dim} in a boundary space of dimension {W.n}")
    defect = W.isotropy_defect()
    if defect > tol:
        raise NotIsotropic(f"max |sigma(b_i, b_j)| = {defect:.3e} exceeds {tol:.1e}")
    n = W.n
    B1, B2 = W.basis[:n], W.basis[n:]
    Phi_plus = (B1 + 1j * B2) / np.sqrt(2)
    Phi_minus = (B1 - 1j * B2) / np.sqrt(2)
    # orthonormal columns make the singular values of phi+ absolute: an
    # isotropic W has them all equal to 1/sqrt(2)
    s = np.linalg.svd(Phi_plus, compute_uv=False)
    if s[-1] <= 1e-10:
        raise DegenerateBasis(f"phi+ block has condition {s[0] / max(s[-1], 1e-300):.3e}")
    V = np.linalg.solve(Phi_plus.T, Phi_minus.T).T  # V Phi_plus = Phi_minus
    Uf, _ = sla.polar(V)
    return decompose(Uf)


# --- JSON --------------------------------------------------------------------


def _vec_to_json(v) -> dict:
    v = np.asarray(v, dtype=complex)
    return {"re": v.real.tolist(), "im": v.imag.tolist()}


def _vec_from_json(doc) -> np.ndarray:
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    return re + 1j * im


def pairs_to_json(pairs: Iterable[BoundaryPair]) -> list:
    return [{"phi1": _vec_to_json(p.phi1), "phi2": _vec_to_json(p.phi2)} for p in pairs]


def pairs_from_json(doc: list) -> list[BoundaryPair]:
    return [BoundaryPair(_vec_from_json(d["phi1"]), _vec_from_json(d["phi2"])) for d in doc]


def subspace_to_json(W: IsotropicSubspace) -> dict:
    doc = {"n": W.n, "basis": pairs_to_json(W.pairs)}
    if W.source_unitary is not None:
        doc["source_unitary"] = matrix_to_json(W.source_unitary.matrix)
    return doc


def subspace_from_json(doc) -> IsotropicSubspace:
    if isinstance(doc, list):
        doc = {"basis": doc}
    pairs = pairs_from_json(doc["basis"])
    src = decompose(matrix_from_json(doc["source_unitary"])) if "source_unitary" in doc else None
    W = IsotropicSubspace.from_pairs(pairs, source_unitary=src)
    if "n" in doc and int(doc["n"]) != W.n:
        raise DimensionMismatch(f"declared n={doc['n']} but pairs have length {W.n}")
    return W


def property_report(W: IsotropicSubspace, tol: float = ISOTROPY_TOL) -> dict:
    """Isotropy, maximality and unitary recovery summary for a subspace."""
    defect = W.isotropy_defect()
    report = {
        "n": W.n,
        "dim": W.dim,
        "isotropy_defect": defect,
        "isotropic": defect <= tol,
        "maximal": False,
        "recovered_unitary": None,
        "roundtrip_distance": None,
    }
    comp = sigma_complement(W)
    report["maximal"] = bool(report["isotropic"] and comp.shape[1] == W.dim and projector_distance(comp, W.basis) <= 1e-10)
    if report["isotropic"] and W.dim == W.n:
        try:
            U = recover_unitary(W, tol)
        except DegenerateBasis:
            return report
        report["recovered_unitary"] = matrix_to_json(U.matrix)
        report["roundtrip_distance"] = projector_distance(subspace_from_unitary(U).basis, W.basis)
    return report
