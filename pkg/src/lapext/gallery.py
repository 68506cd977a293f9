"""Boundary unitaries built over a boundary triangulation.

Four structures and their blockwise combinations are provided:

* identification of two elements through transfer maps T_i (periodic),
* the same with a phase e^{i alpha} (quasi-periodic / Bloch),
* diagonal e^{i beta} (generalized Robin),
* -1 on some elements and e^{i beta} elsewhere (mixed / Zaremba).

Every constructor goes through :func:`unitary_from_conditions`, which takes
linear trace constraints and a diagonal Robin coefficient and returns
``U = Cay(A) P - P_perp`` with ``P_perp`` the projector onto the constrained
directions and ``A = P D P``.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .boundary_unitary import DELTA_MIN, BoundaryUnitary, decompose
from .errors import ConfigError, IncompatibleElements, RangeViolation
from .mesh import Mesh

JUMP_WARN = 0.5


@dataclass(frozen=True)
class TriElement:
    """One element Gamma_i with node data aligned to ``dofs`` (its closed node list).

    ``jacobian`` is |J_i| mu_i at each node, for the map g_i from the unit
    reference element.
    """

    name: str
    dofs: tuple
    owned: tuple
    s: np.ndarray
    positions: np.ndarray
    weights: np.ndarray
    jacobian: np.ndarray

    @property
    def n_ref(self) -> int:
        return len(self.dofs)


@dataclass(frozen=True)
class Triangulation:
    elements: tuple
    boundary_weights: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.boundary_weights.size

    def index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            return int(name_or_index)
        for k, e in enumerate(self.elements):
            if e.name == name_or_index:
                return k
        raise ConfigError(f"no element named {name_or_index!r}; have {[e.name for e in self.elements]}")

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "Triangulation":
        elements = []
        for e in mesh.elements:
            jac = np.full(len(e.closed), e.length if e.length > 0 else 1.0)
            elements.append(TriElement(e.name, e.closed, e.owned, e.s, e.s * e.length, e.weights, jac))
        return cls(tuple(elements), mesh.boundary_weights)

    @classmethod
    def from_maps(
        cls,
        maps: Sequence[Callable],
        n_ref: int,
        derivatives: Sequence[Callable] | None = None,
    ) -> "Triangulation":
        """Disjoint curve elements with nodes ``g_i(s_k)`` for uniform reference nodes ``s_k``.

        ``g_i`` returns an arclength coordinate along Gamma_i; the trapezoid
        rule on those physical nodes gives the element weights.
        """
        s = np.linspace(0.0, 1.0, n_ref)
        elements = []
        offset = 0
        for i, g in enumerate(maps):
            x = np.asarray(g(s), dtype=float)
            if derivatives is not None:
                jac = np.asarray(derivatives[i](s), dtype=float)
            else:
                jac = np.gradient(x, s, edge_order=2)
            if np.any(jac <= 0):
                raise ValueError(f"map {i} is not increasing")
            w = _trapezoid_weights(x)
            dofs = tuple(range(offset, offset + n_ref))
            elements.append(TriElement(f"gamma{i + 1}", dofs, dofs, s, x, w, jac))
            offset += n_ref
        weights = np.concatenate([e.weights for e in elements])
        return cls(tuple(elements), weights)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    if x.size == 1:
        return np.ones(1)
    d = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def reference_weights(n_ref: int) -> np.ndarray:
    return _trapezoid_weights(np.linspace(0.0, 1.0, n_ref)) if n_ref > 1 else np.ones(1)


@dataclass(frozen=True)
class EdgeIdentification:
    """Identify element ``source`` with ``target``: ``T_s phi = e^{i alpha} T_t phi``.

    ``reverse`` flips the target's node order so that opposite edges of a
    counterclockwise boundary line up.
    """

    source: int | str
    target: int | str
    reverse: bool = False
    phase: np.ndarray | float | None = None


def transfer_matrix(t: Triangulation, element, mode: str = "quadrature", reverse: bool = False) -> np.ndarray:
    """Matrix of T_i acting on boundary node values, shape ``(n_ref, n_dofs)``.

    ``mode="quadrature"`` scales by ``sqrt(w_Gamma / w_0)`` (an exact discrete
    isometry); ``mode="jacobian"`` by ``sqrt(|J| mu)`` at the node.
    """
    e = t.elements[t.index(element)]
    n = e.n_ref
    order = np.arange(n)[::-1] if reverse else np.arange(n)
    w0 = reference_weights(n)
    if mode == "quadrature":
        scale = np.sqrt(e.weights[order] / w0)
    elif mode == "jacobian":
        scale = np.sqrt(e.jacobian[order])
    else:
        raise ValueError(f"unknown transfer mode {mode!r}")
    T = np.zeros((n, t.n_dofs))
    T[np.arange(n), np.asarray(e.dofs)[order]] = scale
    return T


def isometry_defect(t: Triangulation, element, f: Callable, g: Callable, mode: str = "jacobian") -> float:
    """``|<T f, T g>_{Gamma_0} - <f, g>_{Gamma_i}|`` with trapezoid quadrature on both sides."""
    e = t.elements[t.index(element)]
    x = e.positions
    fv = np.zeros(t.n_dofs, dtype=complex)
    gv = np.zeros(t.n_dofs, dtype=complex)
    fv[list(e.dofs)] = f(x)
    gv[list(e.dofs)] = g(x)
    T = transfer_matrix(t, element, mode)
    w0 = reference_weights(e.n_ref)
    lhs = np.sum(w0 * np.conj(T @ fv) * (T @ gv))
    rhs = np.sum(e.weights * np.conj(f(x)) * g(x))
    return float(abs(lhs - rhs))


# --- general builder -------------------------------------------------------


def unitary_from_conditions(
    n_dofs: int,
    constraints: np.ndarray | None = None,
    robin: np.ndarray | None = None,
) -> BoundaryUnitary:
    """Unitary with trace constraints ``G psi = 0`` and diagonal Robin coefficient ``robin``.

    ``constraints`` rows live in L2-normalized trace coordinates. The
    constrained directions get eigenvalue -1; on the rest,
    ``U = (I - iA)(I + iA)^{-1}`` with ``A = P diag(robin) P``.
    """
    a = np.zeros(n_dofs) if robin is None else np.asarray(robin, dtype=float)
    I = np.eye(n_dofs)
    if constraints is None or len(constraints) == 0:
        return decompose(np.diag((1 - 1j * a) / (1 + 1j * a)))
    G = np.atleast_2d(np.asarray(constraints, dtype=complex))
    Q = sla.orth(G.conj().T)
    Pp = Q @ Q.conj().T
    P = I - Pp
    A = P @ np.diag(a) @ P
    cay = np.linalg.solve((I + 1j * A).T, (I - 1j * A).T).T
    U = cay @ P - Pp
    return decompose(U)


def _identification_rows(t: Triangulation, ident: EdgeIdentification) -> np.ndarray:
    s, d = t.index(ident.source), t.index(ident.target)
    es, ed = t.elements[s], t.elements[d]
    if es.n_ref != ed.n_ref:
        raise IncompatibleElements(f"elements {es.name} ({es.n_ref} nodes) and {ed.name} ({ed.n_ref} nodes)")
    n = es.n_ref
    alpha = np.zeros(n) if ident.phase is None else np.broadcast_to(np.asarray(ident.phase, dtype=float), (n,))
    order = np.arange(n)[::-1] if ident.reverse else np.arange(n)
    W = t.boundary_weights
    rows = np.zeros((n, t.n_dofs), dtype=complex)
    for k in range(n):
        a = es.dofs[k]
        b = ed.dofs[order[k]]
        rows[k, a] += np.sqrt(es.weights[k] / W[a])
        rows[k, b] -= np.exp(1j * alpha[k]) * np.sqrt(ed.weights[order[k]] / W[b])
    return rows


def _beta_on_element(e: TriElement, beta) -> np.ndarray:
    if callable(beta):
        vals = np.asarray(beta(e.s), dtype=float)
    else:
        vals = np.asarray(beta, dtype=float)
    return np.broadcast_to(vals, (e.n_ref,)).astype(float)


def _check_beta(name: str, vals: np.ndarray, delta: float):
    if np.any(np.abs(vals) > np.pi - delta):
        raise RangeViolation(f"beta on {name} reaches {np.max(np.abs(vals)):.6g}, beyond pi - {delta:g}")
    if vals.size > 1 and np.max(np.abs(np.diff(vals))) > JUMP_WARN:
        warnings.warn(f"beta on {name} jumps by {np.max(np.abs(np.diff(vals))):.3g} between neighbouring nodes", stacklevel=3)


def block_unitary(
    t: Triangulation,
    dirichlet: Sequence = (),
    robin: dict | None = None,
    identifications: Sequence[EdgeIdentification] = (),
    delta: float = DELTA_MIN,
) -> BoundaryUnitary:
    """Blockwise combination of the example structures.

    Args:
        dirichlet: elements whose closed node lists carry ``phi = 0``.
        robin: element -> beta (scalar, node array or callable of s) for
            generalized Robin conditions; elements absent here are Neumann.
            Values at nodes shared by two elements are length-weighted.
        identifications: quasi-periodic identifications between elements.
        delta: margin from +-pi required of every beta.
    """
    n = t.n_dofs
    W = t.boundary_weights
    weighted_a = np.zeros(n)
    for key, beta in (robin or {}).items():
        e = t.elements[t.index(key)]
        vals = _beta_on_element(e, beta)
        _check_beta(e.name, vals, delta)
        np.add.at(weighted_a, list(e.dofs), e.weights * -np.tan(vals / 2))
    a = weighted_a / W
    rows = []
    for key in dirichlet:
        e = t.elements[t.index(key)]
        R = np.zeros((e.n_ref, n))
        R[np.arange(e.n_ref), list(e.dofs)] = 1.0
        rows.append(R)
    for ident in identifications:
        rows.append(_identification_rows(t, ident))
    G = np.vstack(rows) if rows else None
    return unitary_from_conditions(n, G, a)


def identification_unitary(t: Triangulation, ident: EdgeIdentification, mode: str = "quadrature") -> BoundaryUnitary:
    """Identification of two elements (periodic when no phase is given).

    ``mode="quadrature"`` is unitary exactly. ``mode="jacobian"`` assembles
    the blocks ``T_s^* e^{i alpha} T_t`` from the continuum Jacobian factors;
    it is unitary only up to the quadrature error, and needs elements that
    own all their nodes. No unitarity check is applied to its result.
    """
    if mode == "quadrature":
        return block_unitary(t, identifications=[ident])
    s, d = t.index(ident.source), t.index(ident.target)
    es, ed = t.elements[s], t.elements[d]
    if es.n_ref != ed.n_ref:
        raise IncompatibleElements(f"elements {es.name} ({es.n_ref} nodes) and {ed.name} ({ed.n_ref} nodes)")
    if set(es.dofs) != set(es.owned) or set(ed.dofs) != set(ed.owned):
        raise IncompatibleElements("jacobian-mode blocks need elements without shared nodes")
    n = es.n_ref
    w0 = reference_weights(n)
    W = t.boundary_weights
    alpha = np.zeros(n) if ident.phase is None else np.broadcast_to(np.asarray(ident.phase, dtype=float), (n,))

    def t_psi(e, reverse):
        order = np.arange(n)[::-1] if reverse else np.arange(n)
        T = np.zeros((n, t.n_dofs))
        dofs = np.asarray(e.dofs)[order]
        T[np.arange(n), dofs] = np.sqrt(w0 * e.jacobian[order] / W[dofs])
        return T

    Ts, Tt = t_psi(es, False), t_psi(ed, ident.reverse)
    E = np.diag(np.exp(1j * alpha))
    U = np.eye(t.n_dofs, dtype=complex)
    for dof in es.dofs + ed.dofs:
        U[dof, dof] = 0.0
    U += Ts.T @ E @ Tt + Tt.T @ E.conj() @ Ts
    return decompose(U, unitarity_tol=np.inf)


def quasiperiodic_unitary(t: Triangulation, ident: EdgeIdentification, alpha, mode: str = "quadrature") -> BoundaryUnitary:
    ident = EdgeIdentification(ident.source, ident.target, ident.reverse, alpha)
    return identification_unitary(t, ident, mode)


def robin_unitary(t: Triangulation, beta, delta: float = DELTA_MIN) -> BoundaryUnitary:
    """Diagonal ``e^{i beta}``; ``beta`` is one value/array/callable per element, or a scalar for all."""
    if np.isscalar(beta) or callable(beta):
        beta = [beta] * len(t.elements)
    return block_unitary(t, robin={k: b for k, b in enumerate(beta)}, delta=delta)


def mixed_unitary(t: Triangulation, dirichlet_elements: Sequence, beta=None, delta: float = DELTA_MIN) -> BoundaryUnitary:
    """-1 on ``dirichlet_elements``, ``e^{i beta}`` (default Neumann) on the rest."""
    dset = {t.index(k) for k in dirichlet_elements}
    rest = [k for k in range(len(t.elements)) if k not in dset]
    if beta is None:
        robin = {}
    elif isinstance(beta, dict):
        robin = {t.index(k): v for k, v in beta.items()}
        if set(robin) & dset:
            raise ConfigError("an element cannot be both Dirichlet and Robin")
    else:
        robin = {k: beta for k in rest}
    return block_unitary(t, dirichlet=sorted(dset), robin=robin, delta=delta)


# --- presets -----------------------------------------------------------------

_PRESET_RE = re.compile(r"^\s*([a-z_]+)\s*(?:[:(](.*?)\)?)?\s*$")


def parse_preset(spec: str) -> tuple[str, dict]:
    """``"name"``, ``"name:k=v,k=v"`` or ``"name(k=v, ...)"`` -> (name, params).

    List values are written ``[a, b]`` or ``a+b``.
    """
    m = _PRESET_RE.match(spec)
    if not m:
        raise ConfigError(f"cannot parse preset {spec!r}")
    name, body = m.group(1), (m.group(2) or "").strip()
    params: dict = {}
    for item in _split_params(body):
        if "=" not in item:
            raise ConfigError(f"preset parameter {item!r} in {spec!r} is not key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        if v.startswith("[") and v.endswith("]"):
            params[k] = [x.strip() for x in v[1:-1].split(",") if x.strip()]
        elif "+" in v and not _is_number(v):
            params[k] = [x.strip() for x in v.split("+")]
        else:
            params[k] = v
    return name, params


def _split_params(body: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur)
    return [s.strip() for s in out if s.strip()]


def _is_number(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


def _as_list(v) -> list:
    return v if isinstance(v, list) else [v]


def _periodic_identifications(mesh: Mesh, axes: str, alpha: float) -> list[EdgeIdentification]:
    if mesh.kind == "interval":
        return [EdgeIdentification("left", "right", False, alpha)]
    idents = []
    for axis in axes:
        if axis == "x":
            idents.append(EdgeIdentification("left", "right", True, alpha))
        elif axis == "y":
            idents.append(EdgeIdentification("bottom", "top", True, alpha))
        else:
            raise ConfigError(f"unknown axis {axis!r}; use x, y or xy")
    return idents


def preset_unitary(mesh: Mesh, spec: str, float_parser=float) -> BoundaryUnitary:
    """Expand a named preset on a mesh.

    Presets: ``dirichlet``, ``neumann``, ``periodic[:axes=x|y|xy]``,
    ``quasiperiodic:alpha=..[,axes=..]``, ``robin:c=..|beta=..[,on=..]``
    (default ``on=right``, the far end as in the reference interval
    problem), ``zaremba:dirichlet=left[,beta=..]``.
    """
    name, p = parse_preset(spec)
    t = Triangulation.from_mesh(mesh)
    names = [e.name for e in mesh.elements]
    if name == "dirichlet":
        return mixed_unitary(t, names)
    if name == "neumann":
        return block_unitary(t)
    if name in ("periodic", "quasiperiodic"):
        alpha = float_parser(p.get("alpha", "0")) if name == "quasiperiodic" else 0.0
        idents = _periodic_identifications(mesh, p.get("axes", "x"), alpha)
        return block_unitary(t, identifications=idents)
    if name == "robin":
        if "c" in p and "beta" in p:
            raise ConfigError("give either c or beta for robin, not both")
        beta = -2 * np.arctan(float_parser(p["c"])) if "c" in p else float_parser(p.get("beta", "0"))
        on = _as_list(p.get("on", "right"))
        if on == ["all"]:
            on = names
        return block_unitary(t, robin={e: beta for e in on})
    if name in ("zaremba", "mixed"):
        dirichlet = _as_list(p.get("dirichlet", "left"))
        beta = float_parser(p["beta"]) if "beta" in p else None
        return mixed_unitary(t, dirichlet, beta)
    raise ConfigError(f"unknown preset {name!r}")
