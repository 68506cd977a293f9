"""Uniform tensor grids on intervals and rectangles.

Boundary degrees of freedom are numbered along the boundary: ``[left,
right]`` for an interval; counterclockwise from the corner (0, 0) for a
rectangle. Each rectangle edge *owns* its first corner in that traversal
(bottom owns (0,0), right owns (Lx,0), top owns (Lx,Ly), left owns (0,Ly)),
so the edges partition the boundary nodes. An edge's *closed* node list adds
the corner where it ends. Quadrature and Robin data live on closed lists;
ownership decides the block structure and the normal used at a corner.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .boundary_unitary import BoundaryMesh


@dataclass(frozen=True)
class Element:
    """One boundary element: an interval endpoint or a rectangle edge.

    ``owned`` and ``closed`` are boundary-dof indices; ``weights`` and ``s``
    (reference coordinate in [0, 1]) are aligned with ``closed``.
    """

    name: str
    owned: tuple
    closed: tuple
    weights: np.ndarray
    s: np.ndarray
    length: float
    normal: tuple


@dataclass(frozen=True)
class BoundaryTrace:
    trace: np.ndarray
    normal_derivative: np.ndarray


class Mesh:
    """Nodes of a uniform grid with ``n_cells[a]`` cells along axis ``a``.

    ``metric_distortion`` is a piecewise-constant volume density: cells in
    the half x < Lx/2 carry density 1 + delta, the others 1 - delta. The
    boundary measure is left undistorted. An explicit ``density`` array
    (one value per cell) may be given instead, provided it stays within
    [1 - delta, 1 + delta].
    """

    def __init__(self, kind: str, lengths, n_cells, metric_distortion: float = 0.0, density=None):
        if kind not in ("interval", "rectangle"):
            raise ValueError(f"unknown mesh kind {kind!r}")
        dim = 1 if kind == "interval" else 2
        lengths = tuple(float(v) for v in np.atleast_1d(lengths))
        n_cells = tuple(int(v) for v in np.atleast_1d(n_cells))
        if len(lengths) != dim or len(n_cells) != dim:
            raise ValueError(f"{kind} needs {dim} lengths and cell counts")
        if any(L <= 0 for L in lengths):
            raise ValueError("lengths must be positive")
        if any(n < 3 for n in n_cells):
            raise ValueError("need at least 3 cells per axis")
        if not 0.0 <= metric_distortion < 1.0:
            raise ValueError("metric_distortion must lie in [0, 1)")
        self.kind = kind
        self.dim = dim
        self.lengths = lengths
        self.n_cells = n_cells
        self.metric_distortion = float(metric_distortion)
        if density is None:
            xc = (np.arange(n_cells[0]) + 0.5) * lengths[0] / n_cells[0]
            rho_x = np.where(xc < lengths[0] / 2, 1 + metric_distortion, 1 - metric_distortion)
            density = rho_x if dim == 1 else np.repeat(rho_x[:, None], n_cells[1], axis=1)
        density = np.asarray(density, dtype=float)
        if density.shape != n_cells:
            raise ValueError(f"density of shape {density.shape} for {n_cells} cells")
        if np.any(np.abs(density - 1) > metric_distortion + 1e-14):
            raise ValueError("density leaves [1 - delta, 1 + delta]")
        self.density = density

    @classmethod
    def interval(cls, length: float, n: int, metric_distortion: float = 0.0, density=None) -> "Mesh":
        return cls("interval", (length,), (n,), metric_distortion, density)

    @classmethod
    def rectangle(cls, lx: float, ly: float, nx: int, ny: int | None = None, metric_distortion: float = 0.0, density=None):
        return cls("rectangle", (lx, ly), (nx, nx if ny is None else ny), metric_distortion, density)

    def __repr__(self):
        return f"Mesh({self.kind!r}, lengths={self.lengths}, n_cells={self.n_cells}, delta={self.metric_distortion})"

    # --- geometry ---------------------------------------------------------

    @property
    def spacings(self) -> tuple:
        return tuple(L / n for L, n in zip(self.lengths, self.n_cells))

    @property
    def h(self) -> float:
        return max(self.spacings)

    @property
    def shape(self) -> tuple:
        """Nodes per axis."""
        return tuple(n + 1 for n in self.n_cells)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def node_index(self, i, j=0):
        return np.asarray(i) + self.shape[0] * np.asarray(j)

    @cached_property
    def coordinates(self) -> np.ndarray:
        axes = [np.linspace(0, L, n + 1) for L, n in zip(self.lengths, self.n_cells)]
        if self.dim == 1:
            return axes[0][:, None]
        X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def _boundary(self):
        if self.dim == 1:
            n = self.n_cells[0]
            bmap = np.array([0, n])
            elements = (
                Element("left", (0,), (0,), np.ones(1), np.zeros(1), 0.0, (-1.0,)),
                Element("right", (1,), (1,), np.ones(1), np.zeros(1), 0.0, (1.0,)),
            )
            return bmap, elements, ()
        nx, ny = self.n_cells
        hx, hy = self.spacings
        ii = np.concatenate([np.arange(nx), np.full(ny, nx), np.arange(nx, 0, -1), np.zeros(ny, int)])
        jj = np.concatenate([np.zeros(nx, int), np.arange(ny), np.full(nx, ny), np.arange(ny, 0, -1)])
        bmap = self.node_index(ii, jj)
        nb = bmap.size
        specs = [("bottom", 0, nx, hx, (0.0, -1.0)), ("right", nx, ny, hy, (1.0, 0.0)),
                 ("top", nx + ny, nx, hx, (0.0, 1.0)), ("left", 2 * nx + ny, ny, hy, (-1.0, 0.0))]
        elements = []
        segments = []
        for name, start, count, h, normal in specs:
            owned = tuple(range(start, start + count))
            closed = tuple((start + k) % nb for k in range(count + 1))
            w = np.full(count + 1, h)
            w[0] = w[-1] = h / 2
            elements.append(Element(name, owned, closed, w, np.linspace(0, 1, count + 1), count * h, normal))
            segments.extend((closed[k], closed[k + 1], h) for k in range(count))
        return bmap, tuple(elements), tuple(segments)

    @property
    def boundary_map(self) -> np.ndarray:
        """Node index of each boundary dof."""
        return self._boundary[0]

    @property
    def elements(self) -> tuple:
        return self._boundary[1]

    def element(self, name: str) -> Element:
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(f"no boundary element {name!r} on a {self.kind}; have {[e.name for e in self.elements]}")

    @property
    def n_boundary(self) -> int:
        return self.boundary_map.size

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        """Trapezoid weight of each boundary dof (closed-element contributions summed)."""
        w = np.zeros(self.n_boundary)
        for e in self.elements:
            np.add.at(w, list(e.closed), e.weights)
        return w

    def boundary_mesh(self) -> BoundaryMesh:
        return BoundaryMesh(
            weights=self.boundary_weights,
            segments=self._boundary[2],
            elements=tuple(e.owned for e in self.elements),
        )

    @cached_property
    def owner(self) -> np.ndarray:
        own = np.empty(self.n_boundary, dtype=int)
        for k, e in enumerate(self.elements):
            own[list(e.owned)] = k
        return own

    @cached_property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_map] = False
        return mask

    # --- operators ---------------------------------------------------------

    @cached_property
    def trace_operator(self) -> sp.csr_matrix:
        """Restriction of node values to boundary dofs."""
        nb = self.n_boundary
        return sp.csr_matrix((np.ones(nb), (np.arange(nb), self.boundary_map)), shape=(nb, self.n_nodes))

    @cached_property
    def normal_derivative_operator(self) -> sp.csr_matrix:
        """One-sided second-order outward normal derivative at boundary dofs.

        At a corner the normal of the owning edge is used.
        """
        rows, cols, vals = [], [], []
        coords_idx = self._grid_indices()
        for k, node in enumerate(self.boundary_map):
            e = self.elements[self.owner[k]]
            axis = int(np.argmax(np.abs(e.normal)))
            sign = int(np.sign(e.normal[axis]))
            h = self.spacings[axis]
            ij = list(coords_idx[node])
            nodes = []
            for step in range(3):
                q = list(ij)
                q[axis] -= sign * step
                nodes.append(int(self.node_index(*q)))
            for nd, c in zip(nodes, (1.5, -2.0, 0.5)):
                rows.append(k)
                cols.append(nd)
                vals.append(c / h)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_boundary, self.n_nodes))

    def _grid_indices(self) -> np.ndarray:
        idx = np.arange(self.n_nodes)
        if self.dim == 1:
            return idx[:, None]
        return np.column_stack([idx % self.shape[0], idx // self.shape[0]])

    def boundary_trace(self, x) -> BoundaryTrace:
        x = np.asarray(x)
        return BoundaryTrace(trace=self.trace_operator @ x, normal_derivative=self.normal_derivative_operator @ x)

    @cached_property
    def node_density(self) -> np.ndarray:
        """Density-weighted lumped volume of each node (diagonal of the mass matrix)."""
        vol = float(np.prod(self.spacings))
        rho = self.density * vol / 2**self.dim
        m = np.zeros(self.shape)
        if self.dim == 1:
            m[:-1] += rho
            m[1:] += rho
        else:
            m[:-1, :-1] += rho
            m[1:, :-1] += rho
            m[:-1, 1:] += rho
            m[1:, 1:] += rho
        return m.ravel(order="F")

    @cached_property
    def edge_weights(self):
        """Stiffness coefficient of each grid edge, per axis, on the node grid layout.

        Entry ``[a][i, j]`` couples node (i, j) with its +axis-a neighbour.
        """
        if self.dim == 1:
            (h,) = self.spacings
            return (self.density / h,)
        hx, hy = self.spacings
        rho = self.density
        pad_y = np.zeros((rho.shape[0], rho.shape[1] + 2))
        pad_y[:, 1:-1] = rho
        wx = (pad_y[:, :-1] + pad_y[:, 1:]) / 2 * hy / hx  # shape (nx, ny+1)
        pad_x = np.zeros((rho.shape[0] + 2, rho.shape[1]))
        pad_x[1:-1, :] = rho
        wy = (pad_x[:-1, :] + pad_x[1:, :]) / 2 * hx / hy  # shape (nx+1, ny)
        return wx, wy
