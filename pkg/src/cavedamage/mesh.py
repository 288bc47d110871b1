"""Structured triangulations of a rectangle with cavity carving by deactivation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TAGS = ("lat", "up", "down", "cav")


def p1_geometry(xy) -> tuple[np.ndarray, np.ndarray]:
    """Area and shape-function gradients of linear triangles.

    Parameters
    ----------
    xy : array_like, shape (..., 3, 2)
        Vertex coordinates, counter-clockwise.

    Returns
    -------
    area : ndarray, shape (...)
    grads : ndarray, shape (..., 3, 2)
        Constant gradient of each barycentric function.
    """
    xy = np.asarray(xy, dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    # b_i = y_j - y_k, c_i = x_k - x_j over cyclic (i, j, k)
    b = np.stack([y[..., 1] - y[..., 2], y[..., 2] - y[..., 0], y[..., 0] - y[..., 1]], axis=-1)
    c = np.stack([x[..., 2] - x[..., 1], x[..., 0] - x[..., 2], x[..., 1] - x[..., 0]], axis=-1)
    twice_area = (x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0]) - (x[..., 2] - x[..., 0]) * (y[..., 1] - y[..., 0])
    scale = np.maximum(np.abs(b).max(axis=-1), np.abs(c).max(axis=-1)) ** 2
    if np.any(twice_area <= 1e-14 * scale):
        raise ValueError("degenerate or clockwise triangle")
    grads = np.stack([b, c], axis=-1) / twice_area[..., None, None]
    return 0.5 * twice_area, grads


class Geometry:
    """Node coordinates and connectivity shared by every carved state of a mesh."""

    def __init__(self, nodes, tris, domain, h):
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.tris = np.ascontiguousarray(tris, dtype=np.int64)
        self.domain = tuple(float(v) for v in domain)
        self.h = float(h)
        self.area, self.grads = p1_geometry(self.nodes[self.tris])
        self.centroids = self.nodes[self.tris].mean(axis=1)
        # scratch space for assembly patterns keyed by name
        self.cache: dict = {}
        for arr in (self.nodes, self.tris, self.area, self.grads, self.centroids):
            arr.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Mesh:
    geometry: Geometry
    active: np.ndarray
    boundary: dict = field(default_factory=dict)
    # per-state scratch (assembly patterns restricted to the active set)
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return self.geometry.nodes

    @property
    def tris(self) -> np.ndarray:
        return self.geometry.tris

    @property
    def area(self) -> np.ndarray:
        return self.geometry.area

    @property
    def grads(self) -> np.ndarray:
        return self.geometry.grads

    @property
    def domain(self) -> tuple:
        return self.geometry.domain

    @property
    def h(self) -> float:
        return self.geometry.h

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elems(self) -> int:
        return len(self.tris)

    @cached_property
    def active_nodes(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.tris[self.active].ravel()] = True
        return mask

    @property
    def active_area(self) -> float:
        return float(self.area[self.active].sum())

    def nodes_on(self, tag: str) -> np.ndarray:
        edges = self.boundary.get(tag)
        if edges is None or len(edges) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.unique(edges)


@dataclass(frozen=True)
class CavitySpec:
    """Rectangle ``(x_start, x_start + rate t) x (y_center -+ half_height)``."""

    x_start: float = -500.0
    rate: float = 40.0
    half_height: float = 20.0
    y_center: float = 0.0

    def rectangle(self, t: int) -> tuple[float, float, float, float]:
        return (
            self.x_start,
            self.x_start + self.rate * t,
            self.y_center - self.half_height,
            self.y_center + self.half_height,
        )


def build_mesh(domain, h: float, pattern: str = "right", min_cells: int = 1) -> Mesh:
    """Structured triangulation of ``domain = (x0, x1, y0, y1)``.

    The cell count per direction is ``round(L / h)``, so the realized size
    is the nearest size that divides each side. ``pattern`` is ``"right"``
    (two triangles per cell) or ``"crossed"`` (four triangles around a
    cell-centre node).
    """
    x0, x1, y0, y1 = (float(v) for v in domain)
    lx, ly = x1 - x0, y1 - y0
    if not (lx > 0 and ly > 0):
        raise ValueError(f"empty domain {domain}")
    if not h > 0:
        raise ValueError(f"mesh size must be positive, got {h}")
    if h > min(lx, ly) * (1 + 1e-12):
        raise ValueError(f"mesh size {h} exceeds the shortest side {min(lx, ly)}")
    nx, ny = max(1, round(lx / h)), max(1, round(ly / h))
    if min(nx, ny) < min_cells:
        raise ValueError(f"h={h} gives {nx}x{ny} cells; at least {min_cells} per direction required")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    n00 = j * (nx + 1) + i
    n10, n01 = n00 + 1, n00 + nx + 1
    n11 = n01 + 1
    if pattern == "right":
        tris = np.stack([np.column_stack([n00, n10, n11]), np.column_stack([n00, n11, n01])], axis=1)
    elif pattern == "crossed":
        centres = np.column_stack([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])])
        c = len(nodes) + np.arange(len(i))
        nodes = np.vstack([nodes, centres])
        tris = np.stack(
            [
                np.column_stack([n00, n10, c]),
                np.column_stack([n10, n11, c]),
                np.column_stack([n11, n01, c]),
                np.column_stack([n01, n00, c]),
            ],
            axis=1,
        )
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    geom = Geometry(nodes, tris.reshape(-1, 3), (x0, x1, y0, y1), max(lx / nx, ly / ny))
    return tag_boundaries(Mesh(geom, np.ones(len(geom.tris), dtype=bool)))


def boundary_edges(mesh: Mesh) -> np.ndarray:
    """Edges (sorted node pairs) belonging to exactly one active triangle."""
    t = mesh.tris[mesh.active]
    edges = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    return uniq[counts == 1]


def tag_boundaries(mesh: Mesh) -> Mesh:
    """Return ``mesh`` with its active boundary edges partitioned by tag.

    Edges on ``x = x0`` or ``x = x1`` are ``lat``, on ``y = y1`` ``up``, on
    ``y = y0`` ``down``; any other boundary edge faces a carved cavity.
    """
    x0, x1, y0, y1 = mesh.domain
    edges = boundary_edges(mesh)
    p = mesh.nodes[edges]  # (m, 2, 2)
    tol = 1e-9 * max(x1 - x0, y1 - y0)
    on = lambda coord, axis: np.all(np.abs(p[:, :, axis] - coord) <= tol, axis=1)  # noqa: E731
    lat = on(x0, 0) | on(x1, 0)
    up = on(y1, 1)
    down = on(y0, 1)
    cav = ~(lat | up | down)
    if np.any((lat.astype(int) + up + down + cav) != 1):
        raise RuntimeError("boundary edge with ambiguous tag")
    tags = {"lat": edges[lat], "up": edges[up], "down": edges[down], "cav": edges[cav]}
    return Mesh(mesh.geometry, mesh.active, tags)


def cavity_mask(mesh: Mesh, t: int, spec: CavitySpec) -> np.ndarray:
    """Triangles whose centroid lies strictly inside the cavity at step ``t``."""
    cx0, cx1, cy0, cy1 = spec.rectangle(t)
    c = mesh.geometry.centroids
    return (c[:, 0] > cx0) & (c[:, 0] < cx1) & (c[:, 1] > cy0) & (c[:, 1] < cy1)


def carve_cavity(mesh: Mesh, t: int, spec: CavitySpec) -> Mesh:
    """Deactivate the triangles swallowed by the cavity at step ``t``.

    Carving only removes elements, so the active set never grows. Newly
    exposed edges are tagged ``cav`` (traction free).
    """
    if int(t) != t or t < 0:
        raise ValueError(f"step index must be a non-negative integer, got {t}")
    cx0, cx1, cy0, cy1 = spec.rectangle(t)
    x0, x1, y0, y1 = mesh.domain
    if cx1 > cx0 and not (x0 < cx0 and cx1 < x1 and y0 < cy0 and cy1 < y1):
        raise ValueError(f"cavity {(cx0, cx1, cy0, cy1)} at step {t} leaves the domain {mesh.domain}")
    active = mesh.active & ~cavity_mask(mesh, t, spec)
    if not active.any():
        raise ValueError("carving removed every element")
    return tag_boundaries(Mesh(mesh.geometry, active))
