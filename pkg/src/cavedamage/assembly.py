"""P1 finite-element assembly of the elasticity system and the damage functional."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .constitutive import DamageModel, MaterialParams, bulk_coefficients
from .mesh import Mesh

# residual stiffness used only when assembling the elasticity operator
A_MIN = 1e-6


def _pattern(dofs: np.ndarray, ndof: int):
    """CSR pattern of the element dof table and each element entry's slot in it."""
    m = dofs.shape[1]
    rows = np.repeat(dofs, m, axis=1)
    cols = np.tile(dofs, (1, m))
    keys = rows.ravel() * ndof + cols.ravel()
    uniq, inverse = np.unique(keys, return_inverse=True)
    indices = (uniq % ndof).astype(np.int32)
    counts = np.bincount(uniq // ndof, minlength=ndof)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
    return indptr, indices, np.ascontiguousarray(inverse.reshape(dofs.shape[0], m * m), dtype=np.int64)


def _elastic_dofs(mesh: Mesh) -> np.ndarray:
    t = mesh.tris
    return np.stack([2 * t, 2 * t + 1], axis=2).reshape(len(t), 6)


def strain_operator(grads: np.ndarray) -> np.ndarray:
    """Voigt strain-displacement matrices ``(xx, yy, 2xy)``, shape ``(ne, 3, 6)``."""
    gx, gy = grads[..., 0], grads[..., 1]
    B = np.zeros((len(grads), 3, 6))
    B[:, 0, 0::2] = gx
    B[:, 1, 1::2] = gy
    B[:, 2, 0::2] = gy
    B[:, 2, 1::2] = gx
    return B


def _elastic_locals(mesh: Mesh, mat: MaterialParams):
    key = ("elastic_locals", mat.lam, mat.mu)
    geom = mesh.geometry
    if key not in geom.cache:
        B = strain_operator(geom.grads)
        lam, mu = mat.lam, mat.mu
        d_vol = (lam + mu) * np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        d_dev = mu * np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        kv = np.einsum("e,eai,ab,ebj->eij", geom.area, B, d_vol, B).reshape(-1, 36)
        kd = np.einsum("e,eai,ab,ebj->eij", geom.area, B, d_dev, B).reshape(-1, 36)
        geom.cache[key] = (np.ascontiguousarray(kv), np.ascontiguousarray(kd))
    return geom.cache[key]


def _elastic_pattern(mesh: Mesh):
    geom = mesh.geometry
    if "elastic_pattern" not in geom.cache:
        geom.cache["elastic_pattern"] = _pattern(_elastic_dofs(mesh), 2 * mesh.n_nodes)
    return geom.cache["elastic_pattern"]


def element_damage(mesh: Mesh, alpha) -> np.ndarray:
    """Mean nodal damage of every triangle."""
    return np.asarray(alpha, dtype=float)[mesh.tris].mean(axis=1)


def stiffness_weights(model, abar, a_min: float = A_MIN):
    """Weights of the volumetric and deviatoric element stiffness parts."""
    model = DamageModel.parse(model)
    a_eff = np.maximum((1.0 - abar) ** 2, a_min)
    if model is DamageModel.SHEAR:
        return np.ones_like(a_eff), a_eff
    return a_eff, a_eff


def assemble_elasticity(mesh: Mesh, alpha, model, mat: MaterialParams, a_min: float = A_MIN):
    """Plane-strain stiffness ``K`` and gravity load ``b`` over all ``2 n_nodes`` dofs.

    Degradation uses the element-mean damage, floored at ``a_min``. Rows of
    nodes without an active element are empty; dofs are interleaved
    ``(ux0, uy0, ux1, ...)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    kv, kd = _elastic_locals(mesh, mat)
    indptr, indices, emap = _elastic_pattern(mesh)
    wv, wd = stiffness_weights(model, element_damage(mesh, alpha), a_min)
    on = mesh.active.astype(float)
    data = kernels.scatter_add(emap, kv, wv * on, kd, wd * on, len(indices))
    ndof = 2 * mesh.n_nodes
    K = sp.csr_matrix((data, indices, indptr), shape=(ndof, ndof))
    return K, body_load(mesh, mat)


def body_load(mesh: Mesh, mat: MaterialParams) -> np.ndarray:
    """Consistent nodal load of the uniform body force ``rho g`` on active triangles."""
    f = mat.body_force
    share = np.where(mesh.active, mesh.area, 0.0) / 3.0
    b = np.zeros(2 * mesh.n_nodes)
    t = mesh.tris.ravel()
    w = np.repeat(share, 3)
    b[0::2] = np.bincount(t, weights=w * f[0], minlength=mesh.n_nodes)
    b[1::2] = np.bincount(t, weights=w * f[1], minlength=mesh.n_nodes)
    return b


def strains(mesh: Mesh, u) -> np.ndarray:
    """Element strains ``(xx, yy, xy)`` for every triangle (active or not)."""
    return kernels.element_strains(mesh.tris, mesh.grads, np.ascontiguousarray(u, dtype=float))


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraints:
    """Prescribed values on a set of dofs."""

    dofs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dofs = np.asarray(self.dofs, dtype=np.int64).ravel()
        values = np.broadcast_to(np.asarray(self.values, dtype=float), dofs.shape).copy()
        order = np.argsort(dofs, kind="stable")
        dofs, values = dofs[order], values[order]
        dup = np.flatnonzero(np.diff(dofs) == 0)
        if len(dup) and np.any(values[dup] != values[dup + 1]):
            raise ValueError("conflicting prescribed values on the same dof")
        keep = np.concatenate([[True], np.diff(dofs) != 0]) if len(dofs) else np.zeros(0, bool)
        object.__setattr__(self, "dofs", dofs[keep])
        object.__setattr__(self, "values", values[keep])

    @classmethod
    def none(cls) -> "Constraints":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0))


@dataclass(frozen=True)
class BoundaryConditions:
    """Per-boundary kinematic condition: ``"clamped"``, ``"roller"`` or ``"free"``.

    A roller fixes the displacement component normal to its side. The cavity
    boundary is always traction free.
    """

    down: str = "clamped"
    lat: str = "roller"
    up: str = "free"

    def __post_init__(self):
        for side in ("down", "lat", "up"):
            if getattr(self, side) not in ("clamped", "roller", "free"):
                raise ValueError(f"unknown condition {getattr(self, side)!r} on {side}")

    def constraints(self, mesh: Mesh) -> Constraints:
        dofs = []
        for side, normal in (("down", 1), ("lat", 0), ("up", 1)):
            kind = getattr(self, side)
            nodes = mesh.nodes_on(side)
            if kind == "clamped":
                dofs += [2 * nodes, 2 * nodes + 1]
            elif kind == "roller":
                dofs.append(2 * nodes + normal)
        dofs = np.concatenate(dofs) if dofs else np.zeros(0, dtype=np.int64)
        return Constraints(dofs, np.zeros(len(dofs)))


@dataclass(frozen=True)
class ReducedSystem:
    K: sp.csr_matrix
    b: np.ndarray
    free: np.ndarray
    constraints: Constraints
    ndof: int

    def expand(self, x_free) -> np.ndarray:
        u = np.zeros(self.ndof)
        u[self.free] = x_free
        u[self.constraints.dofs] = self.constraints.values
        return u


def active_dofs(mesh: Mesh) -> np.ndarray:
    return np.repeat(mesh.active_nodes, 2)


def apply_dirichlet(K, b, constraints: Constraints, active=None) -> ReducedSystem:
    """Eliminate prescribed dofs symmetrically.

    ``active`` is a boolean dof mask; dofs outside it are dropped and may not
    carry constraints.
    """
    ndof = K.shape[0]
    active = np.ones(ndof, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    if len(constraints.dofs) and not active[constraints.dofs].all():
        bad = constraints.dofs[~active[constraints.dofs]]
        raise ValueError(f"constraint on inactive dofs {bad[:5].tolist()}")
    fixed = np.zeros(ndof, dtype=bool)
    fixed[constraints.dofs] = True
    free = np.flatnonzero(active & ~fixed)
    K = sp.csr_matrix(K)
    Kff = K[free][:, free].tocsr()
    rhs = np.asarray(b, dtype=float)[free].copy()
    if len(constraints.dofs) and np.any(constraints.values != 0.0):
        rhs -= K[free][:, constraints.dofs] @ constraints.values
    return ReducedSystem(Kff, rhs, free, constraints, ndof)


def elastic_potential(K, b, u) -> float:
    """``u.K.u / 2 - b.u``, the functional minimized by the elastic step."""
    return float(0.5 * u @ (K @ u) - b @ u)


def equilibrium_residual(mesh: Mesh, u, alpha, model, mat: MaterialParams, constraints: Constraints,
                         a_min: float = A_MIN) -> float:
    """Euclidean norm of ``K(alpha) u - b`` over the free dofs."""
    K, b = assemble_elasticity(mesh, alpha, model, mat, a_min)
    fixed = np.zeros(K.shape[0], dtype=bool)
    fixed[constraints.dofs] = True
    free = active_dofs(mesh) & ~fixed
    return float(np.linalg.norm((K @ u - b)[free]))


# ---------------------------------------------------------------------------
# damage functional
# ---------------------------------------------------------------------------


def _damage_space(mesh: Mesh):
    """Active-node numbering, local connectivity and Hessian pattern for ``mesh``."""
    if "damage_space" not in mesh.cache:
        nodes = np.flatnonzero(mesh.active_nodes)
        local = -np.ones(mesh.n_nodes, dtype=np.int64)
        local[nodes] = np.arange(len(nodes))
        elems = np.flatnonzero(mesh.active)
        tris = np.ascontiguousarray(local[mesh.tris[elems]])
        area = np.ascontiguousarray(mesh.area[elems])
        g = mesh.grads[elems]
        lap = np.ascontiguousarray((area[:, None, None] * np.einsum("eid,ejd->eij", g, g)).reshape(-1, 9))
        indptr, indices, emap = _pattern(tris, len(nodes))
        ones = np.ones_like(lap)
        data = kernels.scatter_add(emap, lap, np.ones(len(elems)), ones, np.zeros(len(elems)), len(indices))
        L = sp.csr_matrix((data, indices, indptr), shape=(len(nodes),) * 2)
        lumped = np.bincount(tris.ravel(), weights=np.repeat(area / 3.0, 3), minlength=len(nodes))
        mesh.cache["damage_space"] = dict(
            nodes=nodes, elems=elems, tris=tris, area=area, lap_local=lap, ones=ones,
            indptr=indptr, indices=indices, emap=emap, L=L, lumped=lumped,
        )
    return mesh.cache["damage_space"]


class DamageFunctional:
    """Discrete damage energy at frozen displacement, over the active nodes.

    ``value(alpha) = sum_e area_e [psi(eps_e, abar_e) + w1 abar_e^2]
    + w1 ell^2 / 2 * sum_e area_e |grad alpha|_e^2``

    with ``abar_e`` the mean of the element's nodal damage. Vectors passed to
    the methods are indexed by :attr:`nodes` (active nodes only); use
    :meth:`restrict` and :meth:`extend` to convert from and to full nodal
    fields.

    Parameters
    ----------
    mesh : Mesh
    u : ndarray
        Interleaved nodal displacement, length ``2 * mesh.n_nodes``.
    model : DamageModel or str
    mat : MaterialParams
    lower : ndarray, optional
        Full-length irreversibility bound; zero when omitted.
    """

    def __init__(self, mesh: Mesh, u, model, mat: MaterialParams, lower=None):
        self.mesh = mesh
        self.model = DamageModel.parse(model)
        self.mat = mat
        space = _damage_space(mesh)
        self._s = space
        self.nodes = space["nodes"]
        self.n = len(self.nodes)
        eps = strains(mesh, u)[space["elems"]]
        const, coef, k = bulk_coefficients(self.model, eps, mat)
        self.const = np.ascontiguousarray(const)
        self.coef = np.ascontiguousarray(coef)
        self.k = int(k)
        self.grad_coef = mat.w1 * mat.ell**2
        self.L = space["L"] * self.grad_coef
        lower = np.zeros(mesh.n_nodes) if lower is None else np.asarray(lower, dtype=float)
        self.lower = np.ascontiguousarray(lower[self.nodes])
        self.upper = np.ones(self.n)
        # natural size of a nodal gradient entry: w1 times the lumped nodal area
        self.scale = mat.w1 * space["lumped"]

    def restrict(self, field) -> np.ndarray:
        return np.ascontiguousarray(np.asarray(field, dtype=float)[self.nodes])

    def extend(self, alpha, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.mesh.n_nodes, fill, dtype=float)
        out[self.nodes] = alpha
        return out

    def _bulk(self, alpha):
        s = self._s
        return kernels.bulk_value_grad(s["tris"], s["area"], self.const, self.coef, self.k, self.mat.w1,
                                       np.ascontiguousarray(alpha, dtype=float), self.n)

    def value_and_grad(self, alpha) -> tuple[float, np.ndarray]:
        alpha = np.ascontiguousarray(alpha, dtype=float)
        v, g = self._bulk(alpha)
        La = self.L @ alpha
        return v + 0.5 * float(alpha @ La), g + La

    def value(self, alpha) -> float:
        return self.value_and_grad(alpha)[0]

    def gradient(self, alpha) -> np.ndarray:
        return self.value_and_grad(alpha)[1]

    def difference(self, alpha, beta) -> float:
        """``value(beta) - value(alpha)`` evaluated without cancellation."""
        s = self._s
        alpha = np.ascontiguousarray(alpha, dtype=float)
        beta = np.ascontiguousarray(beta, dtype=float)
        d = beta - alpha
        bulk = kernels.bulk_difference(s["tris"], s["area"], self.coef, self.k, self.mat.w1, alpha, beta)
        return bulk + float(d @ (self.L @ (alpha + 0.5 * d)))

    def hessp(self, alpha, v) -> np.ndarray:
        s = self._s
        alpha = np.ascontiguousarray(alpha, dtype=float)
        v = np.ascontiguousarray(v, dtype=float)
        return kernels.bulk_hessp(s["tris"], s["area"], self.coef, self.k, self.mat.w1, alpha, v, self.n) + self.L @ v

    def hessian(self, alpha, convexify: bool = False) -> sp.csr_matrix:
        """Sparse Hessian; ``convexify`` drops negative bulk curvature."""
        s = self._s
        alpha = np.ascontiguousarray(alpha, dtype=float)
        wb = kernels.bulk_curvature(s["tris"], s["area"], self.coef, self.k, self.mat.w1, alpha, convexify)
        wl = np.full(len(s["area"]), self.grad_coef)
        data = kernels.scatter_add(s["emap"], s["lap_local"], wl, s["ones"], wb, len(s["indices"]))
        return sp.csr_matrix((data, s["indices"], s["indptr"]), shape=(self.n, self.n))

    def parts(self, alpha) -> dict:
        """Bulk (elastic), local-dissipation and gradient-dissipation contributions."""
        alpha = np.asarray(alpha, dtype=float)
        s = self._s
        abar = alpha[s["tris"]].sum(axis=1) / 3.0
        elastic = float(np.sum(s["area"] * (self.const + self.coef * (1.0 - abar) ** self.k)))
        local = float(np.sum(s["area"] * self.mat.w1 * abar**2))
        gradient = 0.5 * float(alpha @ (self.L @ alpha))
        return {"elastic": elastic, "local": local, "gradient": gradient}


def build_damage_functional(mesh: Mesh, u, model, mat: MaterialParams, alpha_prev=None) -> DamageFunctional:
    return DamageFunctional(mesh, u, model, mat, alpha_prev)
