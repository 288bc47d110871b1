"""Vectorized numpy implementations of the element kernels.

Reference backend; :mod:`cavedamage._ckernels` implements the same
signatures as compiled loops.
"""

import numpy as np


def element_strains(tris, grads, u):
    """Constant P1 strain ``(xx, yy, xy)`` per triangle from interleaved ``u``."""
    ux = u[0::2][tris]
    uy = u[1::2][tris]
    gx, gy = grads[..., 0], grads[..., 1]
    out = np.empty((len(tris), 3))
    out[:, 0] = (ux * gx).sum(axis=1)
    out[:, 1] = (uy * gy).sum(axis=1)
    out[:, 2] = 0.5 * ((ux * gy).sum(axis=1) + (uy * gx).sum(axis=1))
    return out


def scatter_add(emap, la, wa, lb, wb, nnz):
    """``data[emap[e, k]] += wa[e] la[e, k] + wb[e] lb[e, k]``; negative map entries are skipped."""
    vals = wa[:, None] * la + wb[:, None] * lb
    keep = emap >= 0
    return np.bincount(emap[keep], weights=vals[keep], minlength=nnz)


def _mean_damage(tris, alpha):
    return alpha[tris].sum(axis=1) / 3.0


def bulk_value_grad(tris, area, const, coef, k, w1, alpha, nn):
    """Value and nodal gradient of ``sum_e area_e (const + coef (1 - abar)^k + w1 abar^2)``."""
    abar = _mean_damage(tris, alpha)
    s = 1.0 - abar
    value = float(np.sum(area * (const + coef * s**k + w1 * abar * abar)))
    de = area * (-k * coef * s ** (k - 1) + 2.0 * w1 * abar) / 3.0
    grad = np.bincount(tris.ravel(), weights=np.repeat(de, 3), minlength=nn)
    return value, grad


def bulk_curvature(tris, area, coef, k, w1, alpha, convexify):
    """Per-element second derivative of the bulk density in ``abar``, times ``area / 9``."""
    s = 1.0 - _mean_damage(tris, alpha)
    c2 = k * (k - 1) * coef * s ** (k - 2)
    if convexify:
        c2 = np.maximum(c2, 0.0)
    return area * (c2 + 2.0 * w1) / 9.0


def bulk_hessp(tris, area, coef, k, w1, alpha, v, nn):
    """Bulk Hessian applied to ``v``."""
    wgt = bulk_curvature(tris, area, coef, k, w1, alpha, False)
    vsum = v[tris].sum(axis=1)
    return np.bincount(tris.ravel(), weights=np.repeat(wgt * vsum, 3), minlength=nn)


def bulk_difference(tris, area, coef, k, w1, alpha, beta):
    """Bulk energy at ``beta`` minus at ``alpha``, free of cancellation between large totals."""
    a = _mean_damage(tris, alpha)
    b = _mean_damage(tris, beta)
    delta = b - a
    s = 1.0 - a
    sq = -delta * (2.0 * s - delta)  # (1-b)^2 - (1-a)^2
    if k == 4:
        sq = sq * ((1.0 - b) ** 2 + s * s)
    elif k != 2:
        sq = (1.0 - b) ** k - s**k
    return float(np.sum(area * (coef * sq + w1 * delta * (a + b))))
