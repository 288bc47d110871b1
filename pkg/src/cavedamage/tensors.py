"""Pointwise algebra on symmetric second-order tensors.

Tensors are stored packed along the last axis:

* 2D: ``(xx, yy, xy)``
* 3D: ``(xx, yy, zz, yz, xz, xy)``

Off-diagonal entries are the tensor components themselves (not engineering
shears). Every function broadcasts over leading axes.
"""

from __future__ import annotations

import numpy as np

_DIAG = {2: (0, 1), 3: (0, 1, 2)}
_OFF = {2: (2,), 3: (3, 4, 5)}
_SIZE_TO_DIM = {3: 2, 6: 3}

# relative guard used when clamping discriminants that should be >= 0
RADICAND_GUARD = 1e-12


def dim_of(t) -> int:
    """Spatial dimension of a packed tensor (2 or 3)."""
    t = np.asarray(t)
    try:
        return _SIZE_TO_DIM[t.shape[-1]]
    except (KeyError, IndexError):
        raise ValueError(f"packed symmetric tensor must have 3 or 6 components, got shape {t.shape}")


def pack(m) -> np.ndarray:
    """Pack full ``(..., n, n)`` symmetric matrices.

    The off-diagonal value is the mean of the two mirror entries, so a
    nonsymmetric input is symmetrized rather than silently truncated.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[-1]
    if m.shape[-2:] != (n, n) or n not in (2, 3):
        raise ValueError(f"expected (..., 2, 2) or (..., 3, 3), got {m.shape}")
    if n == 2:
        return np.stack([m[..., 0, 0], m[..., 1, 1], 0.5 * (m[..., 0, 1] + m[..., 1, 0])], axis=-1)
    return np.stack(
        [
            m[..., 0, 0],
            m[..., 1, 1],
            m[..., 2, 2],
            0.5 * (m[..., 1, 2] + m[..., 2, 1]),
            0.5 * (m[..., 0, 2] + m[..., 2, 0]),
            0.5 * (m[..., 0, 1] + m[..., 1, 0]),
        ],
        axis=-1,
    )


def unpack(t) -> np.ndarray:
    """Inverse of :func:`pack`."""
    t = np.asarray(t, dtype=float)
    n = dim_of(t)
    out = np.empty(t.shape[:-1] + (n, n))
    if n == 2:
        xx, yy, xy = np.moveaxis(t, -1, 0)
        out[..., 0, 0] = xx
        out[..., 1, 1] = yy
        out[..., 0, 1] = out[..., 1, 0] = xy
    else:
        xx, yy, zz, yz, xz, xy = np.moveaxis(t, -1, 0)
        out[..., 0, 0] = xx
        out[..., 1, 1] = yy
        out[..., 2, 2] = zz
        out[..., 1, 2] = out[..., 2, 1] = yz
        out[..., 0, 2] = out[..., 2, 0] = xz
        out[..., 0, 1] = out[..., 1, 0] = xy
    return out


def identity(n: int) -> np.ndarray:
    if n not in _DIAG:
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    eye = np.zeros(3 if n == 2 else 6)
    eye[list(_DIAG[n])] = 1.0
    return eye


def trace(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return t[..., list(_DIAG[dim_of(t)])].sum(axis=-1)


def ddot(a, b) -> np.ndarray:
    """Double contraction ``a:b`` of packed symmetric tensors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = dim_of(a)
    d, o = list(_DIAG[n]), list(_OFF[n])
    return (a[..., d] * b[..., d]).sum(axis=-1) + 2.0 * (a[..., o] * b[..., o]).sum(axis=-1)


def det(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if dim_of(t) == 2:
        return t[..., 0] * t[..., 1] - t[..., 2] ** 2
    xx, yy, zz, yz, xz, xy = np.moveaxis(t, -1, 0)
    return xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) + xz * (xy * yz - yy * xz)


def lame_parameters(E: float, nu: float) -> tuple[float, float]:
    """Lamé coefficients ``(lambda, mu)`` from Young's modulus and Poisson ratio."""
    if not E > 0:
        raise ValueError(f"Young's modulus must be positive, got E={E}")
    if not -1.0 < nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got nu={nu}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return lam, mu


def sph_dev_split(t) -> tuple[np.ndarray, np.ndarray]:
    """Split into spherical ``tr(t)/n I`` and deviatoric ``t - tr(t)/n I`` parts."""
    t = np.asarray(t, dtype=float)
    n = dim_of(t)
    sph = (trace(t) / n)[..., None] * identity(n)
    return sph, t - sph


def _clamped_sqrt(x, scale):
    # noise below the guard is rounding, not a genuine negative radicand
    x = np.where(x < 0.0, np.where(x > -RADICAND_GUARD * scale, 0.0, x), x)
    if np.any(x < 0.0):
        raise ValueError("negative radicand beyond rounding guard; input is not symmetric real")
    return np.sqrt(x)


def principal_stresses_2d(s) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues ``(l1, l2)`` with ``l1 >= l2`` of packed 2D tensors."""
    s = np.asarray(s, dtype=float)
    if dim_of(s) != 2:
        raise ValueError("principal_stresses_2d expects 3-component packed tensors")
    tr = s[..., 0] + s[..., 1]
    disc = tr * tr - 4.0 * det(s)
    root = _clamped_sqrt(disc, ddot(s, s))
    return 0.5 * (tr + root), 0.5 * (tr - root)


def cardano_invariants(s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(m, p, q)``: mean stress, ``tr(B^2)/6`` and ``det(B)/2`` with ``B = s - mI``."""
    s = np.asarray(s, dtype=float)
    m = trace(s) / 3.0
    b = s - m[..., None] * identity(3)
    p = ddot(b, b) / 6.0
    q = 0.5 * det(b)
    return m, p, q


def _cardano_angle(p, q, scale):
    # arccos(q / p^1.5) written as atan2 so q <= 0 keeps the right branch
    rad = p**3 - q**2
    rad = np.where(rad < 0.0, np.where(rad > -RADICAND_GUARD * scale**3, 0.0, rad), rad)
    return np.arctan2(np.sqrt(np.maximum(rad, 0.0)), q) / 3.0


def principal_stresses_3d(s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues of packed 3D tensors by Cardano's trigonometric formula.

    Returns ``(l1, l2, l3)`` with ``l1 = m + 2 sqrt(p) cos(theta)`` the largest,
    ``l2 = m - 2 sqrt(p) cos(theta - pi/3)`` the smallest and
    ``l3 = m - 2 sqrt(p) cos(theta + pi/3)`` the intermediate value.
    Hydrostatic inputs (``p == 0``) return ``(m, m, m)``.
    """
    s = np.asarray(s, dtype=float)
    if dim_of(s) != 3:
        raise ValueError("principal_stresses_3d expects 6-component packed tensors")
    m, p, q = cardano_invariants(s)
    scale = ddot(s, s) / 6.0
    hydro = p <= RADICAND_GUARD**2 * np.maximum(scale, np.finfo(float).tiny)
    p_safe = np.where(hydro, 1.0, p)
    theta = _cardano_angle(p_safe, np.where(hydro, 0.0, q), p_safe)
    r = 2.0 * np.sqrt(np.where(hydro, 0.0, p))
    l1 = m + r * np.cos(theta)
    l2 = m - r * np.cos(theta - np.pi / 3.0)
    l3 = m - r * np.cos(theta + np.pi / 3.0)
    return l1, l2, l3


def max_shear(s) -> np.ndarray:
    """Radius of the largest Mohr circle, ``(l_max - l_min) / 2``.

    In 2D this is ``sqrt(tr^2 - 4 det) / 2``. In 3D it equals
    ``sqrt(3p) cos(theta - pi/6)``; the Cardano bound ``sqrt(3p)`` (reached at
    ``theta = pi/6``) is available as :func:`max_shear_bound`.
    """
    s = np.asarray(s, dtype=float)
    if dim_of(s) == 2:
        l1, l2 = principal_stresses_2d(s)
        return 0.5 * (l1 - l2)
    l1, l2, _ = principal_stresses_3d(s)
    return 0.5 * (l1 - l2)


def max_shear_bound(s) -> np.ndarray:
    """``sqrt(sigma_d : sigma_d / 2)``; equal to :func:`max_shear` in 2D."""
    _, dev = sph_dev_split(s)
    return np.sqrt(0.5 * ddot(dev, dev))


def compression_factor(n: int, kappa: float) -> float:
    """Weight ``c`` of the spherical term: ``kappa`` in 2D, ``2 kappa / 3`` in 3D."""
    if n == 2:
        return float(kappa)
    if n == 3:
        return 2.0 * kappa / 3.0
    raise ValueError(f"dimension must be 2 or 3, got {n}")


def shear_compression_measure(s, kappa: float) -> np.ndarray:
    """``sigma_d : sigma_d - c sigma_s : sigma_s``; positive where damage is triggered."""
    s = np.asarray(s, dtype=float)
    sph, dev = sph_dev_split(s)
    return ddot(dev, dev) - compression_factor(dim_of(s), kappa) * ddot(sph, sph)
