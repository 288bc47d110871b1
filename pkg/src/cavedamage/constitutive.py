"""Material parameters and pointwise laws of the three damage models.

Strains and stresses are packed 2D symmetric tensors ``(xx, yy, xy)``
(see :mod:`cavedamage.tensors`); kinematics are plane strain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import tensors


class DamageModel(enum.Enum):
    ISOTROPIC = "isotropic"
    SHEAR = "shear"
    SHEAR_COMPRESSION = "shear-compression"

    @classmethod
    def parse(cls, value) -> "DamageModel":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown damage model {value!r}; expected one of {[m.value for m in cls]}")


@dataclass(frozen=True)
class MaterialParams:
    """Elastic, damage and loading constants (SI units).

    Defaults are the rock-mass values used for the block-caving runs; the
    internal length ``ell`` has no published value and defaults to three
    25 m elements.
    """

    E: float = 2.9e10
    nu: float = 0.3
    w1: float = 1.0e5
    ell: float = 75.0
    kappa: float = 1.0
    rho: float = 2.7e3
    g: tuple[float, float] = (0.0, -9.8)
    lam: float = field(init=False, repr=False)
    mu: float = field(init=False, repr=False)

    def __post_init__(self):
        lam, mu = tensors.lame_parameters(self.E, self.nu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        if len(self.g) != 2:
            raise ValueError("gravity must have two components")
        if not self.w1 > 0:
            raise ValueError(f"w1 must be positive, got {self.w1}")
        if not self.ell > 0:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")
        if not self.rho >= 0:
            raise ValueError(f"rho must be non-negative, got {self.rho}")

    @property
    def body_force(self) -> np.ndarray:
        return self.rho * np.asarray(self.g)


def _check_damage(alpha):
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha < 0.0) | (alpha > 1.0)) or np.any(np.isnan(alpha)):
        raise ValueError("damage must lie in [0, 1]")
    return alpha


def degradation(alpha):
    """Stiffness degradation ``a = (1 - alpha)^2`` and its derivative."""
    alpha = _check_damage(alpha)
    return (1.0 - alpha) ** 2, -2.0 * (1.0 - alpha)


def dissipation(alpha, w1: float):
    """Local dissipated energy ``w = w1 alpha^2`` and its derivative."""
    alpha = _check_damage(alpha)
    return w1 * alpha**2, 2.0 * w1 * alpha


def hooke(eps, mat: MaterialParams) -> np.ndarray:
    """Undamaged plane-strain stress ``A0 eps = 2 mu eps + lambda tr(eps) I``."""
    eps = np.asarray(eps, dtype=float)
    return 2.0 * mat.mu * eps + mat.lam * tensors.trace(eps)[..., None] * tensors.identity(2)


def stress(model, eps, alpha, mat: MaterialParams) -> np.ndarray:
    model = DamageModel.parse(model)
    a, _ = degradation(alpha)
    a = np.asarray(a)[..., None]
    if model is DamageModel.SHEAR:
        sph, dev = tensors.sph_dev_split(eps)
        return (2.0 * mat.mu + 2.0 * mat.lam) * sph + 2.0 * a * mat.mu * dev
    return a * hooke(eps, mat)


def elastic_energy_density(model, eps, alpha, mat: MaterialParams):
    """Damage-dependent bulk density of the model's damage functional.

    Excludes the dissipation and gradient terms. For the shear-compression
    model this is the criterion potential
    ``a^2 / 2E ((A0 eps)_d : (A0 eps)_d - kappa (A0 eps)_s : (A0 eps)_s)``,
    which is negative under dominant compression.
    """
    model = DamageModel.parse(model)
    a, _ = degradation(alpha)
    eps = np.asarray(eps, dtype=float)
    if model is DamageModel.ISOTROPIC:
        return 0.5 * a * tensors.ddot(hooke(eps, mat), eps)
    if model is DamageModel.SHEAR:
        _, dev = tensors.sph_dev_split(eps)
        return (mat.lam + mat.mu) * tensors.trace(eps) ** 2 / 2.0 + a * mat.mu * tensors.ddot(dev, dev)
    return a**2 / (2.0 * mat.E) * tensors.shear_compression_measure(hooke(eps, mat), mat.kappa)


def damage_driving_derivative(model, eps, alpha, mat: MaterialParams):
    """Derivative in ``alpha`` of :func:`elastic_energy_density` at fixed strain."""
    model = DamageModel.parse(model)
    a, da = degradation(alpha)
    eps = np.asarray(eps, dtype=float)
    if model is DamageModel.ISOTROPIC:
        return 0.5 * da * tensors.ddot(hooke(eps, mat), eps)
    if model is DamageModel.SHEAR:
        _, dev = tensors.sph_dev_split(eps)
        return da * mat.mu * tensors.ddot(dev, dev)
    return 2.0 * a * da / (2.0 * mat.E) * tensors.shear_compression_measure(hooke(eps, mat), mat.kappa)


# exponent k of (1 - alpha)^k in each model's bulk density
DEGRADATION_POWER = {
    DamageModel.ISOTROPIC: 2,
    DamageModel.SHEAR: 2,
    DamageModel.SHEAR_COMPRESSION: 4,
}


def bulk_coefficients(model, eps, mat: MaterialParams) -> tuple[np.ndarray, np.ndarray, int]:
    """Damage-independent brackets of the bulk density.

    Returns ``(const, coef, k)`` such that
    ``elastic_energy_density = const + coef * (1 - alpha)**k``. Vectorized
    over a ``(..., 3)`` array of strains; computed once per elastic solve and
    reused by every damage-functional evaluation.
    """
    model = DamageModel.parse(model)
    eps = np.asarray(eps, dtype=float)
    xx, yy, xy = eps[..., 0], eps[..., 1], eps[..., 2]
    tr = xx + yy
    dev2 = 0.5 * (xx - yy) ** 2 + 2.0 * xy**2  # eps_d : eps_d
    lam, mu = mat.lam, mat.mu
    k = DEGRADATION_POWER[model]
    if model is DamageModel.ISOTROPIC:
        # A0 eps : eps = 2 mu eps:eps + lam tr^2 = 2 mu dev2 + (lam + mu) tr^2
        return np.zeros_like(tr), 0.5 * (2.0 * mu * dev2 + (lam + mu) * tr**2), k
    if model is DamageModel.SHEAR:
        return 0.5 * (lam + mu) * tr**2, mu * dev2, k
    dev_part = 4.0 * mu**2 * dev2
    sph_part = 2.0 * (lam + mu) ** 2 * tr**2
    return np.zeros_like(tr), (dev_part - mat.kappa * sph_part) / (2.0 * mat.E), k
