import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavedamage import tensors as T
from cavedamage.constitutive import (
    DamageModel,
    MaterialParams,
    bulk_coefficients,
    damage_driving_derivative,
    degradation,
    dissipation,
    elastic_energy_density,
    hooke,
    stress,
)

MODELS = list(DamageModel)
MAT = MaterialParams()


def random_strains(rng, n=50):
    return rng.normal(size=(n, 3)) * 1e-3


def test_defaults():
    m = MaterialParams()
    assert (m.E, m.nu, m.kappa, m.rho, m.g) == (2.9e10, 0.3, 1.0, 2.7e3, (0.0, -9.8))
    np.testing.assert_allclose(m.body_force, [0.0, -2.7e3 * 9.8])


@pytest.mark.parametrize("bad", [dict(w1=0.0), dict(ell=-1.0), dict(kappa=-0.1), dict(nu=0.5), dict(E=-1.0),
                                 dict(g=(1.0, 2.0, 3.0)), dict(rho=-1.0)])
def test_material_validation(bad):
    with pytest.raises(ValueError):
        MaterialParams(**bad)


def test_model_parse():
    assert DamageModel.parse("Shear_Compression") is DamageModel.SHEAR_COMPRESSION
    assert DamageModel.parse(DamageModel.SHEAR) is DamageModel.SHEAR
    with pytest.raises(ValueError, match="unknown damage model"):
        DamageModel.parse("plastic")


@given(st.floats(0.0, 1.0))
def test_degradation_and_dissipation(alpha):
    a, da = degradation(alpha)
    assert a == pytest.approx((1 - alpha) ** 2)
    assert da == pytest.approx(-2 * (1 - alpha))
    w, dw = dissipation(alpha, 3.0)
    assert w == pytest.approx(3.0 * alpha**2)
    assert dw == pytest.approx(6.0 * alpha)


@pytest.mark.parametrize("alpha", [-0.1, 1.1, np.nan])
def test_damage_outside_unit_interval_rejected(alpha):
    with pytest.raises(ValueError):
        degradation(alpha)
    with pytest.raises(ValueError):
        dissipation(alpha, 1.0)


def test_hooke_matches_voigt_plane_strain_matrix():
    E, nu = MAT.E, MAT.nu
    D = E / ((1 + nu) * (1 - 2 * nu)) * np.array([[1 - nu, nu, 0], [nu, 1 - nu, 0], [0, 0, (1 - 2 * nu) / 2]])
    rng = np.random.default_rng(0)
    eps = random_strains(rng)
    voigt = eps * [1, 1, 2]
    np.testing.assert_allclose(hooke(eps, MAT), voigt @ D.T, rtol=1e-12)


@pytest.mark.parametrize("model", MODELS)
def test_bulk_coefficients_reproduce_density(model):
    rng = np.random.default_rng(1)
    eps = random_strains(rng)
    alpha = rng.uniform(0, 1, len(eps))
    const, coef, k = bulk_coefficients(model, eps, MAT)
    direct = elastic_energy_density(model, eps, alpha, MAT)
    np.testing.assert_allclose(const + coef * (1 - alpha) ** k, direct, rtol=1e-11, atol=1e-20)


@pytest.mark.parametrize("model", MODELS)
def test_driving_derivative_matches_finite_differences(model):
    rng = np.random.default_rng(2)
    eps = random_strains(rng)
    alpha = rng.uniform(0.05, 0.95, len(eps))
    h = 1e-6
    fd = (elastic_energy_density(model, eps, alpha + h, MAT) - elastic_energy_density(model, eps, alpha - h, MAT)) / (
        2 * h
    )
    np.testing.assert_allclose(damage_driving_derivative(model, eps, alpha, MAT), fd, rtol=1e-6)


@pytest.mark.parametrize("model", [DamageModel.ISOTROPIC, DamageModel.SHEAR])
def test_stress_is_strain_derivative_of_density(model):
    rng = np.random.default_rng(3)
    eps = random_strains(rng, 10)
    alpha = rng.uniform(0, 1, len(eps))
    sig = stress(model, eps, alpha, MAT)
    h = 1e-9
    for c, weight in ((0, 1.0), (1, 1.0), (2, 0.5)):
        e = np.zeros(3)
        e[c] = h
        fd = (elastic_energy_density(model, eps + e, alpha, MAT) - elastic_energy_density(model, eps - e, alpha, MAT)) / (
            2 * h
        )
        # the packed off-diagonal appears twice in eps : eps
        np.testing.assert_allclose(weight * fd, sig[:, c], rtol=1e-5)


def test_shear_model_keeps_volumetric_stiffness():
    eps = np.array([1e-3, 1e-3, 0.0])  # purely spherical
    s0 = stress("shear", eps, 0.0, MAT)
    s1 = stress("shear", eps, 1.0, MAT)
    np.testing.assert_allclose(s0, s1)
    np.testing.assert_allclose(stress("isotropic", eps, 1.0, MAT), 0.0)


def test_shear_compression_density_sign():
    comp = np.array([-1e-3, -1e-3, 0.0])
    shear = np.array([0.0, 0.0, 1e-3])
    assert elastic_energy_density("shear-compression", comp, 0.0, MAT) < 0
    assert elastic_energy_density("shear-compression", shear, 0.0, MAT) > 0
    # kappa = 0 leaves only the deviatoric stress
    mat0 = MaterialParams(kappa=0.0)
    dev = T.sph_dev_split(hooke(comp + shear, mat0))[1]
    expected = T.ddot(dev, dev) / (2 * mat0.E)
    assert elastic_energy_density("shear-compression", comp + shear, 0.0, mat0) == pytest.approx(expected)
