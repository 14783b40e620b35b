"""Distribution containers: validation, densities, sampling, JSON forms."""
import json
import math

import numpy as np
import pytest

from ppdl import Dataset, FiniteDist, GaussianParams, MixtureParams, ProductParams
from ppdl.distributions import (
    dataset_from_dict,
    dataset_to_dict,
    density,
    dim,
    dist_from_dict,
    dist_from_json,
    dist_to_dict,
    dist_to_json,
    sample,
)
from ppdl.errors import ConfigError, NumericalError
from ppdl.rng import as_generator


def g1(mean, var):
    return GaussianParams(mean=[mean], covariance=[[var]])


def phi(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


# ------------------------------ densities ------------------------------


def test_standard_normal_peak():
    assert density(g1(0.0, 1.0), 0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-12)


def test_standard_normal_peak_2d():
    g = GaussianParams(mean=[0.0, 0.0], covariance=np.eye(2))
    assert density(g, [0.0, 0.0]) == pytest.approx(1.0 / (2 * math.pi), abs=1e-12)


def test_mixture_density_direct_formula():
    mix = MixtureParams(components=[g1(0.0, 1.0), g1(4.0, 1.0)], weights=[0.5, 0.5])
    expected = 0.5 * phi(2.0) + 0.5 * phi(-2.0)
    assert density(mix, 2.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.05399, abs=5e-6)


def test_product_density_factorizes():
    prod = ProductParams(factors=[g1(0.0, 1.0), g1(1.0, 2.0)])
    got = density(prod, [0.3, -0.7])
    want = density(g1(0.0, 1.0), 0.3) * density(g1(1.0, 2.0), -0.7)
    assert got == pytest.approx(want, rel=1e-12)


def test_density_batch_shape():
    xs = np.linspace(-3, 3, 11).reshape(-1, 1)
    out = density(g1(0.0, 1.0), xs)
    assert out.shape == (11,)
    assert out[5] == pytest.approx(phi(0.0), abs=1e-12)


def test_density_dimension_mismatch():
    g = GaussianParams(mean=[0.0, 0.0], covariance=np.eye(2))
    with pytest.raises(ConfigError):
        density(g, np.zeros((4, 3)))


def test_finite_mass_lookup():
    f = FiniteDist(masses=[0.2, 0.3, 0.5])
    assert density(f, 2) == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        density(f, 3)
    with pytest.raises(ConfigError):
        density(f, 0.5)


# ------------------------------ validation ------------------------------


def test_covariance_must_match_dimension():
    with pytest.raises(ConfigError):
        GaussianParams(mean=[0.0, 0.0], covariance=np.eye(3))


def test_covariance_must_be_symmetric():
    with pytest.raises(NumericalError):
        GaussianParams(mean=[0.0, 0.0], covariance=[[1.0, 0.5], [0.2, 1.0]])


def test_covariance_eigenvalue_floor():
    with pytest.raises(NumericalError):
        g1(0.0, 1e-13)
    with pytest.raises(NumericalError):
        GaussianParams(mean=[0.0, 0.0], covariance=[[1.0, 1.0], [1.0, 1.0]])


def test_mixture_weight_validation():
    with pytest.raises(ConfigError):
        MixtureParams(components=[g1(0, 1)], weights=[0.5])
    with pytest.raises(ConfigError):
        MixtureParams(components=[g1(0, 1), g1(1, 1)], weights=[0.7, 0.7])
    with pytest.raises(ConfigError):
        MixtureParams(components=[g1(0, 1), g1(1, 1)], weights=[1.2, -0.2])


def test_mixture_dimension_consistency():
    g2 = GaussianParams(mean=[0.0, 0.0], covariance=np.eye(2))
    with pytest.raises(ConfigError):
        MixtureParams(components=[g1(0, 1), g2], weights=[0.5, 0.5])


def test_finite_masses_validation():
    with pytest.raises(ConfigError):
        FiniteDist(masses=[0.5, 0.6])
    with pytest.raises(ConfigError):
        FiniteDist(masses=[-0.1, 1.1])
    with pytest.raises(ConfigError):
        FiniteDist(masses=np.full(65, 1.0 / 65))
    assert FiniteDist(masses=np.full(64, 1.0 / 64)).domain_size == 64


def test_dataset_roles_and_shapes():
    with pytest.raises(ConfigError):
        Dataset(points=np.zeros((3, 1)), role="secret")
    ds = Dataset(points=[1.0, 2.0, 3.0], role="public")
    assert ds.points.shape == (3, 1)
    fin = Dataset(points=np.array([0, 1, 1], dtype=np.int64), role="private")
    assert fin.points.ndim == 1
    with pytest.raises(ConfigError):
        Dataset(points=np.zeros((2, 2, 2)))


def test_dim_helper():
    assert dim(g1(0, 1)) == 1
    assert dim(ProductParams(factors=[g1(0, 1)] * 3)) == 3
    assert dim(FiniteDist(masses=[1.0])) == 1


# ------------------------------ sampling ------------------------------


def test_sampling_determinism():
    a = sample(g1(0.0, 1.0), 5, 7).points
    b = sample(g1(0.0, 1.0), 5, 7).points
    assert np.array_equal(a, b)
    c = sample(g1(0.0, 1.0), 5, 8).points
    assert not np.array_equal(a, c)


def test_point_mass_sampling():
    atoms = sample(FiniteDist(masses=[1.0]), 3, 0).points
    assert np.array_equal(atoms, np.zeros(3, dtype=np.int64))


def test_sample_mean_clt():
    pts = sample(g1(3.0, 1.0), 100_000, 42).points
    assert abs(float(pts.mean()) - 3.0) < 0.02


def test_mixture_sampling_weights():
    mix = MixtureParams(
        components=[g1(-50.0, 1.0), g1(50.0, 1.0)], weights=[0.3, 0.7]
    )
    pts = sample(mix, 100_000, 5).points
    frac_hi = float((pts > 0).mean())
    assert abs(frac_hi - 0.7) < 0.01


def test_product_sampling_dim():
    prod = ProductParams(factors=[g1(0.0, 1.0), g1(5.0, 1.0)])
    ds = sample(prod, 1000, 3)
    assert ds.points.shape == (1000, 2)
    assert abs(float(ds.points[:, 1].mean()) - 5.0) < 0.15


def test_sample_count_validation():
    with pytest.raises(ConfigError):
        sample(g1(0, 1), -1, 0)
    assert len(sample(g1(0, 1), 0, 0)) == 0


# ------------------------------ serialization ------------------------------


def test_json_roundtrip_all_kinds():
    g2 = GaussianParams(mean=[0.5, -1.0], covariance=[[2.0, 0.3], [0.3, 1.0]])
    mix = MixtureParams(components=[g1(0, 1), g1(3, 2)], weights=[0.25, 0.75])
    prod = ProductParams(factors=[g1(0, 1), g2])
    fin = FiniteDist(masses=[0.125, 0.875])
    for dist in (g1(1.5, 0.25), g2, mix, prod, fin):
        back = dist_from_json(dist_to_json(dist))
        assert type(back) is type(dist)
        assert dist_to_dict(back) == dist_to_dict(dist)


def test_json_full_precision():
    g = g1(1.0 / 3.0, 2.0 / 3.0)
    obj = json.loads(dist_to_json(g))
    assert obj["mean"][0] == 1.0 / 3.0
    assert obj["covariance"][0][0] == 2.0 / 3.0


def test_dist_from_dict_validation():
    with pytest.raises(ConfigError):
        dist_from_dict({"mean": [0.0]})
    with pytest.raises(ConfigError):
        dist_from_dict({"kind": "laplace"})
    with pytest.raises(ConfigError):
        dist_from_dict({"kind": "gaussian", "mean": [0.0]})


def test_dataset_roundtrip():
    ds = Dataset(points=[[1.0, 2.0], [3.0, 4.0]], role="public")
    back = dataset_from_dict(dataset_to_dict(ds))
    assert back.role == "public"
    assert np.array_equal(back.points, ds.points)
