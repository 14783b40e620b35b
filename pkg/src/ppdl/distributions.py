"""Distribution primitives: parameter types, densities, samplers, JSON forms.

All continuous distributions live on R^d with d >= 1. Finite distributions
live on {0, ..., D-1}. Parameter containers validate their invariants on
construction so downstream code can assume well-formed inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError, NumericalError
from .rng import as_generator

# Covariances with an eigenvalue below this are rejected as degenerate.
MIN_COV_EIGENVALUE = 1e-12

# Finite domains are capped so Yatracos-class enumeration stays exact.
MAX_FINITE_DOMAIN = 64

_LOG_2PI = float(np.log(2.0 * np.pi))


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ConfigError(f"expected a vector, got shape {v.shape}")
    return v


def _as_matrix(x) -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass
class GaussianParams:
    """Multivariate normal with symmetric positive definite covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = _as_vector(self.mean)
        self.covariance = _as_matrix(self.covariance)
        d = self.mean.shape[0]
        if self.covariance.shape != (d, d):
            raise ConfigError(
                f"covariance shape {self.covariance.shape} does not match dimension {d}"
            )
        if d == 1:
            # Scalar fast path; grids construct many thousands of these.
            if self.covariance[0, 0] < MIN_COV_EIGENVALUE:
                raise NumericalError(
                    f"variance {self.covariance[0, 0]:.3e} below floor {MIN_COV_EIGENVALUE:.0e}"
                )
            return
        if not np.allclose(self.covariance, self.covariance.T, rtol=1e-9, atol=1e-12):
            raise NumericalError("covariance must be symmetric")
        # Symmetrize exactly so Cholesky sees a clean matrix.
        self.covariance = 0.5 * (self.covariance + self.covariance.T)
        eigs = np.linalg.eigvalsh(self.covariance)
        if eigs[0] < MIN_COV_EIGENVALUE:
            raise NumericalError(
                f"covariance smallest eigenvalue {eigs[0]:.3e} below floor {MIN_COV_EIGENVALUE:.0e}"
            )

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass
class MixtureParams:
    """Finite mixture of same-dimension components with simplex weights."""

    components: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = _as_vector(self.weights)
        if len(self.components) != self.weights.shape[0]:
            raise ConfigError("component and weight counts differ")
        if len(self.components) == 0:
            raise ConfigError("mixture needs at least one component")
        if np.any(self.weights < 0):
            raise ConfigError("mixture weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ConfigError(f"mixture weights sum to {self.weights.sum()!r}, not 1")
        dims = {dim(c) for c in self.components}
        if len(dims) != 1:
            raise ConfigError(f"mixture components have mixed dimensions {sorted(dims)}")

    @property
    def dim(self) -> int:
        return dim(self.components[0])


@dataclass
class ProductParams:
    """Independent product; coordinates are the concatenated factor blocks."""

    factors: list

    def __post_init__(self):
        if len(self.factors) == 0:
            raise ConfigError("product needs at least one factor")

    @property
    def dim(self) -> int:
        return sum(dim(f) for f in self.factors)


@dataclass
class FiniteDist:
    """Probability masses over the finite domain {0, ..., D-1}, D <= 64."""

    masses: np.ndarray

    def __post_init__(self):
        self.masses = _as_vector(self.masses)
        if self.masses.shape[0] < 1 or self.masses.shape[0] > MAX_FINITE_DOMAIN:
            raise ConfigError(
                f"finite domain size {self.masses.shape[0]} outside [1, {MAX_FINITE_DOMAIN}]"
            )
        if np.any(self.masses < 0):
            raise ConfigError("masses must be nonnegative")
        if abs(float(self.masses.sum()) - 1.0) > 1e-12:
            raise ConfigError(f"masses sum to {self.masses.sum()!r}, not 1")

    @property
    def domain_size(self) -> int:
        return self.masses.shape[0]


Distribution = Union[GaussianParams, MixtureParams, ProductParams, FiniteDist]

_VALID_ROLES = ("public", "private")


@dataclass
class Dataset:
    """Ordered sample list with a role tag ("public" or "private").

    Continuous data has shape (n, d); finite-domain data is an integer
    array of shape (n,).
    """

    points: np.ndarray
    role: str = "private"

    def __post_init__(self):
        pts = np.asarray(self.points)
        if np.issubdtype(pts.dtype, np.integer):
            if pts.ndim != 1:
                raise ConfigError("finite-domain datasets must be 1-d integer arrays")
        else:
            pts = np.asarray(pts, dtype=float)
            if pts.ndim == 1:
                pts = pts.reshape(-1, 1)
            if pts.ndim != 2:
                raise ConfigError(f"dataset points must be (n, d), got shape {pts.shape}")
        self.points = pts
        if self.role not in _VALID_ROLES:
            raise ConfigError(f"role must be one of {_VALID_ROLES}, got {self.role!r}")

    def __len__(self) -> int:
        return self.points.shape[0]


def dim(dist: Distribution) -> int:
    """Ambient dimension (1 for finite-domain distributions)."""
    if isinstance(dist, (GaussianParams, MixtureParams, ProductParams)):
        return dist.dim
    if isinstance(dist, FiniteDist):
        return 1
    raise ConfigError(f"unknown distribution type {type(dist)!r}")


# ----------------------------- densities -----------------------------


def _gaussian_log_density(g: GaussianParams, x: np.ndarray) -> np.ndarray:
    # x: (n, d) -> (n,)
    chol = np.linalg.cholesky(g.covariance)
    diff = x - g.mean[None, :]
    z = np.linalg.solve(chol, diff.T)  # (d, n)
    quad = np.sum(z * z, axis=0)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (quad + log_det + g.dim * _LOG_2PI)


def density(dist: Distribution, x) -> np.ndarray | float:
    """Density (or mass) of dist at x.

    x may be a single point (scalar for d=1 or finite, length-d vector
    otherwise) or a batch: shape (n, d) for continuous distributions, an
    integer array for finite ones. Batch input returns shape (n,).
    """
    if isinstance(dist, FiniteDist):
        idx = np.asarray(x)
        if not np.issubdtype(idx.dtype, np.integer):
            raise ConfigError("finite-domain density expects integer domain elements")
        if np.any(idx < 0) or np.any(idx >= dist.domain_size):
            raise ConfigError("domain element out of range")
        out = dist.masses[idx]
        return float(out) if np.ndim(x) == 0 else out

    d = dim(dist)
    pts = np.asarray(x, dtype=float)
    scalar_input = pts.ndim == 0 or (pts.ndim == 1 and pts.shape[0] == d)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(1, -1) if pts.shape[0] == d else pts.reshape(-1, 1)
    if pts.shape[1] != d:
        raise ConfigError(f"point dimension {pts.shape[1]} does not match {d}")

    if isinstance(dist, GaussianParams):
        out = np.exp(_gaussian_log_density(dist, pts))
    elif isinstance(dist, MixtureParams):
        out = np.zeros(pts.shape[0])
        for w, comp in zip(dist.weights, dist.components):
            out += w * density(comp, pts)
    elif isinstance(dist, ProductParams):
        out = np.ones(pts.shape[0])
        offset = 0
        for f in dist.factors:
            fd = dim(f)
            out *= density(f, pts[:, offset : offset + fd])
            offset += fd
    else:
        raise ConfigError(f"unknown distribution type {type(dist)!r}")
    return float(out[0]) if scalar_input else out


def sample(dist: Distribution, count: int, rng, role: str = "private") -> Dataset:
    """Draw count iid samples; deterministic for a fixed seed."""
    if count < 0:
        raise ConfigError("sample count must be nonnegative")
    gen = as_generator(rng)

    if isinstance(dist, FiniteDist):
        pts = gen.choice(dist.domain_size, size=count, p=dist.masses)
        return Dataset(points=pts.astype(np.int64), role=role)

    d = dim(dist)
    if isinstance(dist, GaussianParams):
        chol = np.linalg.cholesky(dist.covariance)
        z = gen.standard_normal((count, d))
        pts = dist.mean[None, :] + z @ chol.T
    elif isinstance(dist, MixtureParams):
        counts = gen.multinomial(count, dist.weights)
        blocks = []
        for c, comp in zip(counts, dist.components):
            blocks.append(sample(comp, int(c), gen, role=role).points)
        pts = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, d))
        gen.shuffle(pts, axis=0)
    elif isinstance(dist, ProductParams):
        cols = [sample(f, count, gen, role=role).points for f in dist.factors]
        pts = np.concatenate(cols, axis=1)
    else:
        raise ConfigError(f"unknown distribution type {type(dist)!r}")
    return Dataset(points=pts, role=role)


# --------------------------- serialization ---------------------------


def dist_to_dict(dist: Distribution) -> dict:
    """JSON-ready dict with a "kind" discriminator; row-major matrices."""
    if isinstance(dist, GaussianParams):
        return {
            "kind": "gaussian",
            "mean": dist.mean.tolist(),
            "covariance": dist.covariance.tolist(),
        }
    if isinstance(dist, MixtureParams):
        return {
            "kind": "mixture",
            "weights": dist.weights.tolist(),
            "components": [dist_to_dict(c) for c in dist.components],
        }
    if isinstance(dist, ProductParams):
        return {"kind": "product", "factors": [dist_to_dict(f) for f in dist.factors]}
    if isinstance(dist, FiniteDist):
        return {"kind": "finite", "masses": dist.masses.tolist()}
    raise ConfigError(f"unknown distribution type {type(dist)!r}")


def dist_from_dict(obj: dict) -> Distribution:
    """Inverse of dist_to_dict; validates on construction."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("distribution object must be a dict with a 'kind' key")
    kind = obj["kind"]
    try:
        if kind == "gaussian":
            return GaussianParams(mean=obj["mean"], covariance=obj["covariance"])
        if kind == "mixture":
            comps = [dist_from_dict(c) for c in obj["components"]]
            return MixtureParams(components=comps, weights=obj["weights"])
        if kind == "product":
            return ProductParams(factors=[dist_from_dict(f) for f in obj["factors"]])
        if kind == "finite":
            return FiniteDist(masses=obj["masses"])
    except KeyError as exc:
        raise ConfigError(f"distribution object missing field {exc}") from exc
    raise ConfigError(f"unknown distribution kind {kind!r}")


def dist_to_json(dist: Distribution) -> str:
    return json.dumps(dist_to_dict(dist))


def dist_from_json(text: str) -> Distribution:
    return dist_from_dict(json.loads(text))


def dataset_to_dict(ds: Dataset) -> dict:
    return {"points": ds.points.tolist(), "role": ds.role}


def dataset_from_dict(obj: dict) -> Dataset:
    try:
        pts = obj["points"]
    except (KeyError, TypeError) as exc:
        raise ConfigError("dataset object must have a 'points' field") from exc
    arr = np.asarray(pts)
    # A 1-d integer list is a finite-domain dataset; anything else is float.
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
        arr = arr.astype(np.int64)
    else:
        arr = np.asarray(arr, dtype=float)
    return Dataset(points=arr, role=obj.get("role", "private"))
