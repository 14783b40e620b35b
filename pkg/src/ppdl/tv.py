"""Total variation distances: exact 1-d Gaussian, exact finite, Monte Carlo.

The exact 1-d path works through the region {p > q}. For two Gaussian
densities the log-density difference is a quadratic, so that region is one
of: empty, the whole line, a half-line, an interval, or the complement of
an interval. TV(p, q) equals P_p(region) - P_q(region), computed from the
normal CDF at the region endpoints. The same region machinery, vectorized
over candidate pairs, backs the fast Scheffe-tournament path.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from .distributions import (
    Dataset,
    Distribution,
    FiniteDist,
    GaussianParams,
    density,
    sample,
)
from .errors import ConfigError
from .rng import as_generator

# Region kinds for {p1 > p2} between two 1-d Gaussians.
R_EMPTY = 0
R_FULL = 1
R_INSIDE = 2   # (lo, hi)
R_OUTSIDE = 3  # (-inf, lo) union (hi, +inf)
R_RIGHT = 4    # (lo, +inf)
R_LEFT = 5     # (-inf, hi)


def is_gaussian_1d(dist: Distribution) -> bool:
    return isinstance(dist, GaussianParams) and dist.dim == 1


def gaussian_1d_params(dist: GaussianParams) -> tuple[float, float]:
    """(mean, variance) of a 1-d Gaussian."""
    if not is_gaussian_1d(dist):
        raise ConfigError("expected a 1-d Gaussian")
    return float(dist.mean[0]), float(dist.covariance[0, 0])


def gauss1d_regions(mu1, var1, mu2, var2):
    """Vectorized region {p1 > p2} for 1-d Gaussian pairs.

    Inputs broadcast against each other; returns (kind, lo, hi) arrays of
    the broadcast shape. lo/hi are only meaningful where the kind uses them.
    """
    mu1, var1, mu2, var2 = np.broadcast_arrays(
        np.asarray(mu1, float), np.asarray(var1, float),
        np.asarray(mu2, float), np.asarray(var2, float),
    )
    shape = mu1.shape
    kind = np.zeros(shape, dtype=np.int8)
    lo = np.zeros(shape)
    hi = np.zeros(shape)

    # log p1 - log p2 = a x^2 + b x + c
    a = 0.5 / var2 - 0.5 / var1
    b = mu1 / var1 - mu2 / var2
    c = (
        mu2 * mu2 / (2.0 * var2)
        - mu1 * mu1 / (2.0 * var1)
        + 0.5 * np.log(var2 / var1)
    )

    lin = a == 0.0
    if np.any(lin):
        bl, cl = b[lin], c[lin]
        k = np.zeros(bl.shape, dtype=np.int8)
        llo = np.zeros(bl.shape)
        lhi = np.zeros(bl.shape)
        # b == 0 with a == 0: identical parameters, strict region empty.
        pos = bl > 0
        neg = bl < 0
        k[pos] = R_RIGHT
        llo[pos] = -cl[pos] / bl[pos]
        k[neg] = R_LEFT
        lhi[neg] = -cl[neg] / bl[neg]
        kind[lin], lo[lin], hi[lin] = k, llo, lhi

    quad = ~lin
    if np.any(quad):
        aq, bq, cq = a[quad], b[quad], c[quad]
        disc = bq * bq - 4.0 * aq * cq
        k = np.zeros(aq.shape, dtype=np.int8)
        qlo = np.zeros(aq.shape)
        qhi = np.zeros(aq.shape)
        has_roots = disc > 0
        sq = np.sqrt(np.where(has_roots, disc, 0.0))
        r1 = (-bq + sq) / (2.0 * aq)
        r2 = (-bq - sq) / (2.0 * aq)
        rlo = np.minimum(r1, r2)
        rhi = np.maximum(r1, r2)
        up = aq > 0
        # Opens upward: positive outside the roots, or everywhere if no roots.
        k[up & has_roots] = R_OUTSIDE
        k[up & ~has_roots] = R_FULL
        # Opens downward: positive between the roots, or nowhere.
        k[~up & has_roots] = R_INSIDE
        k[~up & ~has_roots] = R_EMPTY
        use = has_roots
        qlo[use] = rlo[use]
        qhi[use] = rhi[use]
        kind[quad], lo[quad], hi[quad] = k, qlo, qhi

    return kind, lo, hi


def gauss1d_region_prob(mu, var, kind, lo, hi) -> np.ndarray:
    """P_{N(mu, var)} of regions produced by gauss1d_regions (broadcasts)."""
    mu, var, kind, lo, hi = np.broadcast_arrays(
        np.asarray(mu, float), np.asarray(var, float), kind, lo, hi
    )
    sd = np.sqrt(var)
    flo = ndtr((lo - mu) / sd)
    fhi = ndtr((hi - mu) / sd)
    out = np.zeros(kind.shape)
    out = np.where(kind == R_FULL, 1.0, out)
    out = np.where(kind == R_INSIDE, fhi - flo, out)
    out = np.where(kind == R_OUTSIDE, 1.0 - (fhi - flo), out)
    out = np.where(kind == R_RIGHT, 1.0 - flo, out)
    out = np.where(kind == R_LEFT, fhi, out)
    return np.clip(out, 0.0, 1.0)


def empirical_region_counts(sorted_x: np.ndarray, kind, lo, hi) -> np.ndarray:
    """Counts of sorted 1-d samples falling strictly inside each region."""
    kind = np.asarray(kind)
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    n = sorted_x.shape[0]
    lo_left = np.searchsorted(sorted_x, lo, side="left")
    lo_right = np.searchsorted(sorted_x, lo, side="right")
    hi_left = np.searchsorted(sorted_x, hi, side="left")
    hi_right = np.searchsorted(sorted_x, hi, side="right")
    out = np.zeros(kind.shape, dtype=np.int64)
    out = np.where(kind == R_FULL, n, out)
    out = np.where(kind == R_INSIDE, hi_left - lo_right, out)
    out = np.where(kind == R_OUTSIDE, lo_left + (n - hi_right), out)
    out = np.where(kind == R_RIGHT, n - lo_right, out)
    out = np.where(kind == R_LEFT, hi_left, out)
    return out


def tv_exact_gaussian_1d(p: GaussianParams, q: GaussianParams) -> float:
    """Exact TV between two 1-d Gaussians via density-crossing regions."""
    mu1, var1 = gaussian_1d_params(p)
    mu2, var2 = gaussian_1d_params(q)
    # Canonical argument order makes the result bit-exact symmetric.
    if (mu2, var2) < (mu1, var1):
        mu1, var1, mu2, var2 = mu2, var2, mu1, var1
    kind, lo, hi = gauss1d_regions(mu1, var1, mu2, var2)
    pp = gauss1d_region_prob(mu1, var1, kind, lo, hi)
    pq = gauss1d_region_prob(mu2, var2, kind, lo, hi)
    return float(np.clip(pp - pq, 0.0, 1.0))


def tv_lower_bound_1d(p: GaussianParams, q: GaussianParams) -> float:
    """Certified lower bound on TV between 1-d Gaussians.

    TV >= (1/200) * min(1, max(|v1 - v2| / v1, 40 |m1 - m2| / sd1)).
    Asymmetric in its arguments by construction; both orderings are valid
    lower bounds.
    """
    mu1, var1 = gaussian_1d_params(p)
    mu2, var2 = gaussian_1d_params(q)
    term = max(abs(var1 - var2) / var1, 40.0 * abs(mu1 - mu2) / np.sqrt(var1))
    return min(1.0, term) / 200.0


def tv_finite(p: FiniteDist, q: FiniteDist) -> float:
    """Exact TV on a shared finite domain (half L1)."""
    if p.domain_size != q.domain_size:
        raise ConfigError("finite distributions live on different domains")
    return 0.5 * float(np.abs(p.masses - q.masses).sum())


def tv_monte_carlo(
    p: Distribution, q: Distribution, trials: int, rng
) -> tuple[float, float]:
    """Monte Carlo TV estimate with a 95% half-width.

    Uses TV = P_{x~p}[p(x) > q(x)] - P_{x~q}[p(x) > q(x)]; each probability
    is estimated from `trials` draws, so the two indicator variances add.
    """
    if trials < 100:
        raise ConfigError("tv_monte_carlo needs at least 100 trials")
    gen = as_generator(rng)
    xp = sample(p, trials, gen).points
    xq = sample(q, trials, gen).points
    ind_p = (density(p, xp) > density(q, xp)).astype(float)
    ind_q = (density(p, xq) > density(q, xq)).astype(float)
    mp, mq = float(ind_p.mean()), float(ind_q.mean())
    est = float(np.clip(mp - mq, 0.0, 1.0))
    var_sum = mp * (1.0 - mp) + mq * (1.0 - mq)
    half = 1.96 * float(np.sqrt(var_sum / trials))
    return est, half


def tv_between(
    p: Distribution, q: Distribution, trials: int = 20000, rng=None
) -> tuple[float, float, str]:
    """(tv, half_width, method): exact where available, else Monte Carlo."""
    if is_gaussian_1d(p) and is_gaussian_1d(q):
        return tv_exact_gaussian_1d(p, q), 0.0, "exact-gaussian-1d"
    if isinstance(p, FiniteDist) and isinstance(q, FiniteDist):
        return tv_finite(p, q), 0.0, "exact-finite"
    if rng is None:
        raise ConfigError("Monte Carlo TV needs an rng seed")
    est, half = tv_monte_carlo(p, q, trials, rng)
    return est, half, "monte-carlo"


def point_set_distance(
    p: Distribution, candidates: list, trials: int = 20000, rng=None
) -> tuple[float, int]:
    """Distance from p to a finite candidate list: (min TV, smallest argmin).

    Exact pairwise paths are used where available; Monte Carlo otherwise
    (which then requires an rng).
    """
    if len(candidates) == 0:
        raise ConfigError("candidate list is empty")
    gen = as_generator(rng) if rng is not None else None
    best_tv, best_idx = np.inf, -1
    for i, cand in enumerate(candidates):
        tv, _, _ = tv_between(p, cand, trials=trials, rng=gen)
        if tv < best_tv - 1e-15:
            best_tv, best_idx = tv, i
    return float(best_tv), int(best_idx)
