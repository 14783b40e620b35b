"""Hard-family laboratory: flat Gaussians probed through a fixed cylinder.

The family consists of unit-variance Gaussians compressed by a factor
1/k along one axis u (covariance I + (1/k^2 - 1) u u^T), with mean
(t, 0) for t in the (d-1)-ball of radius 1/2 and u restricted to
|u . e_d| <= sqrt(3)/2. The quantities measured here drive the
no-free-lunch accounting that rules out list learning (and hence
public-private learning) from d-1 public samples:

  eta  - probability that d-1 draws from a random instance all land in
         the cylinder C = {|x_{1..d-1}| <= 1/2, 1 <= x_d <= 2};
  u_k  - closed-form supremum of the (d-1)-point joint density over
         instances and point tuples in C^{d-1};
  c    - the density-ratio constant exp(9(d-1)/2) between the per-point
         peak scale e^{-1/2} and the floor scale e^{-5};
  r_k  - fraction of random instances NOT certified TV-far from a worst
         -case instance (conservative stand-in for the TV-ball mass);
  s_k  - worst-case-over-x probability that a random instance keeps its
         (d-1)-point density at x above the floor u_k / c.

Certificates are sound by construction: axis separation of at least
sqrt(2 pi)/(2k) in angle, or a mean shift of at least 1/(20k) along the
first instance's in-disk axis direction, each forces TV >= 1/200.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .distributions import GaussianParams
from .errors import ConfigError
from .rng import as_generator, derive_seed

SLICE_MAX_AXIS_DOT = math.sqrt(3.0) / 2.0
TV_CERTIFIED_FLOOR = 1.0 / 200.0
MAX_LAB_DIM = 4


@dataclass
class CylinderSpec:
    """Radial bound on the first d-1 coordinates, height range on the last."""

    radius: float = 0.5
    height_lo: float = 1.0
    height_hi: float = 2.0

    def __post_init__(self):
        if self.radius <= 0 or self.height_lo >= self.height_hi:
            raise ConfigError("cylinder needs radius > 0 and height_lo < height_hi")


@dataclass
class FlatGaussianParams:
    """Index (k, t, u) of one instance: squeeze 1/k along u, mean (t, 0)."""

    k: float
    t: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        self.t = np.atleast_1d(np.asarray(self.t, dtype=float))
        self.u = np.asarray(self.u, dtype=float)
        d = self.u.shape[0]
        if self.t.shape[0] != d - 1:
            raise ConfigError(f"t must have dimension d-1={d - 1}")
        if abs(np.linalg.norm(self.u) - 1.0) > 1e-9:
            raise ConfigError("u must be a unit vector")
        if np.linalg.norm(self.t) > 0.5 + 1e-9:
            raise ConfigError("t must lie in the ball of radius 1/2")
        if abs(self.u[-1]) > SLICE_MAX_AXIS_DOT + 1e-9:
            raise ConfigError("u must satisfy |u . e_d| <= sqrt(3)/2")

    @property
    def dim(self) -> int:
        return self.u.shape[0]


def make_flat_gaussian(params: FlatGaussianParams) -> GaussianParams:
    """Gaussian with mean (t, 0) and covariance I + (1/k^2 - 1) u u^T.

    Equals R diag(1/k^2, 1, ..., 1) R^T for any orthonormal R whose
    first column is u; the completion choice does not matter.
    """
    d = params.dim
    mean = np.concatenate([params.t, [0.0]])
    sigma2 = 1.0 / params.k**2
    cov = np.eye(d) + (sigma2 - 1.0) * np.outer(params.u, params.u)
    return GaussianParams(mean=mean, covariance=cov)


def householder_basis(u) -> np.ndarray:
    """Orthonormal matrix whose first column is u (Householder completion)."""
    u = np.asarray(u, dtype=float)
    d = u.shape[0]
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ConfigError("u must be a unit vector")
    e1 = np.zeros(d)
    e1[0] = 1.0
    v = u - e1
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return np.eye(d)
    return np.eye(d) - 2.0 * np.outer(v, v) / (nv * nv)


def in_cylinder(x, spec: CylinderSpec = CylinderSpec()):
    """Membership of points (last axis is the coordinate axis)."""
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    if scalar:
        pts = pts[None, :]
    radial = np.linalg.norm(pts[..., :-1], axis=-1)
    height = pts[..., -1]
    ok = (radial <= spec.radius) & (height >= spec.height_lo) & (height <= spec.height_hi)
    return bool(ok[0]) if scalar else ok


def u_k_value(k: float, d: int) -> float:
    """Joint-density supremum ((2pi)^{-d/2} k e^{-1/2})^{d-1}.

    Attained by the instance with t = 0, u = e_1 at the point tuple
    (e_d, ..., e_d).
    """
    if d < 2:
        raise ConfigError("d must be at least 2")
    if k < 1:
        raise ConfigError("k must be at least 1")
    single = (2.0 * math.pi) ** (-d / 2.0) * k * math.exp(-0.5)
    return single ** (d - 1)


def c_value(d: int) -> float:
    """Density-ratio constant exp(9(d-1)/2) between peak and floor scales."""
    if d < 2:
        raise ConfigError("d must be at least 2")
    return math.exp(9.0 * (d - 1) / 2.0)


def spherical_cap_fraction(d: int, theta: float) -> float:
    """Area fraction of a spherical cap of angle theta on the sphere in R^d."""
    if d < 2:
        raise ConfigError("d must be at least 2")
    if not (0 <= theta <= math.pi):
        raise ConfigError("theta must be in [0, pi]")
    integral, _ = quad(lambda x: math.sin(x) ** (d - 2), 0.0, theta)
    log_coef = gammaln(d / 2.0) - 0.5 * math.log(math.pi) - gammaln((d - 1) / 2.0)
    return math.exp(log_coef) * integral


# ------------------------------ sampling ------------------------------


def _uniform_ball(count: int, dims: int, radius: float, gen: np.random.Generator) -> np.ndarray:
    """Uniform draws from a Euclidean ball via batched rejection from the cube."""
    if dims == 0:
        return np.zeros((count, 0))
    out = np.empty((count, dims))
    filled = 0
    while filled < count:
        need = count - filled
        cand = gen.uniform(-radius, radius, size=(max(2 * need, 16), dims))
        keep = cand[np.linalg.norm(cand, axis=1) <= radius]
        take = min(len(keep), need)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def _uniform_axis_slice(count: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """Uniform unit vectors conditioned on |u . e_d| <= sqrt(3)/2."""
    out = np.empty((count, d))
    filled = 0
    while filled < count:
        need = count - filled
        g = gen.standard_normal(size=(max(2 * need, 16), d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        keep = g[np.abs(g[:, -1]) <= SLICE_MAX_AXIS_DOT]
        take = min(len(keep), need)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def sample_instance(k: float, d: int, rng) -> FlatGaussianParams:
    """One instance index drawn uniformly: t from the disk, u from the slice."""
    if d < 2:
        raise ConfigError("d must be at least 2")
    gen = as_generator(rng)
    t = _uniform_ball(1, d - 1, 0.5, gen)[0]
    u = _uniform_axis_slice(1, d, gen)[0]
    return FlatGaussianParams(k=k, t=t, u=u)


def _sample_instances(d: int, count: int, gen) -> tuple[np.ndarray, np.ndarray]:
    return _uniform_ball(count, d - 1, 0.5, gen), _uniform_axis_slice(count, d, gen)


def _draw_points(ts, us, k, n_points, gen) -> np.ndarray:
    """n_points draws from each instance; shape (count, n_points, d).

    Uses sqrt(I + (s^2 - 1) u u^T) = I + (s - 1) u u^T on standard normals.
    """
    count, d = us.shape
    sigma = 1.0 / k
    g = gen.standard_normal(size=(count, n_points, d))
    dots = np.einsum("cpd,cd->cp", g, us)
    pts = g + (sigma - 1.0) * dots[..., None] * us[:, None, :]
    means = np.concatenate([ts, np.zeros((count, 1))], axis=1)
    return means[:, None, :] + pts


def flat_log_density(k: float, ts, us, x) -> np.ndarray:
    """Log density of the (k, t, u) instance at points x.

    ts: (c, d-1), us: (c, d), x: (c, p, d) or (p, d) broadcast to all
    instances; returns (c, p). Uses the rank-one form of the precision,
    I + (k^2 - 1) u u^T, and det(covariance) = 1/k^2.
    """
    ts = np.atleast_2d(np.asarray(ts, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None, :, :]
    d = us.shape[1]
    means = np.concatenate([ts, np.zeros((ts.shape[0], 1))], axis=1)
    diff = x - means[:, None, :]
    s = np.einsum("cpd,cd->cp", diff, us)
    quad_form = np.sum(diff * diff, axis=-1) + (k**2 - 1.0) * s * s
    return -0.5 * d * math.log(2.0 * math.pi) + math.log(k) - 0.5 * quad_form


def uniform_cylinder_points(count: int, d: int, spec: CylinderSpec, rng) -> np.ndarray:
    """Uniform draws from the cylinder (radial rejection times uniform height)."""
    gen = as_generator(rng)
    radial = _uniform_ball(count, d - 1, spec.radius, gen)
    height = gen.uniform(spec.height_lo, spec.height_hi, size=(count, 1))
    return np.concatenate([radial, height], axis=1)


# ------------------------------ estimators ------------------------------


def estimate_eta(k: float, d: int, trials: int, rng) -> tuple[float, float]:
    """MC estimate (with 95% half-width) of P[all d-1 draws land in C]."""
    if k < 10:
        raise ConfigError("eta is only measured in the k >= 10 regime")
    if trials < 100:
        raise ConfigError("estimate_eta needs at least 100 trials")
    gen = as_generator(rng)
    ts, us = _sample_instances(d, trials, gen)
    pts = _draw_points(ts, us, k, d - 1, gen)
    ok = in_cylinder(pts).all(axis=1)
    p = float(ok.mean())
    half = 1.96 * math.sqrt(max(p * (1.0 - p), 1e-12) / trials)
    return p, half


def tv_far_certificate(k: float, t1, u1, t2, u2) -> np.ndarray:
    """True where a closed-form certificate guarantees TV >= 1/200.

    Either the squeeze axes are separated in angle by at least
    sqrt(2 pi)/(2k) as lines (u and -u index the same instance), or the
    means differ by at least 1/(20k) when projected on the first
    instance's axis direction within the disk coordinates. Vectorized
    over the second instance.
    """
    t1 = np.asarray(t1, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    t2 = np.atleast_2d(np.asarray(t2, dtype=float))
    u2 = np.atleast_2d(np.asarray(u2, dtype=float))
    angle_thresh = math.sqrt(2.0 * math.pi) / (2.0 * k)
    cos_dot = np.clip(np.abs(u2 @ u1), 0.0, 1.0)
    angle_cert = cos_dot <= math.cos(angle_thresh)
    r = u1[:-1]
    r_hat = r / np.linalg.norm(r)
    proj = np.abs((t2 - t1[None, :]) @ r_hat)
    shift_cert = proj >= 1.0 / (20.0 * k)
    return angle_cert | shift_cert


def estimate_rk(
    k: float, d: int, outer_trials: int, inner_trials: int, rng
) -> tuple[float, float, np.ndarray]:
    """Conservative estimate of the largest TV-ball mass in the family.

    For each reference instance (a designed worst case t = 0, u = e_1
    plus outer_trials random ones), measures the fraction of random
    instances NOT certified TV-far from it; pairs failing both
    certificates are counted as possibly close, so the estimate errs
    upward. Returns (max fraction, binomial half-width at the max cell,
    per-reference fractions).
    """
    if inner_trials < 100:
        raise ConfigError("estimate_rk needs at least 100 inner trials")
    gen = as_generator(rng)
    refs = [(np.zeros(d - 1), np.eye(d)[0])]
    for _ in range(outer_trials):
        inst = sample_instance(k, d, gen)
        refs.append((inst.t, inst.u))
    rates = np.empty(len(refs))
    for i, (t1, u1) in enumerate(refs):
        ts, us = _sample_instances(d, inner_trials, gen)
        certified = tv_far_certificate(k, t1, u1, ts, us)
        rates[i] = 1.0 - float(certified.mean())
    worst = int(np.argmax(rates))
    p = float(rates[worst])
    half = 1.96 * math.sqrt(max(p * (1.0 - p), 1e-12) / inner_trials)
    return p, half, rates


def estimate_sk(
    k: float, d: int, x_trials: int, q_trials: int, rng
) -> tuple[float, float, np.ndarray]:
    """inf over x in C^{d-1} of P[joint density at x >= u_k / c].

    Samples x_trials point tuples uniformly from the cylinder power; for
    each, estimates the probability over q_trials random instances that
    the (d-1)-point density clears the floor u_k / c (per-point scale
    e^{-5}), and returns the minimum with its binomial half-width.
    Sampled minima estimate the inf; no extremizer is known for it.
    """
    if q_trials < 100:
        raise ConfigError("estimate_sk needs at least 100 instance trials")
    if x_trials < 1:
        raise ConfigError("estimate_sk needs at least one point tuple")
    gen = as_generator(rng)
    log_thresh = math.log(u_k_value(k, d)) - 9.0 * (d - 1) / 2.0
    rates = np.empty(x_trials)
    for i in range(x_trials):
        x = uniform_cylinder_points(d - 1, d, CylinderSpec(), gen)
        ts, us = _sample_instances(d, q_trials, gen)
        logs = flat_log_density(k, ts, us, x).sum(axis=1)
        rates[i] = float((logs >= log_thresh).mean())
    worst = int(np.argmin(rates))
    p = float(rates[worst])
    half = 1.96 * math.sqrt(max(p * (1.0 - p), 1e-12) / q_trials)
    return p, half, rates


# ------------------------------- report -------------------------------


@dataclass
class NflBudgets:
    """Trial counts for one report row; defaults sized for a desk run."""

    eta_trials: int = 20000
    rk_outer: int = 16
    rk_inner: int = 400000
    sk_x_trials: int = 12
    sk_q_trials: int = 20000


NFL_COLUMNS = (
    "k",
    "eta_hat",
    "eta_ci",
    "u_k",
    "c",
    "rk_hat",
    "rk_ci",
    "sk_hat",
    "sk_ci",
    "ratio",
    "decay_flag",
)


def decay_checks(rows: list) -> dict:
    """Trend checks over a k-sweep: rk slope, sk*k band, ratio, eta overlap."""
    if len(rows) < 2:
        return {
            "slope_ok": True,
            "band_ok": True,
            "mono_ok": True,
            "eta_stable": True,
            "flag": True,
        }
    ks = np.array([r["k"] for r in rows], dtype=float)
    rks = np.array([max(r["rk_hat"], 1e-12) for r in rows])
    sks = np.array([r["sk_hat"] for r in rows])
    ratios = np.array([r["ratio"] for r in rows])
    slope = float(np.polyfit(np.log(ks), np.log(rks), 1)[0])
    slope_ok = slope <= -1.5
    sk_k = sks * ks
    band_ok = bool(np.all(sk_k > 0)) and float(sk_k.max() / sk_k.min()) <= 3.0
    mono_ok = bool(np.all(np.diff(ratios) < 0))
    lo = np.array([r["eta_hat"] - r["eta_ci"] for r in rows])
    hi = np.array([r["eta_hat"] + r["eta_ci"] for r in rows])
    eta_stable = bool(np.all(lo > 0)) and bool(lo.max() <= hi.min())
    return {
        "slope_ok": slope_ok,
        "band_ok": band_ok,
        "mono_ok": mono_ok,
        "eta_stable": eta_stable,
        "slope": slope,
        "flag": bool(slope_ok and band_ok and mono_ok and eta_stable),
    }


def nfl_report(
    d: int,
    k_list: list,
    seed: int,
    budgets: NflBudgets = NflBudgets(),
) -> list:
    """One row of no-free-lunch estimates per k, plus a shared trend flag.

    Row keys follow NFL_COLUMNS. The flag requires: log-log slope of
    rk_hat at most -1.5, sk_hat*k within a factor-3 band, rk/sk strictly
    decreasing, and eta estimates positive with overlapping intervals.
    A single-k sweep makes the trend checks vacuous (a warning says so).
    """
    if not (2 <= d <= MAX_LAB_DIM):
        raise ConfigError(f"d must be between 2 and {MAX_LAB_DIM}")
    if len(k_list) == 0:
        raise ConfigError("k_list is empty")
    if len(k_list) == 1:
        warnings.warn("single k: trend checks are vacuous", stacklevel=2)
    rows = []
    for idx, k in enumerate(k_list):
        gen = as_generator(derive_seed(seed, idx))
        eta, eta_ci = estimate_eta(k, d, budgets.eta_trials, gen)
        rk, rk_ci, _ = estimate_rk(k, d, budgets.rk_outer, budgets.rk_inner, gen)
        sk, sk_ci, _ = estimate_sk(k, d, budgets.sk_x_trials, budgets.sk_q_trials, gen)
        ratio = rk / sk if sk > 0 else math.inf
        rows.append(
            {
                "k": k,
                "eta_hat": eta,
                "eta_ci": eta_ci,
                "u_k": u_k_value(k, d),
                "c": c_value(d),
                "rk_hat": rk,
                "rk_ci": rk_ci,
                "sk_hat": sk,
                "sk_ci": sk_ci,
                "ratio": ratio,
            }
        )
    flag = decay_checks(rows)["flag"]
    for row in rows:
        row["decay_flag"] = int(flag)
    return rows
