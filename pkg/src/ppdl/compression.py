"""Candidate generation from public samples via grid-correction schemes.

A scheme forwards all m public samples plus a short bitstring. The decoder
refits a Gaussian to the forwarded samples and applies a grid-indexed
correction in the whitened frame of that fit:

    candidate mean       = fitted_mean + sqrt(fitted_cov) @ delta
    candidate covariance = sqrt(fitted_cov) @ (I + Delta) @ sqrt(fitted_cov)

with delta drawn from a centered mu grid (per coordinate) and Delta a
symmetric matrix with entries on a sigma grid, filtered to keep I + Delta
positive definite. Enumerating every grid cell yields the candidate set;
encoding a target distribution means snapping its whitened parameters to
the nearest cell. Bitstring fields use a zigzag code so the all-zeros
bitstring names the uncorrected fit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Dataset, Distribution, GaussianParams, MixtureParams, ProductParams
from .errors import CapExceeded, ConfigError, NumericalError
from .tv import tv_between

DEFAULT_CANDIDATE_CAP = 1_000_000

# I + Delta is treated as non-PD below this smallest eigenvalue.
_PD_TOLERANCE = 1e-9

# Ridge added to fitted covariances, relative to mean eigenvalue scale.
FIT_RIDGE_FACTOR = 1e-9


@dataclass
class GridSpec:
    """Correction grid: centered mu offsets and a sigma entry range.

    mu values are the multiples of mu_step inside [-mu_halfwidth,
    mu_halfwidth]; sigma values are the multiples of sigma_step inside
    [sigma_lo, sigma_hi]. Both grids are anchored at zero so the
    uncorrected fit is always a grid point (when the range allows it).
    """

    mu_halfwidth: float
    mu_step: float
    sigma_lo: float
    sigma_hi: float
    sigma_step: float

    def __post_init__(self):
        if self.mu_step <= 0 or self.sigma_step <= 0:
            raise ConfigError("grid steps must be positive")
        if self.mu_halfwidth < 0:
            raise ConfigError("mu_halfwidth must be nonnegative")
        if self.sigma_lo <= -1.0:
            raise ConfigError("sigma_lo must exceed -1 (covariance corrections stay PD)")
        if self.sigma_lo > self.sigma_hi:
            raise ConfigError("sigma_lo exceeds sigma_hi")

    def mu_values(self) -> np.ndarray:
        kmax = int(math.floor(self.mu_halfwidth / self.mu_step + 1e-9))
        ks = np.arange(-kmax, kmax + 1)
        return ks * self.mu_step

    def sigma_values(self) -> np.ndarray:
        kmin = int(math.ceil(self.sigma_lo / self.sigma_step - 1e-9))
        kmax = int(math.floor(self.sigma_hi / self.sigma_step + 1e-9))
        if kmin > kmax:
            raise ConfigError("sigma grid is empty")
        ks = np.arange(kmin, kmax + 1)
        return ks * self.sigma_step


def default_grid(alpha: float, robust: bool = False) -> GridSpec:
    """Grid resolution tied to the target accuracy alpha.

    Step alpha/2 keeps the rounding cost near alpha/6 in TV while the
    tournament stays quadratic-tractable. Robust runs double the mu
    reach and widen the sigma range in both directions: contamination
    inflates fitted variances, so good candidates need to shrink the
    fitted scale by up to 10x (sigma entry -0.9), and heavy tails push
    the upper range to 8. Their coarser steps keep the candidate count
    comparable to the realizable grid.
    """
    if not (0 < alpha < 1):
        raise ConfigError("alpha must be in (0, 1)")
    if robust:
        return GridSpec(
            mu_halfwidth=6.0,
            mu_step=alpha,
            sigma_lo=-0.9,
            sigma_hi=8.0,
            sigma_step=1.5 * alpha,
        )
    return GridSpec(
        mu_halfwidth=3.0,
        mu_step=alpha / 2.0,
        sigma_lo=-0.75,
        sigma_hi=3.0,
        sigma_step=alpha / 2.0,
    )


@dataclass
class CandidateSet:
    """Hypothesis list plus per-hypothesis provenance records."""

    hypotheses: list
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        if self.provenance and len(self.provenance) != len(self.hypotheses):
            raise ConfigError("provenance length does not match hypotheses")

    def __len__(self) -> int:
        return len(self.hypotheses)


@dataclass
class Encoding:
    """Forwarded sample indices plus a fixed-width correction bitstring."""

    indices: list
    bitstring: str
    clamped: bool = False

    def __post_init__(self):
        if any(ch not in "01" for ch in self.bitstring):
            raise ConfigError("bitstring must contain only '0' and '1'")


@dataclass
class CompressionScheme:
    """(tau, bits) scheme with a named deterministic decoder.

    tau counts forwarded samples, bits the correction string width, and
    robustness the adversarial TV contamination the scheme tolerates.
    """

    dim: int
    tau: int
    bits: int
    decoder: str
    robustness: float
    grid: GridSpec

    def __post_init__(self):
        if self.decoder != "gaussian-grid":
            raise ConfigError(f"unknown decoder {self.decoder!r}")
        if self.tau < 0 or self.bits < 0:
            raise ConfigError("tau and bits must be nonnegative")
        if not (0 <= self.robustness < 1):
            raise ConfigError("robustness must lie in [0, 1)")
        expected = total_bits(self.grid, self.dim)
        if self.bits != expected:
            raise NumericalError(
                f"bits {self.bits} does not match grid index width {expected}"
            )


def gaussian_grid_scheme(
    dim: int, m: int, grid: GridSpec, robustness: float = 0.0
) -> CompressionScheme:
    """Scheme forwarding all m samples with the grid's index width."""
    return CompressionScheme(
        dim=dim,
        tau=m,
        bits=total_bits(grid, dim),
        decoder="gaussian-grid",
        robustness=robustness,
        grid=grid,
    )


# -------------------------- fitting and roots --------------------------


def gaussian_fit(data: Dataset | np.ndarray) -> GaussianParams:
    """Empirical mean and ridge-stabilized population covariance.

    The ridge is FIT_RIDGE_FACTOR * trace/d, so it vanishes relative to
    the data scale; identical points still leave a singular matrix, which
    is reported as a failure rather than silently inflated.
    """
    pts = data.points if isinstance(data, Dataset) else np.asarray(data, float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n, d = pts.shape
    if n < d + 1:
        raise NumericalError(f"need at least d+1={d + 1} samples to fit, got {n}")
    mean = pts.mean(axis=0)
    centered = pts - mean[None, :]
    cov = centered.T @ centered / n
    ridge = FIT_RIDGE_FACTOR * float(np.trace(cov)) / d
    cov = cov + ridge * np.eye(d)
    eigs = np.linalg.eigvalsh(cov)
    if eigs[0] < 1e-12:
        raise NumericalError(
            f"fitted covariance is singular (smallest eigenvalue {eigs[0]:.3e})"
        )
    return GaussianParams(mean=mean, covariance=cov)


def sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition."""
    w, v = np.linalg.eigh(matrix)
    if w[0] < 0 and w[0] > -1e-12:
        w = np.clip(w, 0.0, None)
    if w[0] < 0:
        raise NumericalError("matrix is not PSD")
    return (v * np.sqrt(w)) @ v.T


def _inv_sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(matrix)
    if w[0] <= 0:
        raise NumericalError("matrix is not positive definite")
    return (v / np.sqrt(w)) @ v.T


# ------------------------- grid index coding -------------------------


def _center_index(values: np.ndarray) -> int:
    return int(np.argmin(np.abs(values)))


def _field_width(length: int) -> int:
    """Bits needed for the contiguous offset codes of a grid of this length."""
    if length <= 1:
        return 0
    return max(int(math.ceil(math.log2(length))), 1)


def _offset_order(center: int, length: int) -> list:
    """Code order: center first, then outward by |offset|, positive first.

    Codes are contiguous 0..length-1 even when the center is off-middle
    (asymmetric grids), so every field fits its declared bit width and
    the all-zero bitstring always addresses the uncorrected fit.
    """
    return sorted(range(length), key=lambda i: (abs(i - center), i < center))


def _code_encode(idx: int, center: int, length: int) -> int:
    return _offset_order(center, length).index(idx)


def _code_decode(code: int, center: int, length: int) -> int:
    if code < 0 or code >= length:
        raise NumericalError(f"bitstring addresses grid code {code} outside [0, {length})")
    return _offset_order(center, length)[code]


def _num_sigma_entries(d: int) -> int:
    return d * (d + 1) // 2


def total_bits(grid: GridSpec, d: int) -> int:
    """Total correction-bitstring width for dimension d."""
    wm = _field_width(len(grid.mu_values()))
    ws = _field_width(len(grid.sigma_values()))
    return wm * d + ws * _num_sigma_entries(d)


def _pack_fields(codes: list, width: int) -> str:
    return "".join(format(c, f"0{width}b") if width else "" for c in codes)


def _unpack_fields(bits: str, count: int, width: int) -> list:
    if width == 0:
        return [0] * count
    return [int(bits[i * width : (i + 1) * width], 2) for i in range(count)]


# ------------------------- candidate enumeration -------------------------


def _tri_indices(d: int) -> list:
    return [(i, j) for i in range(d) for j in range(i, d)]


def enumerate_gaussian_grid(
    anchor: GaussianParams,
    grid: GridSpec,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
) -> CandidateSet:
    """All grid corrections of an anchor Gaussian, PD-filtered.

    Candidate order is deterministic: mu index tuples vary in the outer
    (row-major) position, sigma entry tuples in the inner one.
    """
    d = anchor.dim
    mu_vals = grid.mu_values()
    sg_vals = grid.sigma_values()
    n_tri = _num_sigma_entries(d)
    total = len(mu_vals) ** d * len(sg_vals) ** n_tri
    if total > max_candidates:
        raise CapExceeded(
            f"grid would enumerate {total} candidates, above cap {max_candidates}"
        )
    root = sqrt_psd(anchor.covariance)
    tri = _tri_indices(d)

    hypotheses = []
    provenance = []
    eye = np.eye(d)
    for mu_idx in itertools.product(range(len(mu_vals)), repeat=d):
        delta = mu_vals[list(mu_idx)]
        mean = anchor.mean + root @ delta
        for sg_idx in itertools.product(range(len(sg_vals)), repeat=n_tri):
            corr = eye.copy()
            for (i, j), s in zip(tri, sg_idx):
                corr[i, j] += sg_vals[s]
                if i != j:
                    corr[j, i] += sg_vals[s]
            if d == 1:
                if corr[0, 0] < _PD_TOLERANCE:
                    continue
            elif np.linalg.eigvalsh(corr)[0] < _PD_TOLERANCE:
                continue
            cov = root @ corr @ root
            cov = 0.5 * (cov + cov.T)
            hypotheses.append(GaussianParams(mean=mean.copy(), covariance=cov))
            provenance.append({"mu_indices": mu_idx, "sigma_indices": sg_idx})
    return CandidateSet(hypotheses=hypotheses, provenance=provenance)


def gaussian_candidate_grid(
    data: Dataset,
    grid: GridSpec,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
) -> CandidateSet:
    """Fit the public data, then enumerate its grid corrections."""
    return enumerate_gaussian_grid(gaussian_fit(data), grid, max_candidates)


# --------------------------- encode / decode ---------------------------


def _snap(values: np.ndarray, target: float) -> tuple[int, bool]:
    """Nearest grid index and whether the target fell outside the range.

    The range tolerance absorbs the fit ridge (relative 1e-9), which
    perturbs whitened offsets of in-range targets by a comparable amount.
    """
    idx = int(np.argmin(np.abs(values - target)))
    clamped = target < values[0] - 1e-6 or target > values[-1] + 1e-6
    return idx, clamped


def encode_gaussian(
    target: GaussianParams, public: Dataset, scheme: CompressionScheme
) -> Encoding:
    """Encode a target Gaussian against the public sample.

    Forwards every sample index and snaps the whitened parameter offsets
    of the target to the nearest grid cell, coordinate by coordinate.
    Out-of-range targets snap to the boundary and set the clamped flag.
    """
    if target.dim != scheme.dim:
        raise ConfigError("target dimension does not match scheme")
    fit = gaussian_fit(public)
    inv_root = _inv_sqrt_psd(fit.covariance)
    d = scheme.dim
    mu_vals = scheme.grid.mu_values()
    sg_vals = scheme.grid.sigma_values()
    mu_center = _center_index(mu_vals)
    sg_center = _center_index(sg_vals)

    delta_star = inv_root @ (target.mean - fit.mean)
    mu_codes = []
    clamped = False
    for v in delta_star:
        idx, clip = _snap(mu_vals, float(v))
        clamped |= clip
        mu_codes.append(_code_encode(idx, mu_center, len(mu_vals)))

    corr_star = inv_root @ target.covariance @ inv_root - np.eye(d)
    tri = _tri_indices(d)
    sg_idx = []
    for i, j in tri:
        idx, clip = _snap(sg_vals, float(corr_star[i, j]))
        clamped |= clip
        sg_idx.append(idx)

    # The snapped correction must stay PD; fall back to its diagonal if not
    # (diagonal entries exceed -1 by the grid invariant, so that is PD).
    if d > 1:
        corr = np.eye(d)
        for (i, j), s in zip(tri, sg_idx):
            corr[i, j] += sg_vals[s]
            if i != j:
                corr[j, i] += sg_vals[s]
        if np.linalg.eigvalsh(corr)[0] < _PD_TOLERANCE:
            zero_idx, _ = _snap(sg_vals, 0.0)
            sg_idx = [s if i == j else zero_idx for (i, j), s in zip(tri, sg_idx)]
            clamped = True

    sg_codes = [_code_encode(s, sg_center, len(sg_vals)) for s in sg_idx]
    wm = _field_width(len(mu_vals))
    ws = _field_width(len(sg_vals))
    bits = _pack_fields(mu_codes, wm) + _pack_fields(sg_codes, ws)
    return Encoding(indices=list(range(len(public))), bitstring=bits, clamped=clamped)


def decode(scheme: CompressionScheme, enc: Encoding, source: Dataset) -> GaussianParams:
    """Deterministic decoder: refit forwarded samples, apply the correction."""
    if len(enc.bitstring) != scheme.bits:
        raise NumericalError(
            f"bitstring length {len(enc.bitstring)} does not match scheme bits {scheme.bits}"
        )
    d = scheme.dim
    mu_vals = scheme.grid.mu_values()
    sg_vals = scheme.grid.sigma_values()
    mu_center = _center_index(mu_vals)
    sg_center = _center_index(sg_vals)
    wm = _field_width(len(mu_vals))
    ws = _field_width(len(sg_vals))

    mu_codes = _unpack_fields(enc.bitstring[: wm * d], d, wm)
    n_tri = _num_sigma_entries(d)
    sg_codes = _unpack_fields(enc.bitstring[wm * d :], n_tri, ws)
    mu_idx = [_code_decode(c, mu_center, len(mu_vals)) for c in mu_codes]
    sg_idx = [_code_decode(c, sg_center, len(sg_vals)) for c in sg_codes]

    forwarded = source.points[np.asarray(enc.indices, dtype=int)]
    fit = gaussian_fit(forwarded)
    root = sqrt_psd(fit.covariance)

    delta = mu_vals[mu_idx]
    corr = np.eye(d)
    for (i, j), s in zip(_tri_indices(d), sg_idx):
        corr[i, j] += sg_vals[s]
        if i != j:
            corr[j, i] += sg_vals[s]
    if np.linalg.eigvalsh(corr)[0] < _PD_TOLERANCE:
        raise NumericalError("encoding addresses a non-PD covariance correction")
    mean = fit.mean + root @ delta
    cov = root @ corr @ root
    return GaussianParams(mean=mean, covariance=0.5 * (cov + cov.T))


# ----------------------------- combinators -----------------------------


def _weight_vectors(k: int, weight_step: float) -> np.ndarray:
    """Simplex grid: compositions of round(1/step) into k parts, renormalized.

    Lexicographic order in the composition tuple; for k=1 the single
    vector (1.0,) is returned.
    """
    if not (0 < weight_step <= 1):
        raise ConfigError("weight_step must be in (0, 1]")
    n_units = max(int(round(1.0 / weight_step)), 1)
    rows = []
    for cuts in itertools.combinations(range(n_units + k - 1), k - 1):
        prev = -1
        parts = []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(n_units + k - 2 - prev)
        rows.append(parts)
    w = np.asarray(rows, dtype=float) / n_units
    return w / w.sum(axis=1, keepdims=True)


def mixture_candidates(
    component_sets: list,
    weight_step: float,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
) -> CandidateSet:
    """Cross per-component candidate sets with a simplex weight grid.

    The size is the product of the component set sizes times the number
    of weight vectors; duplicates are kept (no dedup), so counts are exact.
    """
    if len(component_sets) == 0:
        raise ConfigError("need at least one component set")
    weights = _weight_vectors(len(component_sets), weight_step)
    sizes = [len(cs) for cs in component_sets]
    total = int(np.prod(sizes)) * weights.shape[0]
    if total > max_candidates:
        raise CapExceeded(
            f"mixture cross product has {total} candidates, above cap {max_candidates}"
        )
    hypotheses = []
    provenance = []
    for combo in itertools.product(*(range(s) for s in sizes)):
        comps = [cs.hypotheses[i] for cs, i in zip(component_sets, combo)]
        for wi in range(weights.shape[0]):
            hypotheses.append(MixtureParams(components=list(comps), weights=weights[wi]))
            provenance.append({"component_indices": combo, "weight_index": wi})
    return CandidateSet(hypotheses=hypotheses, provenance=provenance)


def product_candidates(
    coordinate_sets: list,
    max_candidates: int = DEFAULT_CANDIDATE_CAP,
) -> CandidateSet:
    """Cartesian product of per-coordinate candidate sets."""
    if len(coordinate_sets) == 0:
        raise ConfigError("need at least one coordinate set")
    sizes = [len(cs) for cs in coordinate_sets]
    total = int(np.prod(sizes))
    if total > max_candidates:
        raise CapExceeded(
            f"product cross product has {total} candidates, above cap {max_candidates}"
        )
    hypotheses = []
    provenance = []
    for combo in itertools.product(*(range(s) for s in sizes)):
        factors = [cs.hypotheses[i] for cs, i in zip(coordinate_sets, combo)]
        hypotheses.append(ProductParams(factors=factors))
        provenance.append({"factor_indices": combo})
    return CandidateSet(hypotheses=hypotheses, provenance=provenance)


# ----------------------- list learners as schemes -----------------------


@dataclass
class ListEncoding:
    """Index into a hypothesis list plus the bits needed to send it."""

    index: int
    bits: int


def compression_from_list_learner(
    list_output: list, target: Distribution, trials: int = 20000, rng=None
) -> ListEncoding:
    """Encode a target as the smallest index of a TV-nearest list element.

    A list learner with list size L therefore compresses to ceil(log2 L)
    bits and zero forwarded samples.
    """
    if len(list_output) == 0:
        raise ConfigError("list learner produced an empty list")
    best_tv = np.inf
    best_idx = 0
    for i, cand in enumerate(list_output):
        t, _, _ = tv_between(target, cand, trials=trials, rng=rng)
        if t < best_tv - 1e-15:
            best_tv, best_idx = t, i
    bits = int(math.ceil(math.log2(len(list_output)))) if len(list_output) > 1 else 0
    return ListEncoding(index=best_idx, bits=bits)


def packing_list_size(epsilon: float, n: int) -> float:
    """List-size bound (10/9) * exp(epsilon * n) for private list learners."""
    if epsilon <= 0 or n < 0:
        raise ConfigError("need epsilon > 0 and n >= 0")
    return (10.0 / 9.0) * math.exp(epsilon * n)
