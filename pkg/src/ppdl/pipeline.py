"""Public-private learning: public candidate generation, private selection.

pp_learn composes the two halves: a candidate set built from public data
alone (grid corrections around a fit, crossed through mixture or product
combinators when asked) and a pure-DP tournament over the private data.
pp_learn_agnostic_shifted is the same pipeline on the wider robust grid,
for public data drawn from a contaminated or shifted source. The
experiment harness sweeps (m, n, epsilon) cells with derived per-trial
seeds so reports are reproducible bit for bit.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .compression import (
    DEFAULT_CANDIDATE_CAP,
    CandidateSet,
    GridSpec,
    default_grid,
    enumerate_gaussian_grid,
    gaussian_fit,
    mixture_candidates,
    product_candidates,
)
from .distributions import (
    Dataset,
    GaussianParams,
    MixtureParams,
    dim,
    sample,
)
from .errors import ConfigError
from .rng import as_generator, derive_seed
from .selection import AuditLog, PrivacyBudget, SelectionResult, dp_select
from .tv import point_set_distance, tv_between, tv_exact_gaussian_1d

FAMILY_KINDS = ("gaussian", "mixture", "product")

EXPERIMENT_COLUMNS = (
    "family",
    "d",
    "k",
    "m",
    "n",
    "epsilon",
    "trial",
    "seed",
    "tv_error",
    "tv_ci",
    "candidates",
    "success_at_alpha",
)


@dataclass
class FamilySpec:
    """What shape of candidates to build: plain, k-mixture, or k-product."""

    kind: str = "gaussian"
    components: int = 1
    weight_step: float = 0.25

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConfigError(f"unknown family kind {self.kind!r}")
        if self.components < 1:
            raise ConfigError("components must be at least 1")
        if self.kind == "gaussian" and self.components != 1:
            raise ConfigError("gaussian family has exactly one component")
        if not (0 < self.weight_step <= 1):
            raise ConfigError("weight_step must be in (0, 1]")


@dataclass
class LearnerConfig:
    """Knobs for one pp_learn run.

    robustness is the compression tolerance r; the agnostic factor is
    2/r and the shifted variant requires shift_gamma <= r/2.
    """

    alpha: float = 0.2
    beta: float = 0.1
    epsilon: float = 1.0
    family: FamilySpec = field(default_factory=FamilySpec)
    grid: GridSpec | None = None
    robust: bool = False
    robustness: float = 2.0 / 3.0
    shift_gamma: float = 0.0
    mc_trials: int = 1000
    max_candidates: int = DEFAULT_CANDIDATE_CAP
    max_tournament: int = 256
    component_keep: int = 32
    method: str = "auto"
    seed: int | None = None

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ConfigError("alpha must be in (0, 1]")
        if not (0 < self.beta <= 1):
            raise ConfigError("beta must be in (0, 1]")
        if not isinstance(self.epsilon, PrivacyBudget):
            self.epsilon = PrivacyBudget(float(self.epsilon))
        if not (0 < self.robustness < 1):
            raise ConfigError("robustness must be in (0, 1)")
        if self.shift_gamma < 0:
            raise ConfigError("shift_gamma must be nonnegative")
        if self.max_tournament < 1 or self.component_keep < 1:
            raise ConfigError("tournament and shortlist sizes must be positive")

    @property
    def agnostic_factor(self) -> float:
        return 2.0 / self.robustness

    def resolved_grid(self) -> GridSpec:
        return self.grid if self.grid is not None else default_grid(self.alpha, self.robust)


# --------------------------- candidate building ---------------------------


def _loglik_rows(hyps: list, points: np.ndarray) -> np.ndarray:
    """Per-hypothesis total log likelihood of the points (vectorized in 1-d)."""
    if points.shape[1] == 1 and all(
        isinstance(h, GaussianParams) and h.mean.shape[0] == 1 for h in hyps
    ):
        mus = np.array([h.mean[0] for h in hyps])
        var = np.array([h.covariance[0, 0] for h in hyps])
        x = points[:, 0]
        quad = (x[None, :] - mus[:, None]) ** 2 / var[:, None]
        return (-0.5 * (quad + np.log(2.0 * math.pi * var)[:, None])).sum(axis=1)
    from .distributions import density

    out = np.empty(len(hyps))
    for i, h in enumerate(hyps):
        dens = np.asarray(density(h, points), dtype=float)
        out[i] = float(np.sum(np.log(np.maximum(dens, 1e-300))))
    return out


def _weighted_loglik_rows(hyps: list, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Like _loglik_rows but each point contributes with its own weight."""
    if points.shape[1] == 1 and all(isinstance(h, GaussianParams) for h in hyps):
        mus = np.array([h.mean[0] for h in hyps])
        var = np.array([h.covariance[0, 0] for h in hyps])
        x = points[:, 0]
        logp = -0.5 * ((x[None, :] - mus[:, None]) ** 2 / var[:, None]
                       + np.log(2.0 * math.pi * var)[:, None])
        return logp @ weights
    from .distributions import density

    out = np.empty(len(hyps))
    for i, h in enumerate(hyps):
        dens = np.asarray(density(h, points), dtype=float)
        out[i] = float(np.dot(weights, np.log(np.maximum(dens, 1e-300))))
    return out


def _shortlist(cands: CandidateSet, scores: np.ndarray, keep: int) -> CandidateSet:
    """Top-`keep` candidates by score, kept in original enumeration order."""
    if len(cands) <= keep:
        return cands
    top = np.sort(np.argsort(-scores, kind="stable")[:keep])
    return CandidateSet(
        hypotheses=[cands.hypotheses[i] for i in top],
        provenance=[cands.provenance[i] for i in top] if cands.provenance else [],
    )


def fit_mixture_em(points: np.ndarray, k: int, iterations: int = 60):
    """Deterministic EM fit: (anchors, weights, responsibilities).

    Initialized by slicing the data into k quantile blocks along its
    first principal axis, so the same points always give the same fit.
    anchors is a list of GaussianParams, weights a length-k simplex
    vector, responsibilities an (m, k) soft assignment matrix.
    """
    m, d = points.shape
    if m < k * (d + 1):
        raise ConfigError(f"need at least {k * (d + 1)} points to fit {k} components")
    centered = points - points.mean(axis=0)
    if d == 1:
        axis = np.array([1.0])
    else:
        _, vecs = np.linalg.eigh(centered.T @ centered)
        axis = vecs[:, -1]
    order = np.argsort(points @ axis, kind="stable")
    blocks = np.array_split(order, k)
    mus = np.stack([points[b].mean(axis=0) for b in blocks])
    covs = np.stack([_ridged_cov(points[b], points) for b in blocks])
    ws = np.full(k, 1.0 / k)
    x = points
    resp = np.full((m, k), 1.0 / k)
    for _ in range(iterations):
        logp = np.stack([_gauss_logpdf(x, mus[j], covs[j]) for j in range(k)], axis=1)
        logr = np.log(ws)[None, :] + logp
        logr -= logsumexp(logr, axis=1, keepdims=True)
        resp = np.exp(logr)
        nk = resp.sum(axis=0) + 1e-12
        ws = nk / m
        mus = (resp.T @ x) / nk[:, None]
        for j in range(k):
            diff = x - mus[j]
            cov = (resp[:, j][:, None] * diff).T @ diff / nk[j]
            covs[j] = _ridge(cov, x)
    anchors = [GaussianParams(mean=mus[j], covariance=covs[j]) for j in range(k)]
    return anchors, ws, resp


def _gauss_logpdf(x: np.ndarray, mu: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = mu.shape[0]
    chol = np.linalg.cholesky(cov)
    white = solve_triangular(chol, (x - mu).T, lower=True).T
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (d * math.log(2.0 * math.pi) + logdet + np.sum(white * white, axis=1))


def _variance_scale(points: np.ndarray) -> float:
    return float(np.mean(points.var(axis=0, ddof=1))) if points.shape[0] > 1 else 1.0


def _ridge(cov: np.ndarray, all_points: np.ndarray) -> np.ndarray:
    floor = max(1e-9 * _variance_scale(all_points), 1e-12)
    return cov + floor * np.eye(cov.shape[0])


def _ridged_cov(block: np.ndarray, all_points: np.ndarray) -> np.ndarray:
    if block.shape[0] < 2:
        cov = np.eye(block.shape[1])
    else:
        cov = np.cov(block.T, ddof=1).reshape(block.shape[1], block.shape[1])
    return _ridge(cov, all_points)


def generate_candidates(public: Dataset, cfg: LearnerConfig) -> CandidateSet:
    """Candidate hypotheses from public data only.

    gaussian: grid corrections around the fit. mixture: per-component
    grids around EM anchors, shortlisted by responsibility-weighted
    likelihood, crossed with the weight grid, then pruned to the
    tournament budget by public likelihood. product: the same
    shortlist-cross-prune flow over per-coordinate-block fits.
    Everything here reads public data only, so the result is a
    deterministic public function and selection stays private-DP.
    """
    if public.role != "public":
        raise ConfigError("candidate generation requires the public dataset")
    grid = cfg.resolved_grid()
    fam = cfg.family
    if fam.kind == "gaussian":
        anchor = gaussian_fit(public)
        return enumerate_gaussian_grid(anchor, grid, max_candidates=cfg.max_candidates)
    points = public.points
    if fam.kind == "mixture":
        anchors, _, resp = fit_mixture_em(points, fam.components)
        shortlists = []
        for j, anchor in enumerate(anchors):
            comp = enumerate_gaussian_grid(anchor, grid, max_candidates=cfg.max_candidates)
            scores = _weighted_loglik_rows(comp.hypotheses, points, resp[:, j])
            shortlists.append(_shortlist(comp, scores, cfg.component_keep))
        crossed = mixture_candidates(shortlists, fam.weight_step, max_candidates=cfg.max_candidates)
        scores = _mixture_loglik_rows(crossed, points)
        return _shortlist(crossed, scores, cfg.max_tournament)
    # product: coordinate blocks of equal width, one factor per block
    d = points.shape[1]
    if d % fam.components != 0:
        raise ConfigError("product family needs dim divisible by the factor count")
    width = d // fam.components
    shortlists = []
    for j in range(fam.components):
        cols = points[:, j * width : (j + 1) * width]
        anchor = gaussian_fit(cols)
        factor = enumerate_gaussian_grid(anchor, grid, max_candidates=cfg.max_candidates)
        scores = _loglik_rows(factor.hypotheses, cols)
        shortlists.append(_shortlist(factor, scores, cfg.component_keep))
    crossed = product_candidates(shortlists, max_candidates=cfg.max_candidates)
    scores = _product_loglik_rows(crossed, points, width)
    return _shortlist(crossed, scores, cfg.max_tournament)


def _mixture_loglik_rows(cands: CandidateSet, points: np.ndarray) -> np.ndarray:
    """Total public log likelihood of each mixture candidate (1-d fast path)."""
    hyps = cands.hypotheses
    if points.shape[1] == 1 and all(
        isinstance(h, MixtureParams)
        and all(isinstance(c, GaussianParams) for c in h.components)
        for h in hyps
    ):
        x = points[:, 0]
        mus = np.array([[c.mean[0] for c in h.components] for h in hyps])
        var = np.array([[c.covariance[0, 0] for c in h.components] for h in hyps])
        ws = np.array([h.weights for h in hyps])
        # log sum_j w_j N(x; mu_j, var_j), vectorized as (cands, comps, pts)
        logp = -0.5 * (
            (x[None, None, :] - mus[:, :, None]) ** 2 / var[:, :, None]
            + np.log(2.0 * math.pi * var)[:, :, None]
        )
        with np.errstate(divide="ignore"):
            log_ws = np.log(ws)  # zero weights contribute -inf, dropped by logsumexp
        return logsumexp(logp + log_ws[:, :, None], axis=1).sum(axis=1)
    return _loglik_rows(hyps, points)


def _product_loglik_rows(cands: CandidateSet, points: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros(len(cands))
    for j in range(points.shape[1] // width):
        cols = points[:, j * width : (j + 1) * width]
        factors = [h.factors[j] for h in cands.hypotheses]
        out += _loglik_rows(factors, cols)
    return out


def fixed_anchor_candidates(anchor: GaussianParams, cfg: LearnerConfig) -> CandidateSet:
    """Grid corrections around a fixed anchor instead of a public-data fit.

    Exists to demonstrate what fails without public anchoring: a grid
    around a prior guess cannot reach far-away truths no matter how much
    private data follows.
    """
    return enumerate_gaussian_grid(anchor, cfg.resolved_grid(), max_candidates=cfg.max_candidates)


# ------------------------------ learners ------------------------------


def pp_learn(
    public: Dataset,
    private: Dataset,
    cfg: LearnerConfig,
    rng=None,
    audit: AuditLog | None = None,
):
    """Public-private learner: returns (chosen distribution, SelectionResult).

    Candidates are a deterministic function of the public dataset;
    private data is touched only inside dp_select, so for fixed public
    data the selection probabilities are the full output distribution
    and inherit the exponential mechanism's epsilon-DP guarantee.
    """
    if public.role != "public" or private.role != "private":
        raise ConfigError("pp_learn needs a public and a private dataset, in that order")
    if public.points.ndim == 2 and private.points.ndim == 2:
        if public.points.shape[1] != private.points.shape[1]:
            raise ConfigError("public and private dimensions differ")
    if len(private) == 0:
        raise ConfigError("private dataset is empty")
    if rng is None:
        if cfg.seed is None:
            raise ConfigError("pp_learn needs an rng or a seed in the config")
        rng = cfg.seed
    gen = as_generator(rng)
    if audit is not None:
        audit.log("generate_candidates:start")
    candidates = generate_candidates(public, cfg)
    if audit is not None:
        audit.log("generate_candidates:done")
    return dp_select(
        candidates,
        private,
        cfg.epsilon,
        gen,
        mc_trials=cfg.mc_trials,
        method=cfg.method,
        audit=audit,
    )


def pp_learn_agnostic_shifted(
    public: Dataset,
    private: Dataset,
    cfg: LearnerConfig,
    rng=None,
    audit: AuditLog | None = None,
):
    """Shifted/agnostic variant: robust grid, tolerating TV(public source,
    private source) up to robustness/2 and targeting 3*OPT + alpha.

    With zero shift and a realizable truth this reduces to pp_learn on
    the wider grid.
    """
    if cfg.shift_gamma > cfg.robustness / 2.0 + 1e-12:
        raise ConfigError("shift_gamma must be at most robustness/2")
    robust_cfg = cfg if cfg.robust else replace(cfg, robust=True)
    return pp_learn(public, private, robust_cfg, rng=rng, audit=audit)


def error_decomposition(
    candidates, chosen_index: int, truth, trials: int = 20000, rng=None
) -> dict:
    """Realized error split into best-candidate error plus selection regret."""
    hyps = candidates.hypotheses if isinstance(candidates, CandidateSet) else list(candidates)
    gen = as_generator(rng) if rng is not None else None
    best_tv, best_idx = point_set_distance(truth, hyps, trials=trials, rng=gen)
    realized, _, _ = tv_between(truth, hyps[chosen_index], trials=trials, rng=gen)
    return {
        "best_tv": best_tv,
        "best_index": best_idx,
        "realized_tv": realized,
        "regret": realized - best_tv,
    }


def suggest_n(
    alpha: float,
    beta: float,
    epsilon: float,
    tau: int,
    bits: int,
    m_public: int | None = None,
    constant: float = 1.0,
    beta_split: float = 0.5,
) -> int:
    """Private-sample suggestion (1/a^2 + 1/(a*eps)) * log(candidate count).

    The candidate count for a tau-sample, t-bit scheme over m public
    samples is at most m^tau * 2^t; its natural log gives the selection
    term, plus ln(1/beta_sel) where beta_sel is the selection share of
    the failure budget (beta_split knob, half by default). m defaults to
    tau (the grid scheme forwards every public sample it requires).
    The leading constant is a knob because no source pins it.
    """
    if not (0 < alpha <= 1) or not (0 < beta <= 1):
        raise ConfigError("alpha and beta must be in (0, 1]")
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    if tau < 1 or bits < 0:
        raise ConfigError("need tau >= 1 and bits >= 0")
    if not (0 < beta_split < 1):
        raise ConfigError("beta_split must be in (0, 1)")
    if constant <= 0:
        raise ConfigError("constant must be positive")
    m = tau if m_public is None else m_public
    if m < 1:
        raise ConfigError("m_public must be at least 1")
    log_count = bits * math.log(2.0) + tau * math.log(m)
    term = log_count + math.log(1.0 / (beta * beta_split))
    return int(math.ceil(constant * (1.0 / alpha**2 + 1.0 / (alpha * epsilon)) * term))


# --------------------------- truth generation ---------------------------


def random_gaussian_truth(
    rng, mean_range=(-10.0, 10.0), var_range=(0.25, 4.0), dims: int = 1
) -> GaussianParams:
    """Product-form Gaussian truth with uniform mean and variance draws."""
    gen = as_generator(rng)
    mean = gen.uniform(mean_range[0], mean_range[1], size=dims)
    variances = gen.uniform(var_range[0], var_range[1], size=dims)
    return GaussianParams(mean=mean, covariance=np.diag(variances))


def random_mixture_truth(
    rng,
    components: int,
    mean_range=(-10.0, 10.0),
    var_range=(0.25, 4.0),
    min_separation: float = 0.2,
    min_weight: float = 0.2,
    max_attempts: int = 1000,
) -> MixtureParams:
    """1-d mixture truth with pairwise component TV >= min_separation.

    Separation is enforced by rejection purely to make error attribution
    stable in experiments; the learner itself never needs it.
    """
    gen = as_generator(rng)
    for _ in range(max_attempts):
        comps = [
            random_gaussian_truth(gen, mean_range, var_range, dims=1)
            for _ in range(components)
        ]
        ok = all(
            tv_exact_gaussian_1d(comps[i], comps[j]) >= min_separation
            for i in range(components)
            for j in range(i + 1, components)
        )
        if not ok:
            continue
        w = gen.dirichlet(np.ones(components))
        if w.min() < min_weight:
            continue
        return MixtureParams(components=comps, weights=w)
    raise ConfigError("could not generate a separated mixture truth")


def shift_mean(dist, offset: float):
    """Same distribution with every mean moved by offset along axis 0."""
    if isinstance(dist, GaussianParams):
        mean = dist.mean.copy()
        mean[0] += offset
        return GaussianParams(mean=mean, covariance=dist.covariance)
    if isinstance(dist, MixtureParams):
        return MixtureParams(
            components=[shift_mean(c, offset) for c in dist.components],
            weights=dist.weights,
        )
    raise ConfigError("mean shift supports gaussian and mixture truths")


# --------------------------- experiment harness ---------------------------


@dataclass
class ExperimentSpec:
    """Sweep definition: cells are the cross product of m, n, epsilon."""

    m_list: list
    n_list: list
    epsilon_list: list
    trials: int
    master_seed: int
    family: FamilySpec = field(default_factory=FamilySpec)
    dims: int = 1
    alpha: float = 0.2
    beta: float = 0.1
    truth: object | None = None
    mean_range: tuple = (-10.0, 10.0)
    var_range: tuple = (0.25, 4.0)
    min_separation: float = 0.2
    public_mean_offset: float = 0.0
    robust: bool = False
    shift_gamma: float = 0.0
    mc_trials: int = 1000
    max_tournament: int = 256
    component_keep: int = 32
    tv_trials: int = 20000

    def __post_init__(self):
        if not self.m_list or not self.n_list or not self.epsilon_list:
            raise ConfigError("sweep lists must be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")

    def learner_config(self, epsilon: float) -> LearnerConfig:
        return LearnerConfig(
            alpha=self.alpha,
            beta=self.beta,
            epsilon=epsilon,
            family=self.family,
            robust=self.robust or self.public_mean_offset != 0.0,
            shift_gamma=self.shift_gamma,
            mc_trials=self.mc_trials,
            max_tournament=self.max_tournament,
            component_keep=self.component_keep,
        )


def _trial_truth(spec: ExperimentSpec, rng):
    if spec.truth is not None:
        return spec.truth
    if spec.family.kind == "mixture":
        return random_mixture_truth(
            rng,
            spec.family.components,
            spec.mean_range,
            spec.var_range,
            spec.min_separation,
        )
    return random_gaussian_truth(rng, spec.mean_range, spec.var_range, dims=spec.dims)


def _run_trial(spec: ExperimentSpec, m: int, n: int, epsilon: float, seed: int) -> dict:
    rng_truth = as_generator(derive_seed(seed, 0))
    rng_data = as_generator(derive_seed(seed, 1))
    rng_select = as_generator(derive_seed(seed, 2))
    rng_eval = as_generator(derive_seed(seed, 3))
    truth = _trial_truth(spec, rng_truth)
    public_source = (
        shift_mean(truth, spec.public_mean_offset)
        if spec.public_mean_offset != 0.0
        else truth
    )
    public = sample(public_source, m, rng_data, role="public")
    private = sample(truth, n, rng_data, role="private")
    cfg = spec.learner_config(epsilon)
    shifted = cfg.robust or spec.public_mean_offset != 0.0
    learner = pp_learn_agnostic_shifted if shifted else pp_learn
    chosen, result = learner(public, private, cfg, rng=rng_select)
    tv, tv_ci, _ = tv_between(chosen, truth, trials=spec.tv_trials, rng=rng_eval)
    return {
        "family": spec.family.kind,
        "d": spec.dims,
        "k": spec.family.components,
        "m": m,
        "n": n,
        "epsilon": epsilon,
        "seed": seed,
        "tv_error": tv,
        "tv_ci": tv_ci,
        "candidates": len(result.probabilities),
        "success_at_alpha": int(tv <= spec.alpha),
    }


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("PPDL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"PPDL_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec, threads: int | None = None) -> list:
    """All sweep cells, `trials` rows each, in deterministic order.

    Each trial owns a seed derived from (master_seed, cell, trial), so
    results are identical whatever the thread count.
    """
    cells = [
        (m, n, eps)
        for m in spec.m_list
        for n in spec.n_list
        for eps in spec.epsilon_list
    ]
    jobs = []
    for cell_idx, (m, n, eps) in enumerate(cells):
        for trial in range(spec.trials):
            seed = derive_seed(spec.master_seed, cell_idx, trial)
            jobs.append((m, n, eps, trial, seed))
    workers = _thread_count(threads)
    if workers == 1:
        results = [_run_trial(spec, m, n, eps, seed) for m, n, eps, trial, seed in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_trial, spec, m, n, eps, seed)
                for m, n, eps, trial, seed in jobs
            ]
            results = [f.result() for f in futures]
    rows = []
    for (m, n, eps, trial, seed), row in zip(jobs, results):
        row = dict(row)
        row["trial"] = trial
        rows.append({col: row[col] for col in EXPERIMENT_COLUMNS})
    return rows


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_experiment_csv(rows: list) -> str:
    """CSV text with shortest round-trip float formatting."""
    lines = [",".join(EXPERIMENT_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(row[col]) for col in EXPERIMENT_COLUMNS))
    return "\n".join(lines) + "\n"
