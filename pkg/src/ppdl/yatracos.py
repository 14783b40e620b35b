"""Finite-domain learning: Yatracos sets, public cover, SmallDB, selection.

Subsets of the domain {0, ..., D-1} are represented as integer bitmasks
(bit x set means element x belongs). The pipeline: build the Yatracos
class of a finite hypothesis list, shrink it to the labelings realized on
a public sample, shrink the domain to one representative per behavior
vector, release approximate masses for the surviving sets with the
SmallDB exponential mechanism over all size-k multiset databases, and
pick the hypothesis whose own masses best match the released ones.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .distributions import Dataset, FiniteDist
from .errors import CapExceeded, ConfigError
from .rng import as_generator
from .selection import PrivacyBudget, SelectionResult, exponential_mechanism

MAX_DB_ENUMERATION = 10_000_000


def mask_members(mask: int, domain_size: int) -> np.ndarray:
    """0/1 membership vector of a bitmask set."""
    return np.array([(mask >> x) & 1 for x in range(domain_size)], dtype=np.int64)


def set_mass(dist: FiniteDist, mask: int) -> float:
    """Mass the distribution assigns to a bitmask set."""
    return float(dist.masses @ mask_members(mask, dist.domain_size))


def yatracos_class(classes: list) -> list:
    """Deduplicated list of sets {x : p_i(x) > p_j(x)} over ordered pairs.

    The empty set is kept when some ordered pair realizes it (identical
    distributions in the class, for instance). Masks are returned sorted.
    """
    if len(classes) < 2:
        raise ConfigError("need at least two hypotheses to form Yatracos sets")
    sizes = {c.domain_size for c in classes}
    if len(sizes) != 1:
        raise ConfigError("hypotheses live on different domains")
    d = sizes.pop()
    masses = np.stack([c.masses for c in classes])
    masks = set()
    for i in range(len(classes)):
        for j in range(len(classes)):
            if i == j:
                continue
            bits = masses[i] > masses[j]
            mask = 0
            for x in range(d):
                if bits[x]:
                    mask |= 1 << x
            masks.add(mask)
    return sorted(masks)


def public_cover(
    hypotheses: list, public: Dataset, domain_size: int
) -> tuple[list, dict]:
    """Collapse hypotheses that label the public sample identically.

    Returns (cover, f) where cover is the sorted list of representatives
    (smallest mask per labeling class) and f maps every input hypothesis
    to its representative.
    """
    pts = public.points
    if not np.issubdtype(pts.dtype, np.integer):
        raise ConfigError("public data must be finite-domain (integer) samples")
    if len(pts) == 0:
        raise ConfigError("public dataset is empty")
    if np.any(pts < 0) or np.any(pts >= domain_size):
        raise ConfigError("public sample outside the domain")
    groups: dict[tuple, int] = {}
    f: dict[int, int] = {}
    labelings = {}
    for h in hypotheses:
        lab = tuple(((h >> int(x)) & 1) for x in pts)
        labelings[h] = lab
        if lab not in groups or h < groups[lab]:
            groups[lab] = h
    for h in hypotheses:
        f[h] = groups[labelings[h]]
    cover = sorted(set(f.values()))
    return cover, f


def representative_domain(
    domain_size: int, cover: list
) -> tuple[list, np.ndarray]:
    """Merge domain elements with identical behavior across the cover sets.

    Returns (reduced, projection): reduced is the sorted list of kept
    elements (smallest element per behavior class) and projection[x] is
    the representative of x.
    """
    if domain_size < 1:
        raise ConfigError("domain must be nonempty")
    behav: dict[tuple, int] = {}
    proj = np.zeros(domain_size, dtype=np.int64)
    vecs = []
    for x in range(domain_size):
        vecs.append(tuple(((h >> x) & 1) for h in cover))
    for x in range(domain_size):
        if vecs[x] not in behav:
            behav[vecs[x]] = x
        proj[x] = behav[vecs[x]]
    reduced = sorted(behav.values())
    return reduced, proj


@lru_cache(maxsize=32)
def _compositions(total: int, parts: int) -> np.ndarray:
    """All count vectors of length `parts` summing to `total` (lex order)."""
    if parts == 1:
        return np.full((1, 1), total, dtype=np.int64)
    combos = np.array(
        list(itertools.combinations(range(total + parts - 1), parts - 1)),
        dtype=np.int64,
    )
    padded = np.hstack(
        [
            np.full((combos.shape[0], 1), -1, dtype=np.int64),
            combos,
            np.full((combos.shape[0], 1), total + parts - 1, dtype=np.int64),
        ]
    )
    return np.diff(padded, axis=1) - 1


def db_size_for(cover_size: int, alpha: float) -> int:
    """Database size ceil(ln|cover| / alpha^2), at least 1."""
    if not (0 < alpha < 1):
        raise ConfigError("alpha must be in (0, 1)")
    if cover_size < 1:
        raise ConfigError("cover must be nonempty")
    return max(int(math.ceil(math.log(max(cover_size, 2)) / alpha**2)), 1)


@dataclass
class SmallDbResult:
    """Released masses per cover set plus the selection transcript."""

    g_hat: dict
    selection: SelectionResult
    db_counts: np.ndarray
    reduced_domain: list


def smalldb(
    private: Dataset,
    cover: list,
    epsilon: float,
    alpha: float,
    rng,
    domain_size: int,
    db_size: int | None = None,
    max_enumeration: int = MAX_DB_ENUMERATION,
) -> SmallDbResult:
    """Release approximate cover-set masses via the SmallDB mechanism.

    Enumerates every multiset database of size k over the reduced domain,
    scores each by u(y) = -max_h |mass_y(h) - empirical_private(h)|
    (sensitivity 1/n), and samples one with the exponential mechanism.
    db_size defaults to ceil(ln|cover| / alpha^2).
    """
    pts = private.points
    if not np.issubdtype(pts.dtype, np.integer):
        raise ConfigError("private data must be finite-domain (integer) samples")
    n = len(pts)
    if n == 0:
        raise ConfigError("private dataset is empty")
    if len(cover) == 0:
        raise ConfigError("cover is empty")
    reduced, proj = representative_domain(domain_size, cover)
    k = db_size if db_size is not None else db_size_for(len(cover), alpha)
    d_red = len(reduced)
    total_dbs = math.comb(d_red + k - 1, k)
    if total_dbs > max_enumeration:
        raise CapExceeded(
            f"SmallDB would enumerate C({d_red + k - 1},{k}) = {total_dbs} databases, "
            f"above cap {max_enumeration}"
        )

    # Membership of each reduced element in each cover set.
    member = np.zeros((d_red, len(cover)))
    for a, x in enumerate(reduced):
        for b, h in enumerate(cover):
            member[a, b] = (h >> x) & 1

    # Empirical cover-set masses of the projected private sample.
    proj_pts = proj[pts]
    red_index = {x: a for a, x in enumerate(reduced)}
    counts = np.zeros(d_red)
    for x, c in zip(*np.unique(proj_pts, return_counts=True)):
        counts[red_index[int(x)]] = c
    emp = (counts / n) @ member

    dbs = _compositions(k, d_red)
    db_mass = (dbs.astype(float) / k) @ member
    utils = -np.abs(db_mass - emp[None, :]).max(axis=1)

    result = exponential_mechanism(utils, n, PrivacyBudget(epsilon), rng)
    chosen_counts = dbs[result.chosen]
    g_hat = {h: float(db_mass[result.chosen, b]) for b, h in enumerate(cover)}
    return SmallDbResult(
        g_hat=g_hat,
        selection=result,
        db_counts=chosen_counts.copy(),
        reduced_domain=list(reduced),
    )


def minimum_distance_select(
    classes: list, hypotheses: list, f: dict, g_hat: dict
) -> tuple[int, FiniteDist]:
    """Pick argmin_q max_{h} |q(h) - g_hat(f(h))|, smallest index on ties."""
    if len(classes) == 0:
        raise ConfigError("hypothesis class is empty")
    best_idx = 0
    best_score = np.inf
    for i, q in enumerate(classes):
        score = 0.0
        for h in hypotheses:
            score = max(score, abs(set_mass(q, h) - g_hat[f[h]]))
        if score < best_score - 1e-15:
            best_score = score
            best_idx = i
    return best_idx, classes[best_idx]


@dataclass
class YatracosOutcome:
    chosen_index: int
    chosen: FiniteDist
    cover_size: int
    reduced_domain_size: int
    db_result: SmallDbResult


def yatracos_learn(
    classes: list,
    public: Dataset,
    private: Dataset,
    epsilon: float,
    alpha: float,
    rng,
    db_alpha: float = 0.5,
    db_size: int | None = None,
    max_enumeration: int = MAX_DB_ENUMERATION,
) -> YatracosOutcome:
    """End-to-end finite-domain learner.

    alpha is the learner's target accuracy (recorded for reporting);
    db_alpha controls the SmallDB database size, kept coarser than alpha
    so exact database enumeration stays within the cap.
    """
    sizes = {c.domain_size for c in classes}
    if len(sizes) != 1:
        raise ConfigError("hypotheses live on different domains")
    domain_size = sizes.pop()
    gen = as_generator(rng)
    hyps = yatracos_class(classes)
    cover, f = public_cover(hyps, public, domain_size)
    db = smalldb(
        private,
        cover,
        epsilon,
        db_alpha,
        gen,
        domain_size=domain_size,
        db_size=db_size,
        max_enumeration=max_enumeration,
    )
    idx, chosen = minimum_distance_select(classes, hyps, f, db.g_hat)
    return YatracosOutcome(
        chosen_index=idx,
        chosen=chosen,
        cover_size=len(cover),
        reduced_domain_size=len(db.reduced_domain),
        db_result=db,
    )
