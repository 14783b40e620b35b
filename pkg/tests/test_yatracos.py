"""Finite-domain learner: Yatracos sets, cover, SmallDB, selection."""
import math

import numpy as np
import pytest

from ppdl import FiniteDist
from ppdl.distributions import Dataset, sample
from ppdl.errors import CapExceeded, ConfigError
from ppdl.tv import tv_finite
from ppdl.yatracos import (
    db_size_for,
    mask_members,
    minimum_distance_select,
    public_cover,
    representative_domain,
    set_mass,
    smalldb,
    yatracos_class,
    yatracos_learn,
)


def fd(*masses):
    return FiniteDist(masses=list(masses))


def ints(values):
    return Dataset(points=np.asarray(values, dtype=np.int64), role="private")


def pub(values):
    return Dataset(points=np.asarray(values, dtype=np.int64), role="public")


def random_finite(rng, domain):
    return FiniteDist(masses=rng.dirichlet(np.ones(domain)))


# ------------------------------ Yatracos class ------------------------------


def test_yatracos_two_point_domain():
    h = yatracos_class([fd(0.7, 0.3), fd(0.3, 0.7)])
    assert h == [0b01, 0b10]


def test_yatracos_identical_pair_keeps_empty_set():
    h = yatracos_class([fd(0.5, 0.5), fd(0.5, 0.5)])
    assert h == [0]


def test_yatracos_matches_brute_force():
    rng = np.random.default_rng(30)
    classes = [random_finite(rng, 8) for _ in range(4)]
    got = yatracos_class(classes)
    want = set()
    for p in classes:
        for q in classes:
            if p is q:
                continue
            mask = 0
            for x in range(8):
                if p.masses[x] > q.masses[x]:
                    mask |= 1 << x
            want.add(mask)
    assert got == sorted(want)
    assert len(got) <= 12


def test_yatracos_validation():
    with pytest.raises(ConfigError):
        yatracos_class([fd(1.0)])
    with pytest.raises(ConfigError):
        yatracos_class([fd(1.0), fd(0.5, 0.5)])


def test_mask_helpers():
    assert mask_members(0b101, 3).tolist() == [1, 0, 1]
    assert set_mass(fd(0.2, 0.3, 0.5), 0b101) == pytest.approx(0.7, abs=1e-15)


# ------------------------------ public cover ------------------------------


def test_cover_collapses_identical_labelings():
    # Both sets contain the only sampled point, so they are merged.
    cover, f = public_cover([0b01, 0b11], pub([0, 0, 0]), domain_size=2)
    assert cover == [0b01]
    assert f == {0b01: 0b01, 0b11: 0b01}


def test_cover_identity_when_sample_covers_domain():
    hyps = [0b001, 0b011, 0b110]
    cover, f = public_cover(hyps, pub([0, 1, 2]), domain_size=3)
    assert cover == sorted(hyps)
    assert all(f[h] == h for h in hyps)


def test_cover_labeling_consistency():
    rng = np.random.default_rng(31)
    hyps = sorted({int(rng.integers(0, 2**10)) for _ in range(20)})
    pts = rng.integers(0, 10, size=15)
    cover, f = public_cover(hyps, pub(pts), domain_size=10)
    for h in hyps:
        lab_h = [(h >> int(x)) & 1 for x in pts]
        lab_f = [(f[h] >> int(x)) & 1 for x in pts]
        assert lab_h == lab_f
        assert f[h] in cover


def test_cover_quality_under_uniform_truth():
    # Merged hypotheses stay close in symmetric-difference mass.
    truth = fd(*([1.0 / 8.0] * 8))
    rng = np.random.default_rng(32)
    classes = [random_finite(rng, 8) for _ in range(4)]
    hyps = yatracos_class(classes)
    good = 0
    for trial in range(200):
        pts = sample(truth, 40, 3300 + trial, role="public")
        cover, f = public_cover(hyps, pts, domain_size=8)
        worst = max(bin(h ^ f[h]).count("1") / 8.0 for h in hyps)
        good += worst <= 0.15
    assert good >= 180


def test_cover_validation():
    with pytest.raises(ConfigError):
        public_cover([0b1], pub([]), domain_size=2)
    with pytest.raises(ConfigError):
        public_cover([0b1], pub([5]), domain_size=2)
    with pytest.raises(ConfigError):
        public_cover([0b1], Dataset(points=[0.5], role="public"), domain_size=2)


# ------------------------------ representative domain ------------------------------


def test_representative_domain_trivial_cases():
    reduced, proj = representative_domain(5, [0])
    assert reduced == [0]
    assert proj.tolist() == [0, 0, 0, 0, 0]
    reduced, proj = representative_domain(3, [0b001, 0b010, 0b100])
    assert reduced == [0, 1, 2]
    assert proj.tolist() == [0, 1, 2]


def test_representative_domain_membership_preserved():
    rng = np.random.default_rng(33)
    for _ in range(20):
        cover = sorted({int(rng.integers(0, 2**16)) for _ in range(5)})
        reduced, proj = representative_domain(16, cover)
        for h in cover:
            for x in range(16):
                assert (h >> x) & 1 == (h >> int(proj[x])) & 1


def test_projection_preserves_empirical_masses():
    rng = np.random.default_rng(34)
    cover = sorted({int(rng.integers(0, 2**12)) for _ in range(4)})
    _, proj = representative_domain(12, cover)
    pts = rng.integers(0, 12, size=200)
    for h in cover:
        members = mask_members(h, 12)
        raw = members[pts].mean()
        projected = members[proj[pts]].mean()
        assert raw == projected


# ------------------------------ SmallDB ------------------------------


def test_db_size_formula():
    assert db_size_for(4, 0.5) == math.ceil(math.log(4) / 0.25)
    assert db_size_for(1, 0.5) == math.ceil(math.log(2) / 0.25)
    with pytest.raises(ConfigError):
        db_size_for(4, 1.5)


def test_smalldb_hand_example():
    # Domain {0,1}, one cover set {0}, private (0,0,1,1), databases of
    # size 2 enumerate as (1,1),(0,1),(0,0) in composition order with
    # utilities (-0.5, 0, -0.5).
    res = smalldb(ints([0, 0, 1, 1]), [0b01], epsilon=1.0, alpha=0.5, rng=0,
                  domain_size=2, db_size=2)
    assert np.allclose(res.selection.utilities, [-0.5, 0.0, -0.5], atol=1e-15)
    w = math.exp(-1.0)
    want = np.array([w, 1.0, w]) / (1.0 + 2.0 * w)
    assert np.allclose(res.selection.probabilities, want, atol=1e-12)
    assert res.reduced_domain == [0, 1]


def test_smalldb_concentrates_at_large_epsilon():
    res = smalldb(ints([0, 0, 1, 1]), [0b01], epsilon=1000.0, alpha=0.5, rng=1,
                  domain_size=2, db_size=2)
    assert res.selection.probabilities[1] >= 1.0 - 1e-6
    assert res.g_hat[0b01] == pytest.approx(0.5, abs=1e-15)
    assert res.db_counts.tolist() == [1, 1]


def test_smalldb_empty_set_cover():
    res = smalldb(ints([0, 1, 2]), [0], epsilon=1.0, alpha=0.5, rng=2, domain_size=3)
    assert res.g_hat == {0: 0.0}
    assert res.selection.probabilities.tolist() == [1.0]
    assert len(res.reduced_domain) == 1


def test_smalldb_cap_exceeded():
    cover = [sum(1 << x for x in range(40) if (x >> j) & 1) for j in range(6)]
    with pytest.raises(CapExceeded, match="cap"):
        smalldb(ints([0, 1, 2]), cover, epsilon=1.0, alpha=0.5, rng=3,
                domain_size=40, db_size=20)


def test_smalldb_dp_ratio():
    # Neighboring datasets: closed-form selection probabilities obey the
    # pure DP bound exactly.
    rng = np.random.default_rng(35)
    cover = [0b0101, 0b0011, 0b1000]
    eps = 0.7
    base = rng.integers(0, 4, size=10)
    for _ in range(25):
        moved = base.copy()
        moved[int(rng.integers(10))] = int(rng.integers(4))
        p0 = smalldb(ints(base), cover, eps, 0.5, 4, domain_size=4, db_size=3)
        p1 = smalldb(ints(moved), cover, eps, 0.5, 4, domain_size=4, db_size=3)
        a, b = p0.selection.probabilities, p1.selection.probabilities
        assert np.max(np.maximum(a / b, b / a)) <= math.exp(eps) + 1e-9


def test_smalldb_validation():
    with pytest.raises(ConfigError):
        smalldb(ints([]), [0b1], 1.0, 0.5, 0, domain_size=2)
    with pytest.raises(ConfigError):
        smalldb(ints([0]), [], 1.0, 0.5, 0, domain_size=2)
    with pytest.raises(ConfigError):
        smalldb(Dataset(points=[0.5]), [0b1], 1.0, 0.5, 0, domain_size=2)


# ------------------------------ minimum distance ------------------------------


def test_min_distance_exact_release_recovers_truth():
    classes = [fd(0.7, 0.2, 0.1), fd(0.1, 0.2, 0.7), fd(0.3, 0.4, 0.3)]
    hyps = yatracos_class(classes)
    f = {h: h for h in hyps}
    truth = classes[1]
    g_hat = {h: set_mass(truth, h) for h in hyps}
    idx, chosen = minimum_distance_select(classes, hyps, f, g_hat)
    assert idx == 1 and chosen is truth


def test_min_distance_hand_example():
    classes = [fd(0.7, 0.3), fd(0.3, 0.7)]
    idx, chosen = minimum_distance_select(classes, [0b01], {0b01: 0b01}, {0b01: 0.6})
    assert idx == 0
    assert chosen.masses.tolist() == [0.7, 0.3]


def test_min_distance_tie_break():
    classes = [fd(0.5, 0.5), fd(0.5, 0.5)]
    idx, _ = minimum_distance_select(classes, [0b01], {0b01: 0b01}, {0b01: 0.5})
    assert idx == 0
    with pytest.raises(ConfigError):
        minimum_distance_select([], [0b01], {0b01: 0b01}, {0b01: 0.5})


# ------------------------------ end to end ------------------------------


WELL_SEPARATED = [
    fd(0.55, 0.15, 0.1, 0.05, 0.05, 0.04, 0.03, 0.03),
    fd(0.05, 0.5, 0.2, 0.05, 0.05, 0.05, 0.05, 0.05),
    fd(0.05, 0.05, 0.05, 0.5, 0.2, 0.05, 0.05, 0.05),
    fd(0.04, 0.04, 0.04, 0.04, 0.04, 0.3, 0.3, 0.2),
]


def test_well_separated_classes():
    for i in range(4):
        for j in range(i + 1, 4):
            assert tv_finite(WELL_SEPARATED[i], WELL_SEPARATED[j]) >= 0.3


def test_yatracos_learn_end_to_end():
    truth = WELL_SEPARATED[0]
    hits = 0
    for trial in range(20):
        public = sample(truth, 40, 4400 + trial, role="public")
        private = sample(truth, 2000, 5500 + trial, role="private")
        out = yatracos_learn(WELL_SEPARATED, public, private, epsilon=1.0,
                             alpha=0.1, rng=6600 + trial)
        hits += tv_finite(out.chosen, truth) <= 0.1
        assert out.cover_size >= 1
        assert out.reduced_domain_size <= 8
    assert hits >= 17


def test_yatracos_learn_validation():
    with pytest.raises(ConfigError):
        yatracos_learn([fd(1.0), fd(0.5, 0.5)], pub([0]), ints([0]), 1.0, 0.1, 0)
