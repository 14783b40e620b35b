"""
Finite-domain learning with a public cover and SmallDB
======================================================

Walks the finite-domain pipeline one stage at a time on a domain of
eight elements: Yatracos sets of the class, the public-sample cover,
the representative domain, the SmallDB release, and the final
minimum-distance pick. Set masks are integers (bit x = element x).
"""
import numpy as np

from ppdl.distributions import FiniteDist, sample
from ppdl.rng import as_generator
from ppdl.tv import tv_finite
from ppdl.yatracos import (
    db_size_for,
    mask_members,
    minimum_distance_select,
    public_cover,
    representative_domain,
    smalldb,
    yatracos_class,
    yatracos_learn,
)

D = 8
classes = [
    FiniteDist(masses=[0.40, 0.30, 0.10, 0.05, 0.05, 0.04, 0.03, 0.03]),
    FiniteDist(masses=[0.03, 0.03, 0.40, 0.30, 0.10, 0.05, 0.05, 0.04]),
    FiniteDist(masses=[0.05, 0.04, 0.03, 0.03, 0.40, 0.30, 0.10, 0.05]),
    FiniteDist(masses=[0.10, 0.05, 0.05, 0.04, 0.03, 0.03, 0.40, 0.30]),
]
truth = classes[1]

# 1. Yatracos sets: one {x : p_i(x) > p_j(x)} per ordered pair, deduped.
hyps = yatracos_class(classes)
print(f"{len(hyps)} distinct Yatracos sets over {len(classes)} hypotheses")
print("first three as membership vectors:")
for h in hyps[:3]:
    print("  mask", h, "->", mask_members(h, D))

# 2. The public sample collapses sets that label it identically.
public = sample(truth, 40, rng=11, role="public")
cover, f = public_cover(hyps, public, D)
print(f"cover keeps {len(cover)} of {len(hyps)} sets on a public sample of 40")

# 3. Domain elements indistinguishable to every cover set merge too.
reduced, proj = representative_domain(D, cover)
print(f"representative domain: {len(reduced)} of {D} elements ->", reduced)

# 4. SmallDB releases private masses for the cover with pure DP. The
#    database size depends only on the cover size and the slack knob.
private = sample(truth, 2000, rng=12, role="private")
k = db_size_for(len(cover), 0.5)
print("database size for alpha=0.5:", k)
db = smalldb(private, cover, epsilon=1.0, alpha=0.5, rng=as_generator(13),
             domain_size=D)
released = np.array([db.g_hat[h] for h in cover])
true_mass = np.array([float(truth.masses @ mask_members(h, D)) for h in cover])
print("worst released-vs-true mass gap:", round(np.abs(released - true_mass).max(), 4))

# 5. Minimum distance: the hypothesis whose own set masses track the
#    released ones. Only cover representatives matter, via f.
idx, chosen = minimum_distance_select(classes, hyps, f, db.g_hat)
print("minimum-distance pick:", idx, " TV to truth:",
      round(tv_finite(chosen, truth), 4))

# 6. One call does all of the above.
out = yatracos_learn(classes, public, private, epsilon=1.0, alpha=0.1, rng=14)
print(f"yatracos_learn -> index {out.chosen_index}, cover {out.cover_size}, "
      f"reduced domain {out.reduced_domain_size}, "
      f"TV {tv_finite(out.chosen, truth):.4f}")
