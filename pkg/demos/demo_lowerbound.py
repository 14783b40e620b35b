"""
Measuring the no-public-data barrier
====================================

The hard family for private-only learning: unit-variance Gaussians
squeezed to variance 1/k^2 along one axis, mean confined to a small
disk at height zero. All measurements happen through a fixed probe
cylinder sitting above the means, so every instance reaches it with
only a sliver of mass. This walk-through builds one instance, checks
the geometry numerically, prints the closed-form constants, and runs
the report showing which quantities decay with k and which must not.
"""
import numpy as np

from ppdl.distributions import density
from ppdl.lowerbound import (
    CylinderSpec,
    NflBudgets,
    c_value,
    decay_checks,
    estimate_eta,
    in_cylinder,
    make_flat_gaussian,
    nfl_report,
    sample_instance,
    spherical_cap_fraction,
    u_k_value,
)
from ppdl.rng import as_generator, derive_seed

d, k = 2, 20.0

# 1. One instance: squeeze axis u, disk offset t, gaussian it induces.
inst = sample_instance(k, d, rng=as_generator(1))
g = make_flat_gaussian(inst)
print("mean", np.round(g.mean, 3))
print("covariance eigenvalues", np.round(np.linalg.eigvalsh(g.covariance), 5))
peak = density(g, g.mean)
print(f"density at the mean: {peak:.4f} vs (2 pi)^(-d/2) k = "
      f"{(2 * np.pi) ** (-d / 2) * k:.4f}")

# 2. The probe cylinder: first d-1 coordinates within radius 1/2,
#    last coordinate between 1 and 2. Instances only graze it.
spec = CylinderSpec()
pts = as_generator(2).multivariate_normal(g.mean, g.covariance, size=20000)
print("this instance's mass inside the cylinder:",
      round(float(in_cylinder(pts, spec).mean()), 4))

# 3. Closed-form ceiling for the density on the cylinder, and the
#    fixed ratio between the per-point peak and floor scales.
print(f"u_k(k={k:g}, d={d}) = {u_k_value(k, d):.4f}   c(d={d}) = {c_value(d):.1f}")
print("axis-slice acceptance 1 - 2*cap(d, pi/6):",
      round(1 - 2 * spherical_cap_fraction(d, np.pi / 6), 4))

# 4. eta: chance that d-1 fresh draws all land in the cylinder. The
#    barrier needs it to hold steady, not wash out, as k grows.
for kk in (10.0, 40.0):
    p, half = estimate_eta(kk, d, trials=20000, rng=derive_seed(3, int(kk)))
    print(f"eta(k={kk:g}): {p:.4f} +/- {half:.4f}")

# 5. The full report: r_k should fall like 1/k^2 while s_k falls like
#    1/k, so the ratio r_k/s_k keeps shrinking.
rows = nfl_report(d, [10.0, 20.0, 40.0, 80.0], seed=7, budgets=NflBudgets())
for r in rows:
    print(f"k={r['k']:>4g}  eta={r['eta_hat']:.4f}  rk={r['rk_hat']:.5f}  "
          f"sk={r['sk_hat']:.4f}  ratio={r['ratio']:.5f}")
checks = decay_checks(rows)
print(f"rk log-log slope {checks['slope']:.2f}, all decay checks pass:",
      checks["flag"])
