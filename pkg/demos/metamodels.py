"""
When a straight line is not enough
==================================

Here the simulated amplitude follows a power law in the flaw size and also
depends on two nuisance inputs, a flaw tilt ``t`` and a probe offset ``o``.
The Berens line then mixes the nuisance scatter into its noise term. The
polynomial chaos and kriging metamodels model the nuisance inputs and
average over their laws, which gives a POD curve built on the physics.
"""

import numpy as np

from mapod import (
    Gaussian,
    InputSet,
    InputSpec,
    KrigingOptions,
    SyntheticModelSpec,
    apply_boxcox,
    berens_pod_band,
    chaos_pod_band,
    comparison_table,
    fit_boxcox,
    fit_chaos,
    fit_kriging,
    fit_linear,
    kriging_pod_band,
    make_dataset,
    summarize,
)
from mapod.kriging import kriging_q2
from mapod.pod import default_grid

nuisance = InputSet([InputSpec("t", Gaussian(0.0, 1.0)), InputSpec("o", Gaussian(0.0, 1.0))])
spec = SyntheticModelSpec(kind="power-law", lam=0.3, beta0=4.5, beta1=43.5, sigma=0.6,
                          linear_terms=(("t", -1.2), ("o", 0.4)), seed=2)
ds, specs = make_dataset(spec, n=120, nuisance=nuisance)
threshold = 202.6

# %%
# The raw amplitudes fan out as the size grows. A Box-Cox exponent fitted by
# profile likelihood straightens the relation and stabilises the variance.
# The threshold is transformed with the same exponent.
a = ds.column("a")
bc = fit_boxcox(a, ds.response, threshold=threshold)
y = apply_boxcox(ds.response, bc.lam)
s = float(apply_boxcox(threshold, bc.lam))
print(f"Box-Cox lambda = {bc.lam:.3f} (generating value 0.3), threshold -> {s:.3f}")

grid = default_grid(a, 121)
design = ds.rows  # columns a, t, o in the order of ``specs``

# %%
# Berens on the transformed scale.
line = fit_linear(a, y)
berens = berens_pod_band(line, s, grid, n_draws=5000, seed=0)
print(f"Berens residual sd = {line.sigma:.3f} (true noise sd 0.6)")

# %%
# Polynomial chaos: the degree is chosen by leave-one-out Q2, and the band
# comes from posterior draws of the coefficients.
pce = fit_chaos(design, y, specs, candidate_degrees=(1, 2, 3))
chaos = chaos_pod_band(pce, s, grid, n_sets=100, n_mc=5000, seed=1)
print(f"chaos degree {pce.degree}, Q2 = {pce.q2:.4f}, sigma_eps = {pce.sigma_eps:.3f}")

# %%
# Kriging with an estimated nugget. Its band has a Monte Carlo part and a
# part due to the process uncertainty, combined in ``total``.
gp = fit_kriging(design, y, specs, KrigingOptions(estimate_nugget=True, n_starts=4), seed=2)
bands = kriging_pod_band(gp, s, grid, n_mc=5000, n_paths=100, seed=2)
print(f"kriging Q2 = {kriging_q2(gp):.4f}, nugget sd = {np.sqrt(gp.nugget):.3f}")

print()
print(comparison_table([summarize("Berens", berens), summarize("chaos", chaos),
                        summarize("kriging", bands["total"])]))
