# %% [markdown]
# # Stochastic terms and their envelopes
#
# The penalty level is tied to the operator norm of the random matrix
# `Sigma_R = (1/n) sum eps_i X_i` (random signs on sampled cells). Here we
# compare Monte Carlo norms with the high-probability and mean envelopes.

# %%
import math

import numpy as np

from noisymc.concentration import (
    estimate_mean_rademacher_norm,
    expected_norm_bound,
    operator_tail_bound,
    rademacher_term,
    tail_bound_crossover,
)
from noisymc.rng import make_rng
from noisymc.sampling import MatrixDims, NoiseModel, build_distribution, sample_observations

dims = MatrixDims(50, 50)
dist = build_distribution(dims)

# %% [markdown]
# One draw of `Sigma_R`.

# %%
obs = sample_observations(np.zeros(dims.shape), dist, NoiseModel("gaussian", 0.0), 5000, seed=0)
term = rademacher_term(obs, make_rng(1))
print("||Sigma_R|| for one draw:", term.op_norm)

# %% [markdown]
# The tail envelope has a square-root branch and a linear branch. Below the
# crossover sample size the linear branch is the larger one.

# %%
print("crossover n:", round(tail_bound_crossover(1.0, dims)))
for n in (1000, 5000, 20000, 80000):
    mean = estimate_mean_rademacher_norm(dist, n, trials=100, seed=n)
    tail = operator_tail_bound(1.0, dims, n)
    bound, valid = expected_norm_bound(1.0, dims, n)
    print(f"n={n:6d}  mean norm {mean:.5f}  mean bound {bound:.5f} (proven range: {valid})  tail envelope {tail:.5f}")

# %% [markdown]
# The envelopes use the worst-case constant `C* = 6.5`, so they sit well above
# the Monte Carlo values; the `1/sqrt(n)` decay is what matches.

# %%
ratio = estimate_mean_rademacher_norm(dist, 20000, 200, 1) / estimate_mean_rademacher_norm(dist, 5000, 200, 2)
print("mean norm ratio n -> 4n:", ratio, " (1/2 expected)")
