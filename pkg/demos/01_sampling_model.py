# %% [markdown]
# # Sampling model
#
# Every observation picks one cell of an unknown low-rank matrix `A0`, at a
# position drawn from a probability table `pi`, and adds noise. Two numbers
# summarize how uneven `pi` is: `L` (how much the heaviest row or column is
# over-sampled) and `mu` (how badly the lightest cell is under-sampled).

# %%
import numpy as np

from noisymc.sampling import (
    MatrixDims,
    NoiseModel,
    build_distribution,
    generate_low_rank,
    pi_norm_sq,
    regularity_constants,
    sample_observations,
)

dims = MatrixDims(40, 30)

# %% [markdown]
# Uniform sampling is the reference case: both constants equal one.

# %%
uniform = build_distribution(dims)
print("uniform:", regularity_constants(uniform))

# %% [markdown]
# A product distribution with a few popular rows (think of heavy users in a
# ratings table) raises `L`. Here the first five rows are four times as likely.

# %%
row_w = np.ones(40)
row_w[:5] = 4.0
popular = build_distribution(dims, "product", row_weights=row_w, col_weights=np.ones(30))
print("popular rows:", regularity_constants(popular))

# %% [markdown]
# An explicit table can leave a cell with zero mass. Generation still works,
# but `mu` is then undefined and the constants say where the hole is.

# %%
table = np.ones(dims.shape)
table[3, 7] = 0.0
holey = build_distribution(dims, "explicit", table=table)
print("with a hole:", regularity_constants(holey))

# %% [markdown]
# The weighted norm `||A||^2_{L2(pi)} = sum pi_jk A_jk^2` is the natural error
# metric under `pi`; under uniform sampling it is the mean squared entry.

# %%
A0 = generate_low_rank(dims, r=3, a=1.0, seed=0)
print("max |A0| =", np.abs(A0).max(), " rank =", np.linalg.matrix_rank(A0))
print("pi-norm, uniform vs popular:", pi_norm_sq(A0, uniform), pi_norm_sq(A0, popular))

# %% [markdown]
# Observations are drawn with replacement, so cells can repeat.

# %%
obs = sample_observations(A0, popular, NoiseModel("gaussian", sigma=0.1), n=3000, seed=1)
counts = obs.counts()
print("n =", obs.n, " distinct cells seen:", np.count_nonzero(counts), "of", dims.m1 * dims.m2)
print("mean visits, popular rows vs the rest:", counts[:5].mean(), counts[5:].mean())
