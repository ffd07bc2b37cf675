# %% [markdown]
# # Learning curves: theory against gradient descent
#
# The analytic train/test curves for a rank-3 teacher, compared with a seed
# average of training-aligned gradient-descent runs.

# %%
import numpy as np

from gendyn.harness import experiments as ex
from gendyn.theory import TheoryConfig, optimal_stopping, theory_curves

snrs = (6.0, 4.0, 2.0)
runs = [ex.gd_trace(snrs, 100, 50, 50, 3, 1e-3, "aligned", seed, 20.0, 120) for seed in range(3)]
t, train, test = ex.mean_curves(runs)
cfg = TheoryConfig(snrs, 100, 50, 50)
th_train, th_test = theory_curves(t, cfg)
print("max |theory - sim| train:", np.max(abs(th_train - train)), " test:", np.max(abs(th_test - test)))

# %% [markdown]
# Test error dips, then rises again as the student starts fitting noise modes.
# Early stopping catches the dip.

# %%
print("optimal stopping (t, error):", optimal_stopping(cfg))
print("simulated minimum:", np.mean([r.min_test()[1] for r in runs]))

# %% [markdown]
# A randomly initialised student reaches nearly the same minimum, just later.

# %%
rand = [ex.gd_trace(snrs, 100, 50, 50, 3, 1e-3, "random", seed, 20.0, 120) for seed in range(3)]
print("random-init lag:", [round(ex.stopping_lag(r, a), 3) for r, a in zip(rand, runs)])
