# %% [markdown]
# # Signal spikes in a noisy matrix
#
# A rank-1 signal of strength `sbar` buried in Gaussian noise pokes out of the
# Marchenko-Pastur sea once it passes a detection threshold. Below we compare the
# predicted outlier location and vector overlap with a quick simulation.

# %%
import numpy as np

from gendyn.harness import experiments as ex
from gendyn.rmt import SpectrumParams, detection_threshold, overlap, shat_of_sbar

params = SpectrumParams(1.0)
print("detection threshold:", detection_threshold(params))
print("bulk support:", params.support)

# %%
snrs = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0]
tops, ovls, bulk = ex.spike_statistics(snrs, n=100, n_seeds=10)
for s, top, o in zip(snrs, tops.mean(1), ovls.mean(1)):
    print(f"sbar={s:4.1f}  top sv {top:.3f} (theory {float(shat_of_sbar(s, params)):.3f})"
          f"  overlap {o:.3f} (theory {float(overlap(s, params).o):.3f})")

# %% [markdown]
# Below threshold the top singular value sits at the bulk edge (2 here) and the
# overlap is small; above it both track the predictions.

# %%
print("bulk CDF sup distance:", ex.binned_cdf_distance(bulk, params))
