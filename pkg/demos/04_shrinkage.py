# %% [markdown]
# # Denoising without training
#
# Knowing where spikes land lets us invert the map and rescale each outlier to
# its best estimate. This beats even optimally stopped gradient descent.

# %%
from gendyn.harness import experiments as ex
from gendyn.rmt import SpectrumParams
from gendyn.shrinkage import estimate_noise_scale, shrink_denoise
from gendyn.simulator import measure_errors
from gendyn.theory import TheoryConfig, nongradient_optimal_error, optimal_stopping

snrs = (6.0, 4.0, 2.0)
params = SpectrumParams(0.5)
_, data, _ = ex.make_cell(snrs, 100, 50, seed=0)
report = shrink_denoise(data.sigma31, params)
for shat, sbar, shrunk in report.detected:
    print(f"outlier {shat:.3f} -> inferred signal {sbar:.3f} -> kept at {shrunk:.3f}")

# %%
print("shrinkage test error:", measure_errors(report.estimate, data)[1])
print("predicted:", nongradient_optimal_error(snrs, params))
print("early-stopped gradient descent:", optimal_stopping(TheoryConfig(snrs, 100, 50, 50))[1])

# %% [markdown]
# When the noise level is unknown it can be read off the bulk.

# %%
print("noise scale estimate:", estimate_noise_scale(3.0 * data.sigma31, params))
