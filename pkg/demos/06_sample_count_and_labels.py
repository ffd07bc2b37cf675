# %% [markdown]
# # More data, fewer data, shuffled labels
#
# Extra samples act like a louder teacher. Too few samples cap what can be
# learned. Shuffled labels have no outliers, so fitting them is slow.

# %%
import numpy as np

from gendyn.harness import experiments as ex
from gendyn.theory import TheoryConfig, test_error_curve

for p in (50, 100, 200, 400):
    cfg = TheoryConfig((2.0,), 100, 100, 100, sample_count=p)
    t = np.linspace(0, 40, 400)
    print(f"P={p:3d}  min test error {test_error_curve(t, cfg).min():.3f}")

# %%
times = ex.default_times(100.0, 300)
structured = ex.flow_trace((6.0, 4.0, 2.0), 100, 50, 50, seed=0, times=times)
shuffled = ex.flow_trace((6.0, 4.0, 2.0), 100, 50, 50, seed=0, times=times, data_mode="randomized_labels")
reach = lambda tr: tr.times[np.argmax(tr.train_errors <= 0.5)]  # noqa: E731
print("time to train error 0.5: structured", reach(structured), " shuffled", reach(shuffled))
