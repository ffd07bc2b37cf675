# %% [markdown]
# # Sigmoidal mode dynamics
#
# Each data mode of strength `shat` grows along a closed-form sigmoid when a
# deep linear network starts small and aligned with the data. Stronger modes are
# learned first, so the spectrum is picked up in a wave from the top down.

# %%
import numpy as np

from gendyn.dynamics import DynamicsParams, learning_curves, s_of_t, t_of_s, transition_time

dyn = DynamicsParams(eps=1e-3)
t = np.linspace(0, 10, 6)
shats = np.array([0.5, 1.0, 2.0, 4.0])
print(np.round(learning_curves(t, shats, dyn) / shats, 3))

# %%
print("half-rise times:", transition_time(shats, dyn))
s = s_of_t(2.0, 3.0, dyn)
print("round trip:", t_of_s(s, 3.0, dyn))

# %% [markdown]
# Deeper networks have sharper transitions and start slower.

# %%
deep = DynamicsParams(eps=1e-3, depth=5)
print("depth 5 half-rise times:", transition_time(shats, deep))
