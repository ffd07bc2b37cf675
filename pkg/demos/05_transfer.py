# %% [markdown]
# # When does a second task help?
#
# Train task A alone, or jointly with task B through a shared hidden layer. The
# benefit depends on how similar the tasks are (`q`) and how strong each signal is.

# %%
from gendyn.transfer import rank1_pair, transfer_benefit_sim, transfer_benefit_theory

for snr_a in (0.84, 3.0, 100.0):
    row = []
    for q in (0.0, 0.5, 1.0):
        pair = rank1_pair(100, 50, snr_a, 5.0, q, seed=0)
        row.append(transfer_benefit_theory(pair).benefit)
    print(f"snr_a={snr_a:6.2f}  T(q=0, .5, 1) =", [round(x, 3) for x in row])

# %% [markdown]
# A weak task gains from a related strong one; a strong task gains nothing;
# an unrelated partner hurts a mid-strength task.

# %%
sim = transfer_benefit_sim(rank1_pair(100, 50, 3.0, 10.0, 1.0, seed=0), n_seeds=10)
print(f"simulated benefit {sim.benefit:.3f} +/- {sim.ci_halfwidth:.3f}")
