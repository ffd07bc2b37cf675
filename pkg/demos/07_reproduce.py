# %% [markdown]
# # Regenerating figure data
#
# Every figure has a seeded recipe that writes CSV tables, SVG plots and a
# manifest. The same thing is available as `gendyn reproduce <figure>`.

# %%
import tempfile

from gendyn.harness import RECIPES, reproduce

print(sorted(RECIPES))
with tempfile.TemporaryDirectory() as out:
    manifest = reproduce("fig1", out)
    print(manifest.outputs)
