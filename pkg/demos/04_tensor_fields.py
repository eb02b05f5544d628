# %% [markdown]
# # Smoothing a diffusion tensor field
#
# Each pixel is a 3x3 SPD matrix and distances use the affine-invariant
# metric. Updates go through the matrix exponential, so the field stays
# positive definite without any projection step.

# %%
import numpy as np

from drgopt import experiments as ex
from drgopt.imaging import NoiseSpec, synth_spd
from drgopt.problems import TVConfig

clean, noisy = synth_spd((16, 16), "two-region", NoiseSpec("tangent-gaussian", 0.05, 3))
runs = ex.dti_compare(noisy, TVConfig(0.05, 2, 1), stop_rel=1e-5, max_iters=1000)
for name, e in runs.items():
    print(f"{name:14s} sweeps {e.stats['iterations']:3d}  all SPD {e.stats['all_spd']}")

# %% [markdown]
# A big step early and a small one later stops soonest. The TV term keeps
# the boundary between the two regions sharp relative to the interior.

# %%
print("edge/interior distance, noisy   :", ex.edge_distance_ratio(noisy))
print("edge/interior distance, smoothed:", ex.edge_distance_ratio(runs["mixed"].result.point))
print("smallest eigenvalue anywhere    :", np.linalg.eigvalsh(runs["mixed"].result.point).min())
