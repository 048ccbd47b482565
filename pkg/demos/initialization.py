"""Alignment of the three initialization schemes with the true column space."""

import warnings

import numpy as np

from mc_implicit.groundtruth import RegimeWarning, generate_ground_truth, materialize
from mc_implicit.initialization import InitSpec, alignment_score, init_direction
from mc_implicit.sampling import apply_P_Omega, sample_mask

warnings.simplefilter("ignore", RegimeWarning)

d, r, kappa, p = 100, 3, 4.0, 0.4
scores = {"orthogonal": [], "gaussian": [], "spectral": []}
for seed in range(30):
    gt = generate_ground_truth(d, r, kappa=kappa, seed=seed)
    obs = sample_mask(d, p, seed)
    observed = apply_P_Omega(obs, materialize(gt))
    scores["orthogonal"].append(alignment_score(init_direction(InitSpec("orthogonal", d, 1.0, seed), d), gt.basis))
    scores["gaussian"].append(alignment_score(init_direction(InitSpec("gaussian", d, 1.0, seed), d), gt.basis))
    Z = init_direction(InitSpec("spectral", r, 1.0, seed), d, obs, observed)
    scores["spectral"].append(alignment_score(Z, gt.basis))
for name, s in scores.items():
    s = np.array(s)
    print(f"{name:10s} min {s.min():.3f} median {np.median(s):.3f}  share >= 1/(2 kappa): {np.mean(s >= 1 / (2 * kappa)):.2f}")
