"""
Subspace estimates and their hybrid approximations
==================================================

The truncated SVD of the stage-one observation gives the column frame. A
greedy pursuit over a grid of steering vectors then turns it into something
an analog phase-shifter network can realise, at the cost of a residual.
"""

import numpy as np

from sase.channel import random_channel
from sase.linalg import principal_angles
from sase.sounding import NoiseModel, collect_stage_one
from sase.subspace import build_dictionary, left_subspace, omp_hybrid_approx

rng = np.random.default_rng(3)
channel = random_channel(rng, 36, 144, 4)
noise = NoiseModel.from_snr_db(10.0, np.random.default_rng(4))
y_s = collect_stage_one(channel, 20, 6, noise).y_post_dft

u_hat = left_subspace(y_s, 4)
angles = np.degrees(principal_angles(u_hat.frame, channel.true_left))
print("principal angles to the true frame (deg):", np.round(angles, 2))

###############################################################################
# Residual of the constant-modulus fit as the dictionary grows.

for factor in (1, 2, 4, 8, 16):
    hf = omp_hybrid_approx(u_hat.frame, build_dictionary(36, factor * 36), slots=6)
    drift = np.degrees(principal_angles(hf.product, channel.true_left).max())
    print(f"D = {factor:2d} n   residual {hf.residual:.3f}   worst angle {drift:5.2f} deg")
