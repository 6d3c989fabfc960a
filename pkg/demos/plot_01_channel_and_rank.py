"""
Sparse channels and the rank of a column prefix
===============================================

A few propagation paths make the channel matrix low rank. Any block of
``m >= L`` leading columns keeps that rank, which is why sampling a prefix
is enough to recover the column space.
"""

import numpy as np

from sase.channel import numerical_rank, random_channel

rng = np.random.default_rng(0)
channel = random_channel(rng, n_r=36, n_t=144, num_paths=4)
print("shape:", channel.shape, " rank:", channel.rank)
print("singular values:", np.round(channel.true_singulars, 2))

###############################################################################
# Rank of the first m columns over 100 draws.

for m in range(4, 41, 4):
    ranks = [numerical_rank(random_channel(rng, 36, 144, 4).matrix[:, :m]) for _ in range(100)]
    print(f"m={m:2d}  rank min/max = {min(ranks)}/{max(ranks)}")
