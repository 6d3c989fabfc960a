"""
Two-stage sounding under a hybrid constraint
============================================

Stage one sends basis vectors through two RF chains and sweeps a DFT receive
bank, so after recombination it sees the leading columns plus white noise.
Stage two points the receiver along the estimated column frame and reads out
the remaining columns.
"""

import numpy as np

from sase.channel import random_channel
from sase.metrics import sase_channel_uses
from sase.sounding import (
    NoiseModel,
    basis_transmit_sounder,
    collect_stage_one,
    collect_stage_two,
    dft_receive_bank,
)

rng = np.random.default_rng(1)
channel = random_channel(rng, 36, 144, 4)

# the analog part is constant modulus yet the emitted vector is e_3
sounder = basis_transmit_sounder(3, 8, 2)
print("analog moduli:", np.unique(np.round(np.abs(sounder.analog), 6)))
print("emitted vector:", np.round(sounder.composed().real, 12))

bank = dft_receive_bank(36, 6)
print("receive blocks:", len(bank.blocks), "of shape", bank.blocks[0].shape)

###############################################################################
# Stage one at 10 dB: the observation is the 20-column prefix plus noise.

noise = NoiseModel.from_snr_db(10.0, np.random.default_rng(2))
one = collect_stage_one(channel, m=20, m_rf=6, noise=noise)
err = np.linalg.norm(one.y_post_dft - channel.matrix[:, :20]) ** 2 / (36 * 20)
print(f"stage one: {one.channel_uses} channel uses, per-entry noise power {err:.3f}")

###############################################################################
# Stage two with the true column frame, just to show the bookkeeping.

two = collect_stage_two(channel, channel.true_left, m=20, noise=noise)
print("stage two:", two.channel_uses, "channel uses, Q_C shape", two.q_c.shape)
print("total:", one.channel_uses + two.channel_uses, "=", sase_channel_uses(20, 36, 6, 144))
