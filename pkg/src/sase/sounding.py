"""Hybrid-constrained channel sounding.

Stage one samples the first ``m`` channel columns: the transmitter emits the
standard basis vector ``e_i`` through a two-chain constant-modulus
construction, while the receiver sweeps the ``N_r / M_RF`` blocks of a unitary
DFT matrix. Stage two samples the remaining columns through the estimated
column-subspace frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelInstance, complex_to_pairs, pairs_to_complex
from .errors import ContractViolationError, InfeasibleError, InvalidParameterError, ShapeError
from .linalg import complex_normal, is_semi_unitary

TRANSMIT = "transmit"
RECEIVE = "receive"


@dataclass(frozen=True)
class HybridSounder:
    analog: np.ndarray
    digital: np.ndarray
    side: str = TRANSMIT

    @property
    def product(self) -> np.ndarray:
        return self.analog @ self.digital

    def composed(self) -> np.ndarray:
        """Transmit vector ``F_A F_D s`` with the fixed signal s = ones / sqrt(N_RF)."""
        n_rf = self.digital.shape[1]
        s = np.ones(n_rf) / np.sqrt(n_rf)
        return self.analog @ (self.digital @ s)


def basis_transmit_sounder(i: int, n_t: int, n_rf: int) -> HybridSounder:
    """Hybrid transmit sounder whose output is the i-th basis vector (1-based)."""
    if n_rf < 2:
        raise InfeasibleError("emitting a basis vector needs at least two RF chains")
    if not 1 <= i <= n_t:
        raise InvalidParameterError(f"column index {i} outside 1..{n_t}")
    analog = np.ones((n_t, n_rf), dtype=complex) / np.sqrt(n_t)
    analog[i - 1, 1] = -1.0 / np.sqrt(n_t)
    digital = np.zeros((n_rf, n_rf), dtype=complex)
    digital[0, 0] = np.sqrt(n_rf * n_t) / 2
    digital[1, 0] = -np.sqrt(n_rf * n_t) / 2
    return HybridSounder(analog, digital, TRANSMIT)


@lru_cache(maxsize=64)
def _sounding_block(start: int, stop: int, n_t: int, n_rf: int) -> np.ndarray:
    block = basis_sounding_matrix(range(start, stop), n_t, n_rf)
    block.setflags(write=False)
    return block


def basis_sounding_matrix(indices, n_t: int, n_rf: int = 2) -> np.ndarray:
    """Columns are the composed hybrid transmit vectors for the given 1-based indices."""
    cols = [basis_transmit_sounder(i, n_t, n_rf).composed() for i in indices]
    if not cols:
        return np.zeros((n_t, 0), dtype=complex)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class DftReceiveBank:
    blocks: tuple[np.ndarray, ...]
    full_matrix: np.ndarray

    @property
    def m_rf(self) -> int:
        return self.blocks[0].shape[1]

    def sounders(self) -> list[HybridSounder]:
        eye = np.eye(self.m_rf, dtype=complex)
        return [HybridSounder(b, eye, RECEIVE) for b in self.blocks]


def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def dft_receive_bank(n_r: int, m_rf: int) -> DftReceiveBank:
    if n_r < 1 or m_rf < 1:
        raise InvalidParameterError("antenna and chain counts must be positive")
    if n_r % m_rf:
        raise InvalidParameterError(f"N_r={n_r} is not a multiple of M_RF={m_rf}")
    full = dft_matrix(n_r)
    blocks = tuple(full[:, j * m_rf:(j + 1) * m_rf] for j in range(n_r // m_rf))
    return DftReceiveBank(blocks, full)


@dataclass
class NoiseModel:
    """Additive CN(0, sigma2) antenna noise; SNR is 1 / sigma2."""

    sigma2: float
    rng: np.random.Generator

    def __post_init__(self):
        if self.sigma2 < 0:
            raise InvalidParameterError("noise variance must be non-negative")

    @classmethod
    def from_snr_db(cls, snr_db: float, rng: np.random.Generator) -> "NoiseModel":
        return cls(10.0 ** (-snr_db / 10.0), rng)

    def draw(self, shape) -> np.ndarray:
        # always consume the stream so sigma2 = 0 stays aligned with noisy runs
        return complex_normal(self.rng, shape, self.sigma2)


def sound(channel: ChannelInstance, f: np.ndarray, w: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """One channel use: ``w^H H f + w^H n`` with fresh antenna noise."""
    h = channel.matrix
    f = np.asarray(f)
    w = np.asarray(w)
    if w.ndim == 1:
        w = w[:, None]
    if f.shape != (h.shape[1],) or w.shape[0] != h.shape[0]:
        raise ShapeError(f"sounder shapes f{f.shape}, w{w.shape} do not fit H{h.shape}")
    n = noise.draw(h.shape[0])
    return w.conj().T @ (h @ f + n)


@dataclass(frozen=True)
class StageOneObservation:
    y_post_dft: np.ndarray
    m: int
    channel_uses: int
    sigma2: float

    def to_dict(self):
        return {
            "y_post_dft": complex_to_pairs(self.y_post_dft),
            "m": self.m,
            "channel_uses": self.channel_uses,
            "sigma2": self.sigma2,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StageOneObservation":
        d = json.loads(text)
        return cls(pairs_to_complex(d["y_post_dft"]), d["m"], d["channel_uses"], d["sigma2"])


@dataclass(frozen=True)
class StageTwoObservation:
    q_c: np.ndarray
    m: int
    channel_uses: int
    sigma2: float

    def to_dict(self):
        return {
            "q_c": complex_to_pairs(self.q_c),
            "rows": self.q_c.shape[0],
            "m": self.m,
            "channel_uses": self.channel_uses,
            "sigma2": self.sigma2,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StageTwoObservation":
        d = json.loads(text)
        rows, cols = d["rows"], d["channel_uses"]
        q_c = pairs_to_complex(d["q_c"]) if rows * cols else np.zeros((rows, cols), complex)
        return cls(q_c.reshape(rows, cols), d["m"], cols, d["sigma2"])


def collect_stage_one(
    channel: ChannelInstance, m: int, m_rf: int, noise: NoiseModel, *, n_rf: int = 2
) -> StageOneObservation:
    """Sample the first `m` columns through the DFT receive bank.

    Each of the ``m * N_r / M_RF`` channel uses draws its own antenna-domain
    noise vector, which is projected by the active receive block before the
    stacked observations are recombined with the DFT matrix.
    """
    n_r, n_t = channel.shape
    if not 1 <= m <= n_t:
        raise InvalidParameterError(f"column budget m={m} outside 1..{n_t}")
    bank = dft_receive_bank(n_r, m_rf)
    n_blocks = len(bank.blocks)

    f = _sounding_block(1, m + 1, n_t, n_rf)
    sampled = channel.matrix @ f  # N_r x m
    antenna_noise = noise.draw((m, n_blocks, n_r))
    received = sampled.T[:, None, :] + antenna_noise  # (column, block, antenna)
    blocks = np.stack(bank.blocks)  # (block, antenna, chain)
    y = np.einsum("jrk,ijr->ijk", blocks.conj(), received)
    y_stacked = y.reshape(m, n_blocks * m_rf).T  # N_r x m, before recombination
    y_s = bank.full_matrix @ y_stacked
    return StageOneObservation(y_s, m, m * n_blocks, noise.sigma2)


def collect_stage_two(
    channel: ChannelInstance,
    w_hat: np.ndarray,
    m: int,
    noise: NoiseModel,
    *,
    n_rf: int = 2,
) -> StageTwoObservation:
    """Sample columns m+1..N_t with the estimated frame as receive sounder."""
    n_r, n_t = channel.shape
    w_hat = np.asarray(w_hat)
    if w_hat.ndim != 2 or w_hat.shape[0] != n_r:
        raise ShapeError(f"receive frame shape {w_hat.shape} does not fit N_r={n_r}")
    if not is_semi_unitary(w_hat, 1e-8):
        raise ContractViolationError("stage-two receive frame must be semi-unitary")
    if not 0 <= m <= n_t:
        raise InvalidParameterError(f"column budget m={m} outside 0..{n_t}")
    f = _sounding_block(m + 1, n_t + 1, n_t, n_rf)
    n = noise.draw((n_t - m, n_r)).T
    q_c = w_hat.conj().T @ (channel.matrix @ f + n)
    return StageTwoObservation(q_c, m, n_t - m, noise.sigma2)
