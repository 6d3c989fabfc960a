"""Accuracy metrics, theoretical bounds and channel-use accounting."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractViolationError, InvalidParameterError, UndefinedMetricError
from .linalg import hermitian, is_semi_unitary, sigma_k

# accuracy values may overshoot 1 by rounding; anything beyond this is a bug
ETA_SLACK = 1e-9


def _matrix(h) -> np.ndarray:
    return h.matrix if hasattr(h, "matrix") else np.asarray(h)


def _check_frame(frame: np.ndarray, name: str) -> None:
    if not is_semi_unitary(frame, 1e-8):
        raise ContractViolationError(f"{name} must be semi-unitary")


def _power(h: np.ndarray) -> float:
    p = float(np.linalg.norm(h) ** 2)
    if p == 0.0:
        raise UndefinedMetricError("channel has zero power")
    return p


def eta(w: np.ndarray, f: np.ndarray, h) -> float:
    """Fraction of channel power captured jointly by the combiner and precoder."""
    h = _matrix(h)
    _check_frame(w, "combiner")
    _check_frame(f, "precoder")
    return float(np.linalg.norm(hermitian(w) @ h @ f) ** 2) / _power(h)


def eta_c(w: np.ndarray, h) -> float:
    h = _matrix(h)
    _check_frame(w, "combiner")
    return float(np.linalg.norm(hermitian(w) @ h) ** 2) / _power(h)


def eta_r(f: np.ndarray, h) -> float:
    h = _matrix(h)
    _check_frame(f, "precoder")
    return float(np.linalg.norm(h @ f) ** 2) / _power(h)


def nmse(h, h_hat) -> float:
    h = _matrix(h)
    h_hat = h_hat.dense if hasattr(h_hat, "dense") else np.asarray(h_hat)
    if h.shape != h_hat.shape:
        raise InvalidParameterError(f"shape mismatch {h.shape} vs {h_hat.shape}")
    return float(np.linalg.norm(h - h_hat) ** 2) / _power(h)


def _effective_channel(w, f, h):
    h = _matrix(h)
    _check_frame(w, "combiner")
    _check_frame(f, "precoder")
    return hermitian(w) @ h @ f


def spectrum_efficiency(w, f, h, sigma2: float, num_streams: int | None = None) -> float:
    """log2 det(I + H_e H_e^H / (sigma2 L)) in bits/s/Hz, equal power per stream.

    Returns ``inf`` for sigma2 = 0 unless the effective channel vanishes.
    """
    he = _effective_channel(w, f, h)
    streams = num_streams if num_streams is not None else he.shape[0]
    if sigma2 == 0.0:
        return 0.0 if not np.any(he) else math.inf
    mat = np.eye(he.shape[0]) + he @ hermitian(he) / (sigma2 * streams)
    sign, logdet = np.linalg.slogdet(mat)
    return float(logdet / math.log(2.0))


def perfect_csi_rate(h, sigma2: float, num_streams: int) -> float:
    """Fully digital rate with the true top singular frames."""
    s = np.linalg.svd(_matrix(h), compute_uv=False)[:num_streams]
    if sigma2 == 0.0:
        return math.inf
    return float(np.sum(np.log2(1.0 + s**2 / (sigma2 * num_streams))))


def effective_snr(w, f, h, sigma2: float, num_streams: int | None = None) -> float:
    """Post-combining SNR ||W^H H F||_F^2 / (sigma2 L); ``inf`` when sigma2 = 0."""
    he = _effective_channel(w, f, h)
    streams = num_streams if num_streams is not None else he.shape[0]
    power = float(np.linalg.norm(he) ** 2)
    if sigma2 == 0.0:
        return math.inf if power > 0 else 0.0
    return power / (sigma2 * streams)


def rank_deficient(a: np.ndarray, k: int) -> bool:
    return sigma_k(a, k) <= 1e-12 * max(sigma_k(a, 1), np.finfo(float).tiny)


def _subspace_bound(sigma2: float, sig_l: float, dim: int, other: int, c: float) -> float:
    if sigma2 == 0.0:
        return 1.0
    value = 1.0 - c * dim * (sigma2 * sig_l**2 + other * sigma2**2) / sig_l**4
    return max(0.0, value)


def column_bound(sigma2: float, h_s: np.ndarray, num_paths: int, n_r: int | None = None, *, c: float = 2.0) -> float:
    """Lower bound on the expected column-subspace accuracy from the sampled block H_S."""
    h_s = np.asarray(h_s)
    sig_l = sigma_k(h_s, num_paths)
    if rank_deficient(h_s, num_paths):
        raise InvalidParameterError(f"H_S has rank below {num_paths}")
    n_r = h_s.shape[0] if n_r is None else n_r
    return _subspace_bound(sigma2, sig_l, n_r, h_s.shape[1], c)


def row_bound(sigma2: float, q_bar: np.ndarray, num_paths: int, n_t: int | None = None, *, c: float = 2.0) -> float:
    """Lower bound on the expected row-subspace accuracy from Q_bar = W^H H.

    The noise-squared term scales with the number of rows of `q_bar`, i.e. the
    width of the stage-two receive frame, which exceeds `num_paths` when an
    over-estimated path count was used.
    """
    q_bar = np.asarray(q_bar)
    sig_l = sigma_k(q_bar, num_paths)
    if rank_deficient(q_bar, num_paths):
        raise InvalidParameterError(f"Q_bar has rank below {num_paths}")
    n_t = q_bar.shape[1] if n_t is None else n_t
    return _subspace_bound(sigma2, sig_l, n_t, q_bar.shape[0], c)


def joint_bound(u_hat, u, v_hat, v) -> float:
    """sigma_L^2(U_hat^H U) * sigma_L^2(V_hat^H V) with L the true rank."""
    rank = u.shape[1]
    a = sigma_k(hermitian(u_hat) @ u, rank)
    b = sigma_k(hermitian(v_hat) @ v, rank)
    return a**2 * b**2


def sase_channel_uses(m: int, n_r: int, m_rf: int, n_t: int) -> int:
    """Stage one costs m N_r / M_RF uses, stage two N_t - m."""
    if m_rf < 1 or n_r % m_rf:
        raise InvalidParameterError(f"N_r={n_r} is not a multiple of M_RF={m_rf}")
    return m * n_r // m_rf + (n_t - m)


def budget_table(
    *,
    num_paths: int,
    n_r: int,
    n_t: int,
    m_rf: int,
    n_rf: int,
    m: int,
    grid: int,
    q: int,
    s: int,
    n_m: int,
) -> dict[str, tuple[float, bool]]:
    """Training overhead of SASE and competing schemes.

    Values are ``(channel_uses, exact)``. Rows whose published cost is only an
    order of magnitude are evaluated with unit constants and flagged
    ``exact=False``.
    """
    L = num_paths
    order_subspace = L * (n_r + n_t) / m_rf
    order_angle = L * math.log(grid**2) / m_rf
    return {
        "SASE": (float(sase_channel_uses(m, n_r, m_rf, n_t)), True),
        "MF": (order_subspace, False),
        "SD": (order_subspace, False),
        "Arnoldi": (2 * q * n_r / m_rf + 2 * q * n_t / n_rf, True),
        "OMP": (order_angle, False),
        "SBL": (order_angle, False),
        "ACE": (s**2 * L**3 * math.log(n_m / L, s) / m_rf, True),
    }


@dataclass(frozen=True)
class AccuracyReport:
    eta: float
    eta_c: float
    eta_r: float
    nmse: float
    rate: float
    rate_perfect_csi: float
    gamma: float
    col_bound: float
    row_bound: float
    joint_bound: float
    delta1: float
    delta2: float
    channel_uses: int
    num_paths_used: int

    def __post_init__(self):
        if self.eta > min(self.eta_c, self.eta_r) + ETA_SLACK:
            raise ContractViolationError("joint accuracy exceeds a marginal accuracy")

    def to_dict(self) -> dict:
        return asdict(self)
