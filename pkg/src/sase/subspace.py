"""Column/row subspace extraction and hybrid-constrained frame approximation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import ChannelInstance
from .errors import EstimationError, InvalidParameterError, ShapeError, SingularityError
from .linalg import canonicalize_phase, hermitian
from .sounding import (
    NoiseModel,
    StageOneObservation,
    StageTwoObservation,
    collect_stage_one,
    collect_stage_two,
)

COLUMN = "column"
ROW = "row"

HYBRID = "hybrid"
UNCONSTRAINED = "unconstrained"

LARGEST_GAP = "largest_gap"
NOISE_FLOOR = "noise_floor"


@dataclass(frozen=True)
class SubspaceEstimate:
    frame: np.ndarray
    side: str
    singulars: np.ndarray

    @property
    def rank(self) -> int:
        return self.frame.shape[1]


def _check_rank(rank: int, shape) -> None:
    if not 1 <= rank <= min(shape):
        raise InvalidParameterError(f"rank {rank} not in 1..{min(shape)} for shape {shape}")


def left_subspace(y_s: np.ndarray, rank: int) -> SubspaceEstimate:
    """Top-`rank` left singular vectors of the stage-one observation."""
    _check_rank(rank, y_s.shape)
    u, s, _ = np.linalg.svd(y_s, full_matrices=False)
    return SubspaceEstimate(canonicalize_phase(u[:, :rank]), COLUMN, s[:rank])


def right_subspace(q_hat: np.ndarray, rank: int) -> SubspaceEstimate:
    """Top-`rank` right singular vectors (as columns) of the projected observation."""
    _check_rank(rank, q_hat.shape)
    _, s, vh = np.linalg.svd(q_hat, full_matrices=False)
    return SubspaceEstimate(canonicalize_phase(hermitian(vh[:rank])), ROW, s[:rank])


def build_q(q_s: np.ndarray, q_c: np.ndarray) -> np.ndarray:
    """Concatenate the re-projected stage-one block with the stage-two block."""
    if q_s.shape[0] != q_c.shape[0]:
        raise ShapeError(f"row counts differ: {q_s.shape[0]} vs {q_c.shape[0]}")
    return np.hstack([q_s, q_c])


def estimate_path_count(
    singulars,
    cap: int,
    policy: str = LARGEST_GAP,
    *,
    sigma2: float | None = None,
    shape: tuple[int, int] | None = None,
    margin: float = 0.1,
) -> int:
    """Guess the number of dominant paths from a descending spectrum.

    ``largest_gap`` returns the index i maximising s_i / s_{i+1} over the whole
    spectrum (ties go to the lowest index). ``noise_floor`` counts values above
    the largest singular value expected from pure CN(0, sigma2) noise of the
    given matrix `shape`, inflated by `margin`. Either result is clamped to
    [1, cap].
    """
    s = np.asarray(singulars, dtype=float)
    if s.size < 2:
        raise InvalidParameterError("need at least two singular values")
    if cap < 1:
        raise InvalidParameterError("cap must be positive")
    if not np.any(s > 0):
        raise EstimationError("all-zero spectrum carries no path information")

    if policy == LARGEST_GAP:
        head, tail = s[:-1], s[1:]
        ratios = np.where(tail > 0, head / np.where(tail > 0, tail, 1.0), np.inf)
        ratios = np.where(head > 0, ratios, 0.0)
        est = int(np.argmax(ratios)) + 1
    elif policy == NOISE_FLOOR:
        if sigma2 is None or shape is None:
            raise InvalidParameterError("noise_floor policy needs sigma2 and shape")
        edge = math.sqrt(sigma2) * (math.sqrt(shape[0]) + math.sqrt(shape[1]))
        est = int(np.count_nonzero(s > edge * (1.0 + margin)))
    else:
        raise InvalidParameterError(f"unknown path-count policy {policy!r}")
    return min(max(est, 1), cap)


@dataclass(frozen=True)
class Dictionary:
    atoms: np.ndarray
    angles: np.ndarray

    @property
    def size(self) -> int:
        return self.atoms.shape[1]


def build_dictionary(n: int, size: int, grid: str = "sine") -> Dictionary:
    """Constant-modulus ULA steering atoms on a `size`-point grid.

    ``grid="sine"`` spaces the atoms uniformly in sin(theta) over [-1, 1), which
    is an oversampled DFT frame (the plain DFT when ``size == n``).
    ``grid="angle"`` spaces them uniformly in theta over [-pi/2, pi/2).
    ``grid="planar"`` builds UPA atoms for a square array as the Kronecker
    product of two sine grids with ``ceil(sqrt(size))`` points each.
    """
    if size < n:
        raise InvalidParameterError(f"dictionary needs at least n={n} atoms, got {size}")
    if grid == "sine":
        u = -1.0 + 2.0 * np.arange(size) / size
        angles = np.arcsin(u)
    elif grid == "angle":
        angles = -np.pi / 2 + np.pi * np.arange(size) / size
        u = np.sin(angles)
    elif grid == "planar":
        return _planar_dictionary(n, size)
    else:
        raise InvalidParameterError(f"unknown dictionary grid {grid!r}")
    k = np.arange(n)[:, None]
    atoms = np.exp(-1j * np.pi * k * u[None, :]) / np.sqrt(n)
    return Dictionary(atoms, angles)


def _planar_dictionary(n: int, size: int) -> Dictionary:
    side = math.isqrt(n)
    if side * side != n:
        raise InvalidParameterError(f"planar dictionary needs a square n, got {n}")
    per_axis = max(math.ceil(math.sqrt(size)), side)
    u = -1.0 + 2.0 * np.arange(per_axis) / per_axis
    axis = np.exp(1j * np.pi * np.arange(side)[:, None] * u[None, :])
    atoms = np.kron(axis, axis) / np.sqrt(n)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    return Dictionary(atoms, np.stack([uu.ravel(), vv.ravel()], axis=1))


@lru_cache(maxsize=16)
def _cached_dictionary(n: int, size: int, grid: str) -> Dictionary:
    d = build_dictionary(n, size, grid)
    d.atoms.setflags(write=False)
    return d


@dataclass(frozen=True)
class HybridFrame:
    analog: np.ndarray
    digital: np.ndarray
    residual: float = 0.0
    atom_indices: tuple[int, ...] = field(default=())

    @property
    def product(self) -> np.ndarray:
        return self.analog @ self.digital


def orthonormalize_product(hf: HybridFrame) -> HybridFrame:
    """Right-multiply the digital factor by (P^H P)^{-1/2} so P = A D is semi-unitary.

    The analog factor and the column span are untouched.
    """
    p = hf.product
    gram = hermitian(p) @ p
    gram = (gram + hermitian(gram)) / 2
    w, q = np.linalg.eigh(gram)
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        raise SingularityError("hybrid product is rank deficient")
    inv_sqrt = (q / np.sqrt(w)[None, :]) @ hermitian(q)
    return HybridFrame(hf.analog, hf.digital @ inv_sqrt, hf.residual, hf.atom_indices)


def omp_hybrid_approx(target: np.ndarray, dictionary: Dictionary, slots: int) -> HybridFrame:
    """Greedy constant-modulus approximation of an orthonormal frame.

    Each step adds the atom whose correlation with the current residual,
    summed in squared magnitude over the target columns, is largest; the
    digital factor is then refit by least squares. Atoms that would make the
    selected set rank deficient are skipped.
    """
    n, width = target.shape
    atoms = dictionary.atoms
    if atoms.shape[0] != n:
        raise ShapeError(f"dictionary atoms have length {atoms.shape[0]}, target has {n}")
    if slots > dictionary.size:
        raise InvalidParameterError(f"{slots} slots exceed {dictionary.size} atoms")
    if width > slots:
        raise InvalidParameterError(f"frame width {width} exceeds {slots} RF chains")

    residual = target
    chosen: list[int] = []
    banned = np.zeros(dictionary.size, dtype=bool)
    digital = np.zeros((0, width), dtype=complex)
    while len(chosen) < slots:
        scores = np.sum(np.abs(hermitian(atoms) @ residual) ** 2, axis=1)
        scores[banned] = -np.inf
        if np.all(np.isneginf(scores)):
            raise InvalidParameterError("dictionary exhausted before filling all RF chains")
        best = int(np.argmax(scores))
        banned[best] = True
        trial = atoms[:, chosen + [best]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= 1e-10 * s[0]:
            continue
        chosen.append(best)
        digital = np.linalg.lstsq(trial, target, rcond=None)[0]
        residual = target - trial @ digital

    analog = atoms[:, chosen]
    delta = float(np.linalg.norm(target - analog @ digital))
    return orthonormalize_product(HybridFrame(analog, digital, delta, tuple(chosen)))


@dataclass(frozen=True)
class SaseSettings:
    """Knobs of one SASE run.

    `num_paths` may be ``"auto"``, in which case the rank is estimated from the
    stage-one spectrum with `path_policy` and capped at min(M_RF, N_RF).
    """

    m: int
    m_rf: int
    n_rf: int
    num_paths: int | str
    mode: str = HYBRID
    dict_factor: int = 8
    dict_grid: str = "sine"
    path_policy: str = LARGEST_GAP

    def __post_init__(self):
        if self.mode not in (HYBRID, UNCONSTRAINED):
            raise InvalidParameterError(f"unknown mode {self.mode!r}")
        if self.dict_factor < 1:
            raise InvalidParameterError("dict_factor must be at least 1")


@dataclass(frozen=True)
class SaseResult:
    w: np.ndarray
    f: np.ndarray
    u_hat: SubspaceEstimate
    v_hat: SubspaceEstimate
    stage1: StageOneObservation
    stage2: StageTwoObservation
    w_hybrid: HybridFrame | None = None
    f_hybrid: HybridFrame | None = None

    @property
    def num_paths(self) -> int:
        return self.w.shape[1]

    @property
    def delta1(self) -> float:
        return self.w_hybrid.residual if self.w_hybrid is not None else 0.0

    @property
    def delta2(self) -> float:
        return self.f_hybrid.residual if self.f_hybrid is not None else 0.0

    @property
    def channel_uses(self) -> int:
        return self.stage1.channel_uses + self.stage2.channel_uses


def _approximate(target: np.ndarray, settings: SaseSettings, slots: int, planar: bool):
    if settings.mode == UNCONSTRAINED:
        return target, None
    n = target.shape[0]
    grid = "planar" if planar else settings.dict_grid
    hf = omp_hybrid_approx(target, _cached_dictionary(n, settings.dict_factor * n, grid), slots)
    return hf.product, hf


def run_sase(channel: ChannelInstance, settings: SaseSettings, noise: NoiseModel) -> SaseResult:
    """Both sounding stages followed by subspace extraction and approximation."""
    n_r, n_t = channel.shape
    m = settings.m
    if not 1 <= m <= n_t:
        raise InvalidParameterError(f"column budget m={m} outside 1..{n_t}")
    planar = channel.rx.kind == "upa"

    stage1 = collect_stage_one(channel, m, settings.m_rf, noise, n_rf=settings.n_rf)
    y_s = stage1.y_post_dft

    cap = min(settings.m_rf, settings.n_rf)
    if settings.num_paths == "auto":
        spectrum = np.linalg.svd(y_s, compute_uv=False)
        num_paths = estimate_path_count(
            spectrum, cap, settings.path_policy, sigma2=stage1.sigma2, shape=y_s.shape
        )
    else:
        num_paths = int(settings.num_paths)
    if num_paths < 1:
        raise InvalidParameterError("number of paths must be positive")
    if num_paths > m:
        raise InvalidParameterError(f"L={num_paths} exceeds column budget m={m}")
    if settings.mode == HYBRID and num_paths > cap:
        raise InvalidParameterError(f"L={num_paths} exceeds min(M_RF, N_RF)={cap}")

    u_hat = left_subspace(y_s, num_paths)
    w, w_hybrid = _approximate(u_hat.frame, settings, settings.m_rf, planar)

    stage2 = collect_stage_two(channel, w, m, noise, n_rf=settings.n_rf)
    q_hat = build_q(hermitian(w) @ y_s, stage2.q_c)
    v_hat = right_subspace(q_hat, num_paths)
    f, f_hybrid = _approximate(v_hat.frame, settings, settings.n_rf, planar)

    return SaseResult(w, f, u_hat, v_hat, stage1, stage2, w_hybrid, f_hybrid)
