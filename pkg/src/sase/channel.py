"""Sparse mmWave MIMO channel synthesis for ULA and UPA geometries.

Channels are the usual finite-scatterer model

    H = sqrt(N_r N_t / L) * sum_l h_l a_r(aoa_l) a_t(aod_l)^H

with half-wavelength spacing. Every :class:`ChannelInstance` carries its true
compact SVD so estimators can be scored against ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidParameterError, ShapeError
from .linalg import canonicalize_phase, complex_normal

ULA = "ula"
UPA = "upa"

# angles closer than this count as duplicates and trigger a redraw
_DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class ArrayGeometry:
    kind: str
    num_antennas: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in (ULA, UPA):
            raise InvalidParameterError(f"unknown array kind {self.kind!r}")
        if self.num_antennas < 1:
            raise InvalidParameterError("num_antennas must be positive")
        if kind == UPA and math.isqrt(self.num_antennas) ** 2 != self.num_antennas:
            raise InvalidParameterError(
                f"UPA needs a square antenna count, got {self.num_antennas}"
            )
        if self.spacing_ratio != 0.5:
            raise InvalidParameterError("only half-wavelength spacing is supported")

    @property
    def side(self) -> int:
        """Antennas per UPA edge (equals num_antennas for a ULA)."""
        if self.kind == UPA:
            return math.isqrt(self.num_antennas)
        return self.num_antennas

    def response(self, angles: np.ndarray) -> np.ndarray:
        """Stack steering vectors for a batch of angles as columns."""
        if self.kind == ULA:
            return ula_response(np.asarray(angles, dtype=float), self.num_antennas)
        angles = np.asarray(angles, dtype=float).reshape(-1, 2)
        return upa_response(angles[:, 0], angles[:, 1], self.num_antennas)


def ula_response(thetas, n: int) -> np.ndarray:
    """n x len(thetas) matrix of ULA steering vectors."""
    if n < 1:
        raise InvalidParameterError(f"antenna count must be positive, got {n}")
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    k = np.arange(n)[:, None]
    return np.exp(-1j * np.pi * k * np.sin(thetas)[None, :]) / np.sqrt(n)


def upa_response(azimuths, elevations, n: int) -> np.ndarray:
    """n x P matrix of UPA steering vectors, antenna (m, p) at row m*sqrt(n) + p."""
    side = math.isqrt(n) if n >= 0 else -1
    if n < 1 or side * side != n:
        raise InvalidParameterError(f"UPA needs a positive square antenna count, got {n}")
    az = np.atleast_1d(np.asarray(azimuths, dtype=float))
    el = np.atleast_1d(np.asarray(elevations, dtype=float))
    mm, pp = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    mm = mm.reshape(-1, 1)
    pp = pp.reshape(-1, 1)
    phase = mm * (np.sin(az) * np.sin(el))[None, :] + pp * np.cos(el)[None, :]
    return np.exp(1j * np.pi * phase) / np.sqrt(n)


def steering_vector_ula(theta: float, n: int) -> np.ndarray:
    """Unit-norm ULA response at angle `theta` (radians)."""
    return ula_response(theta, n)[:, 0]


def steering_vector_upa(azimuth: float, elevation: float, n: int) -> np.ndarray:
    """Unit-norm UPA response, row-major flattened over the square grid."""
    return upa_response(azimuth, elevation, n)[:, 0]


@dataclass(frozen=True)
class PathSet:
    """Propagation paths. UPA angles are (azimuth, elevation) rows."""

    aoa: np.ndarray
    aod: np.ndarray
    gains: np.ndarray
    kind: str = ULA
    cluster_shape: tuple[int, int] | None = None

    def __post_init__(self):
        n = len(self.gains)
        if len(self.aoa) != n or len(self.aod) != n:
            raise ShapeError("aoa, aod and gains must have equal length")
        if self.cluster_shape is not None and self.cluster_shape[0] * self.cluster_shape[1] != n:
            raise ShapeError("cluster_shape does not match the number of paths")

    @property
    def count(self) -> int:
        return len(self.gains)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "aoa": np.asarray(self.aoa).tolist(),
            "aod": np.asarray(self.aod).tolist(),
            "gains": complex_to_pairs(self.gains),
            "cluster_shape": list(self.cluster_shape) if self.cluster_shape else None,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PathSet":
        shape = d.get("cluster_shape")
        return cls(
            aoa=np.asarray(d["aoa"], dtype=float),
            aod=np.asarray(d["aod"], dtype=float),
            gains=pairs_to_complex(d["gains"]),
            kind=d["kind"],
            cluster_shape=tuple(shape) if shape else None,
        )


def _has_duplicates(angles: np.ndarray) -> bool:
    a = np.asarray(angles, dtype=float).reshape(len(angles), -1)
    for i in range(len(a)):
        if np.any(np.max(np.abs(a[i + 1:] - a[i]), axis=1) < _DUPLICATE_TOL):
            return True
    return False


def sample_paths(
    num_paths: int,
    kind: str,
    rng: np.random.Generator,
    *,
    gain_variance=1.0,
    cluster_shape: tuple[int, int] | None = None,
) -> PathSet:
    """Draw angles uniformly on [-pi/2, pi/2) and CN(0, gain_variance) gains.

    For a UPA every angle is an (azimuth, elevation) pair with both components
    drawn from the same interval. The whole set is redrawn in the (null)
    event that two arrival or two departure angles coincide.
    """
    if num_paths < 1:
        raise InvalidParameterError(f"need at least one path, got {num_paths}")
    kind = kind.lower()
    if kind not in (ULA, UPA):
        raise InvalidParameterError(f"unknown array kind {kind!r}")
    if kind == UPA and cluster_shape is None:
        cluster_shape = (num_paths, 1)
    if cluster_shape is not None and cluster_shape[0] * cluster_shape[1] != num_paths:
        raise ShapeError("cluster_shape does not multiply out to num_paths")

    shape = (num_paths,) if kind == ULA else (num_paths, 2)
    while True:
        aoa = rng.uniform(-np.pi / 2, np.pi / 2, size=shape)
        aod = rng.uniform(-np.pi / 2, np.pi / 2, size=shape)
        gains = complex_normal(rng, num_paths, 1.0) * np.sqrt(gain_variance)
        if not (_has_duplicates(aoa) or _has_duplicates(aod)):
            break
    return PathSet(aoa=aoa, aod=aod, gains=gains, kind=kind, cluster_shape=cluster_shape)


@dataclass(frozen=True)
class ChannelInstance:
    matrix: np.ndarray
    paths: PathSet
    rx: ArrayGeometry
    tx: ArrayGeometry
    true_left: np.ndarray = field(repr=False)
    true_singulars: np.ndarray = field(repr=False)
    true_right: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def rank(self) -> int:
        return self.true_singulars.size

    def to_json(self) -> str:
        return json.dumps(
            {
                "matrix": complex_to_pairs(self.matrix),
                "paths": self.paths.to_dict(),
                "rx": {"kind": self.rx.kind, "num_antennas": self.rx.num_antennas},
                "tx": {"kind": self.tx.kind, "num_antennas": self.tx.num_antennas},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ChannelInstance":
        d = json.loads(text)
        paths = PathSet.from_dict(d["paths"])
        return from_matrix(
            pairs_to_complex(d["matrix"]),
            paths,
            ArrayGeometry(**d["rx"]),
            ArrayGeometry(**d["tx"]),
        )


def truncated_svd(matrix: np.ndarray, rank: int):
    """Top-`rank` SVD factors with phase-canonical left vectors."""
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    u, v = canonicalize_phase(u[:, :rank], vh[:rank].conj().T)
    return u, s[:rank], v


def from_matrix(matrix, paths: PathSet, rx: ArrayGeometry, tx: ArrayGeometry) -> ChannelInstance:
    """Wrap an existing channel matrix, computing its cached SVD factors."""
    matrix = np.asarray(matrix, dtype=complex)
    rank = min(paths.count, *matrix.shape)
    u, s, v = truncated_svd(matrix, rank)
    return ChannelInstance(matrix, paths, rx, tx, u, s, v)


def assemble_channel(paths: PathSet, rx: ArrayGeometry, tx: ArrayGeometry) -> ChannelInstance:
    """Build H from a path set; ULA and UPA use the same scaling sqrt(N_r N_t / P)."""
    if rx.kind != paths.kind or tx.kind != paths.kind:
        raise ShapeError(
            f"geometry kinds ({rx.kind}, {tx.kind}) do not match paths ({paths.kind})"
        )
    a_r = rx.response(paths.aoa)
    a_t = tx.response(paths.aod)
    scale = np.sqrt(rx.num_antennas * tx.num_antennas / paths.count)
    matrix = scale * (a_r * paths.gains[None, :]) @ a_t.conj().T
    return from_matrix(matrix, paths, rx, tx)


def random_channel(
    rng: np.random.Generator,
    n_r: int,
    n_t: int,
    num_paths: int,
    kind: str = ULA,
    cluster_shape: tuple[int, int] | None = None,
) -> ChannelInstance:
    """Convenience: sample paths and assemble in one call."""
    paths = sample_paths(num_paths, kind, rng, cluster_shape=cluster_shape)
    return assemble_channel(paths, ArrayGeometry(kind, n_r), ArrayGeometry(kind, n_t))


def numerical_rank(matrix: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Number of singular values at least ``rel_tol * sigma_1``."""
    if not 0.0 < rel_tol < 1.0:
        raise InvalidParameterError("rel_tol must lie in (0, 1)")
    s = np.linalg.svd(np.asarray(matrix), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s >= rel_tol * s[0]))


def complex_to_pairs(a) -> list:
    """Nested lists with each complex entry replaced by [re, im] (row-major)."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]
