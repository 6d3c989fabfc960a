"""Small complex linear-algebra helpers shared across modules."""

from __future__ import annotations

import numpy as np


def complex_normal(rng: np.random.Generator, shape, sigma2: float = 1.0) -> np.ndarray:
    """Draw i.i.d. CN(0, sigma2) samples as (x + jy) * sqrt(sigma2 / 2)."""
    x = rng.standard_normal(shape)
    y = rng.standard_normal(shape)
    return (x + 1j * y) * np.sqrt(sigma2 / 2.0)


def hermitian(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def canonicalize_phase(u: np.ndarray, v: np.ndarray | None = None, tol: float = 1e-12):
    """Rotate each column of `u` so its first non-negligible entry is real positive.

    If `v` is given, the same per-column phases are applied to it, which keeps
    ``u @ diag(s) @ v^H`` unchanged for an SVD triple.
    """
    u = np.array(u, dtype=complex, copy=True)
    phases = np.ones(u.shape[1], dtype=complex)
    for k in range(u.shape[1]):
        col = u[:, k]
        idx = np.flatnonzero(np.abs(col) > tol * max(np.abs(col).max(), 1.0))
        if idx.size:
            z = col[idx[0]]
            phases[k] = np.conj(z) / abs(z)
    u *= phases[None, :]
    if v is None:
        return u
    v = np.array(v, dtype=complex, copy=True) * phases[None, :]
    return u, v


def is_semi_unitary(q: np.ndarray, tol: float = 1e-8) -> bool:
    """True when ``q^H q`` equals the identity within `tol` (max-abs)."""
    gram = hermitian(q) @ q
    return bool(np.max(np.abs(gram - np.eye(q.shape[1]))) <= tol)


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between col(a) and col(b).

    Both inputs are orthonormalised first, so any full-column-rank bases work.
    Small angles are computed from the sine formula to stay accurate near zero.
    """
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    # sines come from the component of qb orthogonal to qa
    resid = qb - qa @ (hermitian(qa) @ qb)
    sines = np.linalg.svd(resid, compute_uv=False)
    cosines = np.linalg.svd(hermitian(qa) @ qb, compute_uv=False)
    k = min(qa.shape[1], qb.shape[1])
    sines = np.sort(np.clip(sines[:k], 0.0, 1.0))
    cosines = np.sort(np.clip(cosines[:k], 0.0, 1.0))[::-1]
    return np.where(sines < 0.5, np.arcsin(sines), np.arccos(cosines))


def sigma_k(a: np.ndarray, k: int) -> float:
    """k-th largest singular value (1-based); 0 when `a` has fewer than k."""
    s = np.linalg.svd(a, compute_uv=False)
    return float(s[k - 1]) if k <= s.size else 0.0


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major stacking."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(x).reshape(rows, cols, order="F")


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed n x n unitary."""
    z = complex_normal(rng, (n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]
