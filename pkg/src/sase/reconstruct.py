"""Channel reconstruction from estimated column/row frames.

With frames W (N_r x L) and F (N_t x L) fixed, the estimate is
``H_hat = W R F^H`` and only the L x L core R is unknown. Stacking both
stages' residuals gives an L^2-dimensional linear least-squares problem whose
normal equations are built here and solved by Cholesky.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import IllConditionedError, NumericalError, ShapeError
from .linalg import hermitian, unvec, vec

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class CoreCoefficient:
    r_matrix: np.ndarray
    r_vec: np.ndarray
    condition: float = 1.0

    @classmethod
    def from_vec(cls, r_vec: np.ndarray, condition: float = 1.0) -> "CoreCoefficient":
        size = int(round(np.sqrt(r_vec.size)))
        return cls(unvec(r_vec, size, size), np.asarray(r_vec), condition)

    @classmethod
    def from_matrix(cls, r_matrix: np.ndarray) -> "CoreCoefficient":
        return cls(np.asarray(r_matrix), vec(r_matrix))


@dataclass(frozen=True)
class ChannelEstimate:
    w_frame: np.ndarray
    core: CoreCoefficient
    f_frame: np.ndarray

    @cached_property
    def dense(self) -> np.ndarray:
        return self.w_frame @ self.core.r_matrix @ hermitian(self.f_frame)

    def dominant_modes(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Rotate both frames onto the SVD of the core and keep the top `k` modes.

        The rotation is absorbed by the digital stages, so hybrid frames stay
        hybrid-feasible.
        """
        p, _, qh = np.linalg.svd(self.core.r_matrix)
        return self.w_frame @ p[:, :k], self.f_frame @ hermitian(qh)[:, :k]


def _split_rows(f_hat: np.ndarray, m: int):
    return f_hat[:m], f_hat[m:]


def _check_shapes(w_hat, f_hat, y_s, q_c, m):
    n_r, rank = w_hat.shape
    n_t = f_hat.shape[0]
    if f_hat.shape[1] != rank:
        raise ShapeError(f"frames have different widths {rank} and {f_hat.shape[1]}")
    if not 1 <= m <= n_t:
        raise ShapeError(f"m={m} outside 1..{n_t}")
    if y_s.shape != (n_r, m):
        raise ShapeError(f"Y_S shape {y_s.shape}, expected {(n_r, m)}")
    if q_c.shape != (rank, n_t - m):
        raise ShapeError(f"Q_C shape {q_c.shape}, expected {(rank, n_t - m)}")


def kronecker_operators(w_hat, f_hat, m):
    """Explicit A1 = conj(F[:m]) kron W and A2 = conj(F[m:]) kron I_L."""
    rank = w_hat.shape[1]
    f1, f2 = _split_rows(f_hat, m)
    a1 = np.kron(f1.conj(), w_hat)
    a2 = np.kron(f2.conj(), np.eye(rank))
    return a1, a2


def build_ls_system(w_hat, f_hat, y_s, q_c, m: int, *, method: str = "structured"):
    """Normal equations (gram, rhs) for the vectorised core.

    ``method="kronecker"`` materialises both Kronecker operators;
    ``method="structured"`` uses the mixed-product identities instead:
    gram = conj(F1^H F1) kron W^H W + conj(F2^H F2) kron I and
    rhs = vec(W^H Y_S F1 + Q_C F2).
    """
    w_hat = np.asarray(w_hat)
    f_hat = np.asarray(f_hat)
    y_s = np.asarray(y_s)
    q_c = np.asarray(q_c)
    _check_shapes(w_hat, f_hat, y_s, q_c, m)
    rank = w_hat.shape[1]

    if method == "kronecker":
        a1, a2 = kronecker_operators(w_hat, f_hat, m)
        gram = hermitian(a1) @ a1 + hermitian(a2) @ a2
        rhs = hermitian(a1) @ vec(y_s) + hermitian(a2) @ vec(q_c)
    elif method == "structured":
        f1, f2 = _split_rows(f_hat, m)
        gram = np.kron((hermitian(f1) @ f1).conj(), hermitian(w_hat) @ w_hat)
        gram = gram + np.kron((hermitian(f2) @ f2).conj(), np.eye(rank))
        rhs = vec(hermitian(w_hat) @ y_s @ f1 + q_c @ f2)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (gram + hermitian(gram)) / 2, rhs


def solve_core(gram: np.ndarray, rhs: np.ndarray, *, max_condition: float = MAX_CONDITION) -> CoreCoefficient:
    """Solve the Hermitian positive-definite normal equations by Cholesky."""
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedError(
            f"normal equations of size {gram.shape[0]} have condition number {cond:.3g}"
            f" (limit {max_condition:.0e}); the frames are likely rank deficient"
        )
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"gram matrix is not positive definite: {exc}") from exc
    r = scipy.linalg.cho_solve(factor, rhs)
    resid = np.linalg.norm(gram @ r - rhs)
    if resid > 1e-8 * max(np.linalg.norm(rhs), np.finfo(float).tiny):
        raise NumericalError(f"normal-equation residual {resid:.3g} too large")
    return CoreCoefficient.from_vec(r, cond)


def assemble_estimate(w_hat, core: CoreCoefficient, f_hat) -> ChannelEstimate:
    w_hat = np.asarray(w_hat)
    f_hat = np.asarray(f_hat)
    if core.r_matrix.shape != (w_hat.shape[1], f_hat.shape[1]):
        raise ShapeError("core size does not match frame widths")
    return ChannelEstimate(w_hat, core, f_hat)


def estimate_channel(w_hat, f_hat, y_s, q_c, m: int) -> ChannelEstimate:
    gram, rhs = build_ls_system(w_hat, f_hat, y_s, q_c, m)
    return assemble_estimate(w_hat, solve_core(gram, rhs), f_hat)


def ls_objective(r_matrix, w_hat, f_hat, y_s, q_c, m: int) -> float:
    """Sum of both stages' squared residuals for a candidate core."""
    h_hat = w_hat @ r_matrix @ hermitian(f_hat)
    return float(
        np.linalg.norm(y_s - h_hat[:, :m]) ** 2
        + np.linalg.norm(q_c - hermitian(w_hat) @ h_hat[:, m:]) ** 2
    )
