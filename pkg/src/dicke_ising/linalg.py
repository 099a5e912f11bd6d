"""Dense linear-algebra kernel for the tensor-network solver.

Matrices are plain float64 ``numpy.ndarray`` objects in row-major order;
the decompositions below are the only entry points the DMRG code uses.
SVD and dense symmetric diagonalization are delegated to LAPACK, the
ground-state Krylov solver is implemented here with full
re-orthogonalization (restarted every 200 vectors) because truncation
and breakdown handling have to match the solver contract exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

__all__ = [
    "TruncatedSVD",
    "LanczosBreakdown",
    "NotConverged",
    "svd_truncated",
    "lanczos_ground",
    "eigh_dense",
]

# Restart length for the Krylov basis; robustness over speed at the small
# local dimensions (<= 4 * chi^2) that occur inside DMRG.
_LANCZOS_RESTART = 200
_BREAKDOWN_NORM = 1e-14


class LanczosBreakdown(RuntimeError):
    """Krylov vector collapsed before any eigenpair converged."""


class NotConverged(RuntimeError):
    """Iteration budget exhausted; carries the best estimate found."""

    def __init__(self, message, eigenvalue=None, eigenvector=None, residual=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.eigenvector = eigenvector
        self.residual = residual


@dataclass(frozen=True)
class TruncatedSVD:
    """Rank-truncated SVD with bookkeeping of the discarded weight.

    ``discarded_weight`` is the sum of squared discarded singular values
    divided by the total squared weight.  ``capped`` marks truncations
    where the max-dimension cap forced more discarding than the cutoff
    alone would have.
    """

    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray
    discarded_weight: float
    capped: bool = False

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def svd_truncated(M: np.ndarray, cutoff: float, max_dim: int) -> TruncatedSVD:
    """SVD of ``M`` truncated to relative discarded squared weight <= cutoff.

    Keeps the smallest rank whose discarded relative squared weight does
    not exceed ``cutoff``, then extends the kept set across ties (values
    equal to the last kept one within 1e-14 relative) and finally caps at
    ``max_dim``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("svd_truncated requires a non-empty 2D matrix")
    if not np.isfinite(M).all():
        raise ValueError("svd_truncated requires finite input")
    if not (0.0 <= cutoff < 1.0):
        raise ValueError(f"cutoff must lie in [0, 1), got {cutoff}")
    if max_dim < 1:
        raise ValueError(f"max_dim must be >= 1, got {max_dim}")

    try:
        U, S, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but safe.
        U, S, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")

    total = float(np.sum(S * S))
    if total == 0.0:
        return TruncatedSVD(U[:, :1], S[:1], Vt[:1], 0.0, False)

    # tail[k-1] = squared weight discarded when keeping k values.
    tail = np.concatenate([np.cumsum((S * S)[::-1])[::-1][1:], [0.0]])
    # Smallest k with discarded squared weight <= cutoff * total.
    keep = int(np.searchsorted(-tail, -cutoff * total)) + 1
    keep = min(max(keep, 1), len(S))
    # Tie rule: keep every value equal (1e-14 relative) to the last kept one.
    while keep < len(S) and S[keep] >= S[keep - 1] * (1.0 - 1e-14):
        keep += 1

    capped = False
    if keep > max_dim:
        keep = max_dim
        capped = bool(tail[keep - 1] > cutoff * total)

    dw = float(tail[keep - 1]) / total
    return TruncatedSVD(
        np.ascontiguousarray(U[:, :keep]),
        S[:keep].copy(),
        np.ascontiguousarray(Vt[:keep]),
        dw,
        capped,
    )


def eigh_dense(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum of a symmetric matrix, eigenvalues ascending."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.size == 0:
        raise ValueError("eigh_dense requires a non-empty square matrix")
    if not np.isfinite(M).all():
        raise ValueError("eigh_dense requires finite input")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise ValueError("eigh_dense requires a symmetric matrix")
    return np.linalg.eigh(M)


def _tridiag_ground(alphas, betas):
    """Lowest eigenpair of the Lanczos tridiagonal matrix."""
    a = np.asarray(alphas)
    b = np.asarray(betas)
    if len(a) == 1:
        return float(a[0]), np.ones(1)
    vals, vecs = scipy.linalg.eigh_tridiagonal(a, b, select="i", select_range=(0, 0))
    return float(vals[0]), vecs[:, 0]


def lanczos_ground(
    apply: Callable[[np.ndarray], np.ndarray],
    v0: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a symmetric linear map from a Krylov search.

    ``apply`` must implement a symmetric operator; ``v0`` seeds the
    Krylov space.  Returns ``(eigenvalue, unit eigenvector)`` with
    residual ||A v - lambda v|| <= tol * max(1, |lambda|).  Restarts from
    the current Ritz vector after 200 Krylov vectors; raises
    ``LanczosBreakdown`` if the basis collapses before anything
    converged, ``NotConverged`` when the matvec budget runs out.
    """
    v0 = np.asarray(v0, dtype=float).ravel()
    n = v0.size
    nrm = np.linalg.norm(v0)
    if nrm < _BREAKDOWN_NORM:
        raise LanczosBreakdown("starting vector has vanishing norm")
    v = v0 / nrm

    if n == 1:
        lam = float(apply(v)[0] / v[0]) if v[0] != 0 else float(apply(np.ones(1))[0])
        return lam, np.ones(1)

    best_val = None
    best_vec = None
    best_res = np.inf
    matvecs = 0

    while matvecs < max_iter:
        V = np.empty((min(_LANCZOS_RESTART, max_iter - matvecs) + 1, n))
        V[0] = v
        alphas: list[float] = []
        betas: list[float] = []
        w = np.asarray(apply(v), dtype=float).ravel()
        matvecs += 1
        j = 0
        while True:
            alpha = float(V[j] @ w)
            alphas.append(alpha)
            w -= alpha * V[j]
            if j > 0:
                w -= betas[-1] * V[j - 1]
            # Full re-orthogonalization, applied twice for stability.
            basis = V[: j + 1]
            w -= basis.T @ (basis @ w)
            w -= basis.T @ (basis @ w)
            beta = float(np.linalg.norm(w))

            at_edge = (
                beta < _BREAKDOWN_NORM or matvecs >= max_iter or j + 1 >= len(V) - 1
            )
            if not at_edge and j % 2 == 0 and j > 0:
                # The tridiagonal solve is not free; checking every other
                # step halves its cost without extra matvecs.
                betas.append(beta)
                j += 1
                V[j] = w / beta
                w = np.asarray(apply(V[j]), dtype=float).ravel()
                matvecs += 1
                continue

            theta, s = _tridiag_ground(alphas, betas)
            cand = basis.T @ s
            cand_nrm = np.linalg.norm(cand)
            if cand_nrm > 0:
                cand /= cand_nrm
            res_est = abs(beta * s[-1])
            threshold = tol * max(1.0, abs(theta))

            if res_est <= threshold or at_edge:
                # Verify with an explicit residual before accepting.
                Av = np.asarray(apply(cand), dtype=float).ravel()
                matvecs += 1
                lam = float(cand @ Av)
                res = float(np.linalg.norm(Av - lam * cand))
                if res < best_res:
                    best_val, best_vec, best_res = lam, cand, res
                if res <= tol * max(1.0, abs(lam)):
                    return lam, cand
                if beta < _BREAKDOWN_NORM:
                    # Invariant subspace exhausted without meeting the
                    # tolerance: nothing further can improve.
                    if best_vec is not None and best_res <= 1e-8 * max(1.0, abs(best_val)):
                        return best_val, best_vec
                    raise LanczosBreakdown(
                        f"Krylov basis collapsed (beta={beta:.2e}) with residual {res:.2e}"
                    )
                if matvecs >= max_iter:
                    raise NotConverged(
                        f"no convergence within {max_iter} matrix applications "
                        f"(best residual {best_res:.2e})",
                        eigenvalue=best_val,
                        eigenvector=best_vec,
                        residual=best_res,
                    )
                if j + 1 >= len(V) - 1:
                    v = cand  # restart from the current Ritz vector
                    break

            betas.append(beta)
            j += 1
            V[j] = w / beta
            w = np.asarray(apply(V[j]), dtype=float).ravel()
            matvecs += 1

    raise NotConverged(
        f"no convergence within {max_iter} matrix applications "
        f"(best residual {best_res:.2e})",
        eigenvalue=best_val,
        eigenvector=best_vec,
        residual=best_res,
    )
