"""Finite matrix-product states with explicit orthogonality center.

Site tensors carry legs (left bond, physical, right bond) with physical
dimension 2; index 0 is spin up (sigma^z = +1), index 1 spin down.  All
tensors are real float64.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MPS", "product_state", "measure_profiles", "SX", "SZ", "ID2"]

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
ID2 = np.eye(2)


class MPS:
    """Open-boundary MPS; mutating methods keep the state normalized."""

    def __init__(self, tensors: list[np.ndarray], center: int | None = None):
        if not tensors:
            raise ValueError("MPS needs at least one site tensor")
        self.tensors = [np.asarray(t, dtype=float) for t in tensors]
        for i, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValueError(f"site tensor {i} must have shape (l, 2, r)")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("edge bonds must have dimension 1")
        self.center = center  # None: orthogonality not established

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MPS":
        return MPS([t.copy() for t in self.tensors], self.center)

    def norm(self) -> float:
        env = np.ones((1, 1))  # (bra bond, ket bond)
        for t in self.tensors:
            tmp = np.tensordot(env, t, axes=(1, 0))  # (bra_l, p, r_ket)
            env = np.tensordot(t, tmp, axes=((0, 1), (0, 1)))  # (r_bra, r_ket)
        return float(np.sqrt(abs(env[0, 0])))

    def canonicalize(self, center: int = 0) -> "MPS":
        """Bring into mixed-canonical form around ``center``, normalized."""
        n = self.n_sites
        if not 0 <= center < n:
            raise ValueError(f"center {center} out of range")
        # Left-orthonormalize everything, sweeping the remainder to the end,
        # then move the center back; QR keeps bond dimensions intact.
        for i in range(n - 1):
            l, p, r = self.tensors[i].shape
            q, rr = np.linalg.qr(self.tensors[i].reshape(l * p, r))
            k = q.shape[1]
            self.tensors[i] = q.reshape(l, p, k)
            self.tensors[i + 1] = np.tensordot(rr, self.tensors[i + 1], axes=(1, 0))
        nrm = np.linalg.norm(self.tensors[-1])
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero state")
        self.tensors[-1] = self.tensors[-1] / nrm
        self.center = n - 1
        while self.center > center:
            self._move_center_left()
        return self

    def _move_center_right(self):
        i = self.center
        l, p, r = self.tensors[i].shape
        q, rr = np.linalg.qr(self.tensors[i].reshape(l * p, r))
        self.tensors[i] = q.reshape(l, p, q.shape[1])
        self.tensors[i + 1] = np.tensordot(rr, self.tensors[i + 1], axes=(1, 0))
        self.center = i + 1

    def _move_center_left(self):
        i = self.center
        l, p, r = self.tensors[i].shape
        qt, rt = np.linalg.qr(self.tensors[i].reshape(l, p * r).T)
        self.tensors[i] = qt.T.reshape(qt.shape[1], p, r)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], rt.T, axes=(2, 0))
        self.center = i - 1

    def move_center(self, to: int):
        if self.center is None:
            self.canonicalize(to)
            return
        while self.center < to:
            self._move_center_right()
        while self.center > to:
            self._move_center_left()

    def expect_onsite(self, op: np.ndarray, site: int) -> float:
        """Single-site expectation value; moves the center to ``site``."""
        self.move_center(to=site)
        a = self.tensors[site]
        return float(np.einsum("lpr,pq,lqr->", a, op, a))


def product_state(n_sites: int, pattern: str) -> MPS:
    """Bond-dimension-1 product state.

    Patterns: ``minus_z`` (all spins down), ``plus_x`` (all along +x),
    ``neel_even_up`` (1-based even sites up, odd sites down).
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    down = np.array([0.0, 1.0])
    up = np.array([1.0, 0.0])
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    tensors = []
    for i in range(n_sites):
        if pattern == "minus_z":
            vec = down
        elif pattern == "plus_x":
            vec = plus
        elif pattern == "neel_even_up":
            vec = up if (i + 1) % 2 == 0 else down
        else:
            raise ValueError(f"unknown product-state pattern {pattern!r}")
        tensors.append(vec.reshape(1, 2, 1).copy())
    return MPS(tensors, center=None).canonicalize(0)


def measure_profiles(state: MPS) -> tuple[np.ndarray, np.ndarray]:
    """Per-site (<sigma^x_i>, <sigma^z_i>) profiles of a normalized MPS."""
    psi = state.copy()
    psi.canonicalize(0)
    n = psi.n_sites
    sx = np.empty(n)
    sz = np.empty(n)
    for i in range(n):
        psi.move_center(i)
        a = psi.tensors[i]
        rho = np.einsum("lpr,lqr->pq", a, a)
        sx[i] = float(np.sum(rho * SX))
        sz[i] = float(rho[0, 0] - rho[1, 1])
    return sx, sz
