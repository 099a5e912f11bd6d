"""Matrix-product operator for the effective matter Hamiltonian.

The encoded operator is

    H = -h_x sum_i sx_i + eps sum_i sz_i + J sum_i sz_i sz_{i+1}

with the self-consistent transverse field h_x = g^2 m_x / omega_c.  With
antiferromagnetic boundary fields enabled it additionally carries
+2 J m_s sz_1 - 2 J m_s sz_N, the mean-field coupling of the edge spins
to the ordered environment.  The extensive constant (g^2/omega_c) m_x^2
per site stays out of the tensors as ``energy_offset``.

Sites are counted from 1 with staggering sign (-1)^i, so m_s > 0 means
even sites point up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, SelfFields
from .mps import ID2, SX, SZ

__all__ = ["MPO", "build_mpo", "effective_field_value", "stagger_signs"]


def effective_field_value(params: ModelParams, m_x: float) -> float:
    """Self-consistent transverse field h_x = g^2 m_x / omega_c."""
    return params.g**2 * m_x / params.omega_c


def stagger_signs(n_sites: int) -> np.ndarray:
    """Signs (-1)^i for 1-based site index i, as a length-n array."""
    return np.array([(-1.0) ** (i + 1) for i in range(n_sites)])


@dataclass(frozen=True)
class MPO:
    """Bond-dimension-3 MPO with edge terms absorbed into edge vectors."""

    tensors: list[np.ndarray] = field(repr=False)
    energy_offset: float = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def to_dense(self) -> np.ndarray:
        """Contract to a dense matrix (test helper; exponential cost)."""
        t = self.tensors[0][0]  # (wr, p_out, p_in)
        dim = 2
        for w in self.tensors[1:]:
            t = np.einsum("apq,abrs->bprqs", t, w)
            dim *= 2
            t = t.reshape(w.shape[1], dim, dim)
        return t[0]


def build_mpo(
    params: ModelParams,
    fields: SelfFields,
    n_sites: int,
    with_af_boundary: bool = False,
) -> MPO:
    """Assemble the effective Hamiltonian MPO on ``n_sites`` sites."""
    if n_sites < 2:
        raise ValueError(f"MPO needs at least two sites, got {n_sites}")
    if with_af_boundary and n_sites % 2 != 0:
        raise ValueError("antiferromagnetic boundary fields require even n_sites")

    h_x = effective_field_value(params, fields.m_x)
    onsite = -h_x * SX + params.eps * SZ
    first = onsite.copy()
    last = onsite.copy()
    if with_af_boundary:
        b = 2.0 * params.J * fields.m_s
        first += b * SZ
        last -= b * SZ

    # Tensor legs: (w_left, w_right, p_out, p_in).
    bulk = np.zeros((3, 3, 2, 2))
    bulk[0, 0] = ID2
    bulk[1, 0] = SZ
    bulk[2, 0] = onsite
    bulk[2, 1] = params.J * SZ
    bulk[2, 2] = ID2

    left = np.zeros((1, 3, 2, 2))
    left[0, 0] = first
    left[0, 1] = params.J * SZ
    left[0, 2] = ID2

    right = np.zeros((3, 1, 2, 2))
    right[0, 0] = ID2
    right[1, 0] = SZ
    right[2, 0] = last

    tensors = [left] + [bulk.copy() for _ in range(n_sites - 2)] + [right]
    offset = params.g**2 * fields.m_x**2 / params.omega_c * n_sites
    return MPO(tensors, energy_offset=offset)
