"""Physical couplings and self-consistent field containers.

All couplings are measured in units of the photon frequency ``omega_c``
(kept explicit so dimensionful checks remain possible).  The sign of the
Ising coupling selects the regime: J < 0 ferromagnetic, J > 0
antiferromagnetic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["ModelParams", "SelfFields", "phase_label"]


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the spin chain coupled to a single cavity mode.

    J       -- nearest-neighbour Ising coupling (signed)
    eps     -- longitudinal half-splitting, eps >= 0
    g       -- spin-photon coupling, g >= 0
    omega_c -- photon frequency, > 0
    D       -- optional diamagnetic (A^2) coefficient, >= 0
    """

    J: float
    eps: float
    g: float
    omega_c: float = 1.0
    D: float = 0.0

    def __post_init__(self):
        if not np.isfinite([self.J, self.eps, self.g, self.omega_c, self.D]).all():
            raise ValueError("model parameters must be finite")
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        if self.g < 0:
            raise ValueError(f"g must be non-negative, got {self.g}")
        if self.D < 0:
            raise ValueError(f"D must be non-negative, got {self.D}")

    def with_(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class SelfFields:
    """Self-consistent pair (m_x, m_s).

    m_x is the transverse magnetization per site in the <S_x>/N convention
    and m_s the staggered z-magnetization per site; both live in
    [-1/2, 1/2].
    """

    m_x: float = 0.0
    m_s: float = 0.0

    def __post_init__(self):
        for name, v in (("m_x", self.m_x), ("m_s", self.m_s)):
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
            if abs(v) > 0.5 + 1e-12:
                raise ValueError(f"{name} must lie in [-1/2, 1/2], got {v}")

    def with_(self, **kwargs) -> "SelfFields":
        return replace(self, **kwargs)


def phase_label(m_x: float, m_s: float, threshold: float = 1e-6) -> str:
    """Classify a converged field pair into one of PN, PS, AN, AS."""
    superradiant = abs(m_x) > threshold
    antiferro = abs(m_s) > threshold
    return ("A" if antiferro else "P") + ("S" if superradiant else "N")
