"""Independent numerical oracles used to freeze expected test values.

These deliberately avoid the package's own linear algebra and tensor
code paths: the SVD oracle is a one-sided Jacobi iteration, the
transverse-field chain oracle diagonalizes the free-fermion form of the
open chain, and the bulk energy is a plain quadrature of the dispersion.
"""

import numpy as np
from scipy.integrate import quad


def jacobi_svd(M, sweeps=60, tol=1e-14):
    """One-sided Jacobi SVD: returns singular values (descending) and U, V."""
    A = np.array(M, dtype=float)
    m, n = A.shape
    transposed = False
    if m < n:
        A = A.T
        m, n = A.shape
        transposed = True
    V = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap = A[:, p] @ A[:, p]
                aq = A[:, q] @ A[:, q]
                apq = A[:, p] @ A[:, q]
                off = max(off, abs(apq))
                if abs(apq) <= tol * np.sqrt(ap * aq) or apq == 0.0:
                    continue
                tau = (aq - ap) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                Ap = A[:, p].copy()
                A[:, p] = c * Ap - s * A[:, q]
                A[:, q] = s * Ap + c * A[:, q]
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
        if off < tol:
            break
    svals = np.linalg.norm(A, axis=0)
    order = np.argsort(svals)[::-1]
    svals = svals[order]
    U = np.zeros((m, n))
    for k, idx in enumerate(order):
        if svals[k] > 0:
            U[:, k] = A[:, idx] / svals[k]
    V = V[:, order]
    if transposed:
        return svals, V, U
    return svals, U, V


def ff_chain_energy(n_sites, J, h):
    """Exact ground energy of H = -h sum sx + J sum sz sz on an open chain.

    After rotating x<->z and a Jordan-Wigner transformation the problem
    is quadratic; the ground energy is minus half the sum of the
    singular values of the upper-bidiagonal matrix with 2h on the
    diagonal and 2J above it.
    """
    A = np.zeros((n_sites, n_sites))
    np.fill_diagonal(A, 2.0 * h)
    for i in range(n_sites - 1):
        A[i, i + 1] = 2.0 * J
    return -0.5 * float(np.sum(np.linalg.svd(A, compute_uv=False)))


def tfim_bulk_energy(J, h):
    """Bulk energy per site -(1/2pi) int_0^2pi sqrt(J^2+h^2-2Jh cos k) dk."""
    val, err = quad(
        lambda k: np.sqrt(J * J + h * h - 2.0 * J * h * np.cos(k)),
        0.0,
        2.0 * np.pi,
        limit=400,
        epsabs=1e-13,
        epsrel=1e-13,
    )
    assert err < 1e-10
    return -val / (2.0 * np.pi)


def dicke_mx_star(g, eps, omega_c=1.0):
    """Closed-form self-consistent m_x of the single-site (J=0) problem."""
    if g * g <= 2.0 * eps * omega_c:
        return 0.0
    return float(np.sqrt(0.25 - (eps * omega_c / g**2) ** 2))


def dicke_energy(g, eps, m_x, omega_c=1.0):
    """Total energy per site of the J=0 model at transverse magnetization m_x."""
    h = g * g * m_x / omega_c
    return g * g * m_x * m_x / omega_c - float(np.sqrt(h * h + eps * eps))
