"""Turning sweep branches into phase boundaries.

First-order transitions announce themselves through hysteresis: the two
sweep directions ride different metastable branches through the
transition region, and the thermodynamic boundary is where their energy
curves cross (the window edges are spinodal-like and
resolution-dependent, so the crossing is used, not the window midpoint).
Continuous transitions are located by the order-parameter onset,
refined by re-solving the self-consistency at bisection points because
order parameters have infinite slope there and interpolation would bias
the location.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .meanfield import g_crit_ferro, weak_energy_ferro
from .model import ModelParams, SelfFields
from .selfconsist import (
    FERRO,
    ConvergedPoint,
    FixedPointConfig,
    SweepBranch,
    anderson_solve,
)
from .dmrg import DmrgSettings

__all__ = [
    "PhaseBoundary",
    "DeltaEResult",
    "detect_first_order",
    "detect_continuous",
    "delta_e_at_mf_critical",
    "multicritical_bisect",
    "SweepBranch",
]

ORDER_THRESHOLD = 1e-6


@dataclass(frozen=True)
class PhaseBoundary:
    swept: str  # g | eps
    location: float
    uncertainty: float
    kind: str  # first_order | continuous
    phases: tuple[str, str]  # labels (below, above)
    evidence: str  # branch_crossing | order_onset | delta_e
    low_confidence: bool = False


@dataclass(frozen=True)
class DeltaEResult:
    eps: float
    g_eval: float
    e_numeric: float
    e_weak: float
    delta_e: float  # e_numeric - e_weak, signed
    below_floor: bool
    e_numeric_minus_z: float = float("nan")
    e_numeric_plus_x: float = float("nan")


def _ordered(branch: SweepBranch) -> tuple[np.ndarray, list[ConvergedPoint]]:
    vals = branch.values()
    order = np.argsort(vals)
    return vals[order], [branch.points[k] for k in order]


def _nearest_class(vals, points, x):
    return points[int(np.argmin(np.abs(vals - x)))].classification


def detect_first_order(up: SweepBranch, down: SweepBranch) -> PhaseBoundary | None:
    """Boundary from the energy crossing of hysteresis branches.

    Returns None when the two sweep directions classify every shared
    grid value identically (no hysteresis window).  Otherwise the
    location is the root of the piecewise-linear difference between the
    branch energies inside the widest window of disagreement.
    """
    if up.swept != down.swept:
        raise ValueError("branches sweep different variables")
    uv, upts = _ordered(up)
    dv, dpts = _ordered(down)
    lo = max(uv[0], dv[0])
    hi = min(uv[-1], dv[-1])
    if hi <= lo:
        raise ValueError("branches cover disjoint intervals")

    grid = np.unique(np.concatenate([uv, dv]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    disagree = np.array(
        [_nearest_class(uv, upts, x) != _nearest_class(dv, dpts, x) for x in grid]
    )
    if not disagree.any():
        return None

    # Widest contiguous run of disagreement.
    runs = []
    k = 0
    while k < len(grid):
        if disagree[k]:
            j = k
            while j + 1 < len(grid) and disagree[j + 1]:
                j += 1
            runs.append((k, j))
            k = j + 1
        else:
            k += 1
    k0, k1 = max(runs, key=lambda r: grid[r[1]] - grid[r[0]])
    w_lo = grid[max(k0 - 1, 0)]
    w_hi = grid[min(k1 + 1, len(grid) - 1)]
    phases = (
        _nearest_class(uv, upts, w_lo),
        _nearest_class(dv, dpts, w_hi),
    )

    window = grid[(grid >= w_lo) & (grid <= w_hi)]
    e_up = np.interp(window, uv, [p.energy_per_site for p in upts])
    e_dn = np.interp(window, dv, [p.energy_per_site for p in dpts])
    diff = e_up - e_dn
    step_local = float(np.median(np.diff(window))) if window.size > 1 else w_hi - w_lo

    crossing = None
    for k in range(len(window) - 1):
        if np.isfinite(diff[k]) and np.isfinite(diff[k + 1]) and diff[k] * diff[k + 1] <= 0:
            if diff[k + 1] == diff[k]:
                crossing = 0.5 * (window[k] + window[k + 1])
            else:
                crossing = window[k] - diff[k] * (window[k + 1] - window[k]) / (
                    diff[k + 1] - diff[k]
                )
            break
    if crossing is None:
        return PhaseBoundary(
            swept=up.swept,
            location=0.5 * (w_lo + w_hi),
            uncertainty=0.5 * (w_hi - w_lo),
            kind="first_order",
            phases=phases,
            evidence="branch_crossing",
            low_confidence=True,
        )
    return PhaseBoundary(
        swept=up.swept,
        location=float(crossing),
        uncertainty=float(max(step_local, 1e-12)),
        kind="first_order",
        phases=phases,
        evidence="branch_crossing",
    )


def _order_value(point: ConvergedPoint, order_param: str) -> float:
    return abs(point.fields.m_x if order_param == "m_x" else point.fields.m_s)


def _slope_discontinuity(vals, energies, loc) -> bool:
    """True when the energy slope jumps by more than 10x the local curvature scale."""
    left = np.where(vals < loc)[0]
    right = np.where(vals > loc)[0]
    if len(left) < 2 or len(right) < 2:
        return False
    sl = (energies[left[-1]] - energies[left[-2]]) / (vals[left[-1]] - vals[left[-2]])
    sr = (energies[right[1]] - energies[right[0]]) / (vals[right[1]] - vals[right[0]])
    curv = 0.0
    if len(left) >= 3:
        s2 = (energies[left[-2]] - energies[left[-3]]) / (vals[left[-2]] - vals[left[-3]])
        curv = max(curv, abs(sl - s2))
    if len(right) >= 3:
        s2 = (energies[right[2]] - energies[right[1]]) / (vals[right[2]] - vals[right[1]])
        curv = max(curv, abs(sr - s2))
    return abs(sr - sl) > 10.0 * max(curv, 1e-12)


def detect_continuous(
    branch: SweepBranch,
    order_param: str,
    solve_at: Callable[[float, ConvergedPoint], ConvergedPoint] | None = None,
    counterpart: SweepBranch | None = None,
    refine_tol: float = 5e-4,
    threshold: float = ORDER_THRESHOLD,
) -> list[PhaseBoundary]:
    """Boundaries where ``order_param`` crosses the classification threshold.

    ``solve_at(value, warm_from)`` re-solves the self-consistency during
    bisection refinement; without it the location is the midpoint of the
    bracketing grid interval.  A boundary is labelled continuous only if
    the counterpart branch (when given) finds it at the same place
    within twice the refinement tolerance and the energy slope shows no
    kink; otherwise it is labelled first_order.
    """
    if order_param not in ("m_x", "m_s"):
        raise ValueError(f"unknown order parameter {order_param!r}")
    vals, pts = _ordered(branch)
    energies = np.array([p.energy_per_site for p in pts])
    boundaries: list[PhaseBoundary] = []
    for k in range(len(pts) - 1):
        below = _order_value(pts[k], order_param) > threshold
        above = _order_value(pts[k + 1], order_param) > threshold
        if below == above:
            continue
        low_conf = not (pts[k].converged and pts[k + 1].converged)
        x0, x1 = float(vals[k]), float(vals[k + 1])
        p0, p1 = pts[k], pts[k + 1]
        if solve_at is not None:
            while x1 - x0 > refine_tol:
                xm = 0.5 * (x0 + x1)
                warm_from = p0 if _order_value(p0, order_param) > threshold else p1
                pm = solve_at(xm, warm_from)
                if not pm.converged:
                    low_conf = True
                    break
                if (_order_value(pm, order_param) > threshold) == below:
                    x0, p0 = xm, pm
                else:
                    x1, p1 = xm, pm
        loc = 0.5 * (x0 + x1)
        unc = max(0.5 * (x1 - x0), refine_tol if solve_at is not None else 0.0)

        kind = "continuous"
        if _slope_discontinuity(vals, energies, loc):
            kind = "first_order"
        if counterpart is not None and kind == "continuous":
            partner = detect_continuous(
                counterpart, order_param, solve_at=solve_at, refine_tol=refine_tol
            )
            match = [b for b in partner if abs(b.location - loc) <= 2.0 * max(unc, refine_tol)]
            if not match:
                kind = "first_order"
        boundaries.append(
            PhaseBoundary(
                swept=branch.swept,
                location=loc,
                uncertainty=unc,
                kind=kind,
                phases=(pts[k].classification, pts[k + 1].classification),
                evidence="order_onset",
                low_confidence=low_conf,
            )
        )
    return boundaries


def delta_e_at_mf_critical(
    J: float,
    eps: float,
    sizes: tuple[int, int] = (100, 101),
    floor: float = 1e-10,
    config: FixedPointConfig | None = None,
    dmrg: DmrgSettings | None = None,
    omega_c: float = 1.0,
) -> DeltaEResult:
    """Energy criterion at the product-ansatz critical coupling.

    Solves the self-consistency at g = g_crit from both natural initial
    states (-z-polarized and +x-polarized), takes the lower total
    energy and compares with the exact weak-coupling energy.  |delta_e|
    below ``floor`` is the continuous-transition verdict.
    """
    if J > 0:
        raise ValueError("the energy criterion applies to J <= 0")
    params = ModelParams(J=J, eps=eps, g=0.0, omega_c=omega_c)
    g_eval = g_crit_ferro(params)
    params = params.with_(g=g_eval)
    e_weak = weak_energy_ferro(params)
    cfg = config if config is not None else FixedPointConfig()

    energies = {}
    for pattern, init in (
        ("minus_z", SelfFields(0.0, 0.0)),
        ("plus_x", SelfFields(0.5, 0.0)),
    ):
        point = anderson_solve(
            params, init, cfg, FERRO, sizes, dmrg=dmrg, init_state=pattern
        )
        if not point.converged:
            raise RuntimeError(
                f"self-consistency from the {pattern} initial state did not "
                f"converge at eps={eps} (residual {point.residual:.2e})"
            )
        energies[pattern] = point.energy_per_site
    e_num = min(energies.values())
    delta = e_num - e_weak
    return DeltaEResult(
        eps=eps,
        g_eval=g_eval,
        e_numeric=e_num,
        e_weak=e_weak,
        delta_e=delta,
        below_floor=bool(abs(delta) < floor),
        e_numeric_minus_z=energies["minus_z"],
        e_numeric_plus_x=energies["plus_x"],
    )


def multicritical_bisect(
    J: float,
    eps_lo: float,
    eps_hi: float,
    floor: float = 1e-10,
    sizes: tuple[int, int] = (100, 101),
    xtol: float = 1e-3,
    config: FixedPointConfig | None = None,
    dmrg: DmrgSettings | None = None,
    history: list | None = None,
) -> tuple[float, float]:
    """Bisection on the below-floor predicate of the energy criterion.

    Requires |delta_e| above the floor at ``eps_lo`` and below it at
    ``eps_hi``; returns the bracket midpoint and half-width once the
    bracket is narrower than ``xtol``.  ``history`` collects every
    evaluated DeltaEResult when provided.
    """
    lo_res = delta_e_at_mf_critical(J, eps_lo, sizes, floor, config, dmrg)
    hi_res = delta_e_at_mf_critical(J, eps_hi, sizes, floor, config, dmrg)
    if history is not None:
        history.extend([lo_res, hi_res])
    if lo_res.below_floor or not hi_res.below_floor:
        raise ValueError(
            "invalid bracket: |delta_e| must exceed the floor at eps_lo and "
            f"fall below it at eps_hi (got {lo_res.delta_e:.3e} at {eps_lo}, "
            f"{hi_res.delta_e:.3e} at {eps_hi})"
        )
    lo, hi = eps_lo, eps_hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        mid_res = delta_e_at_mf_critical(J, mid, sizes, floor, config, dmrg)
        if history is not None:
            history.append(mid_res)
        if mid_res.below_floor:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), 0.5 * (hi - lo)
