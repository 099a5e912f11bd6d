"""Adaptive sweep driver and boundary aggregation.

A branch is walked at a coarse step; whenever the classification flips
between neighbouring points the interval is re-walked at the fine step,
warm-starting from the interval's entry point so the metastable branch
is followed exactly as in a uniform fine sweep.  Detection then combines
hysteresis crossings with order-parameter onsets: onsets that fall
inside a hysteresis window are spinodal artifacts of one branch and are
dropped in favour of the crossing.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .dmrg import DmrgSettings
from .model import ModelParams, SelfFields
from .phase_analysis import PhaseBoundary, detect_continuous, detect_first_order
from .selfconsist import (
    ConvergedPoint,
    FixedPointConfig,
    SweepBranch,
    anderson_solve,
    photon_density,
)
from .model import phase_label

__all__ = ["adaptive_branch", "make_refiner", "aggregate_boundaries", "grid_values"]


def grid_values(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive ascending grid; the endpoint is kept within half a step."""
    if step <= 0:
        raise ValueError("step must be positive")
    if start == stop:
        raise ValueError("start and stop must differ")
    lo, hi = min(start, stop), max(start, stop)
    n = int(round((hi - lo) / step))
    vals = lo + step * np.arange(n + 1)
    if vals[-1] < hi - 0.5 * step:
        vals = np.append(vals, hi)
    vals[-1] = min(vals[-1], hi)
    return vals


def _solve_point(params, fields, cfg, mode, sizes, dmrg, warm, init_state):
    try:
        return anderson_solve(
            params, fields, cfg, mode, sizes, dmrg, warm, init_state
        )
    except RuntimeError:
        return ConvergedPoint(
            params=params,
            fields=fields,
            energy_per_site=float("nan"),
            photon_density=photon_density(params, fields.m_x),
            iterations=0,
            residual=float("inf"),
            converged=False,
            warm_start_used=warm is not None,
            classification=phase_label(fields.m_x, fields.m_s),
            pair=None,
        )


def adaptive_branch(
    params_template: ModelParams,
    sweep_var: str,
    start: float,
    stop: float,
    step: float,
    direction: str,
    mode: str,
    sizes: tuple[int, int],
    config: FixedPointConfig | None = None,
    dmrg: DmrgSettings | None = None,
    fine_step: float | None = None,
    init_fields: SelfFields | None = None,
    progress: Callable[[str], None] | None = None,
) -> SweepBranch:
    """One sweep direction with local refinement at classification changes."""
    if direction not in ("ascending", "descending"):
        raise ValueError(f"direction must be ascending or descending, got {direction!r}")
    cfg = config if config is not None else FixedPointConfig()
    coarse = grid_values(start, stop, step)
    if direction == "descending":
        coarse = coarse[::-1]
    if fine_step is None:
        fine_step = step / 10.0

    if init_fields is None:
        if direction == "ascending":
            init_fields = SelfFields(m_x=0.0, m_s=0.5 if mode == "af" else 0.0)
        else:
            init_fields = SelfFields(m_x=0.5, m_s=0.0)

    points: list[ConvergedPoint] = []
    fields = init_fields
    warm = None
    failures = 0

    def advance(value, current_fields, current_warm):
        params = params_template.with_(**{sweep_var: float(value)})
        return _solve_point(params, current_fields, cfg, mode, sizes, dmrg, current_warm, None)

    for v in coarse:
        pt = advance(v, fields, warm)
        if progress is not None:
            progress(
                f"{sweep_var}={v:.6g} -> {pt.classification}"
                f" (m_x={pt.fields.m_x:.4g}, m_s={pt.fields.m_s:.4g})"
            )
        if (
            points
            and pt.converged
            and points[-1].converged
            and pt.classification != points[-1].classification
            and fine_step < step
        ):
            # Classification flipped inside the last coarse interval:
            # re-walk it finely from the interval's entry point.
            prev = points[-1]
            x0 = getattr(prev.params, sweep_var)
            sign = 1.0 if direction == "ascending" else -1.0
            fine_vals = x0 + sign * fine_step * np.arange(
                1, int(round(abs(v - x0) / fine_step))
            )
            f_fields, f_warm = prev.fields, prev.warm_states
            for fv in fine_vals:
                fpt = advance(fv, f_fields, f_warm)
                points.append(fpt)
                if fpt.converged:
                    f_fields, f_warm = fpt.fields, fpt.warm_states
            pt = advance(v, f_fields, f_warm)
        points.append(pt)
        if pt.converged:
            fields, warm = pt.fields, pt.warm_states
            failures = 0
        else:
            failures += 1
            if failures >= 3:
                break
    return SweepBranch(direction=direction, swept=sweep_var, points=tuple(points))


def make_refiner(
    params_template: ModelParams,
    sweep_var: str,
    mode: str,
    sizes: tuple[int, int],
    config: FixedPointConfig | None = None,
    dmrg: DmrgSettings | None = None,
):
    """Fresh-solve callback for bisection refinement of onsets."""
    cfg = config if config is not None else FixedPointConfig()

    def solve_at(value: float, warm_from: ConvergedPoint) -> ConvergedPoint:
        params = params_template.with_(**{sweep_var: float(value)})
        return _solve_point(
            params, warm_from.fields, cfg, mode, sizes, dmrg, warm_from.warm_states, None
        )

    return solve_at


def aggregate_boundaries(
    up: SweepBranch | None,
    down: SweepBranch | None,
    solve_at=None,
    refine_tol: float = 5e-4,
    merge_radius: float = 2e-3,
) -> list[PhaseBoundary]:
    """Combine hysteresis crossings with refined order-parameter onsets."""
    boundaries: list[PhaseBoundary] = []
    first = None
    if up is not None and down is not None:
        first = detect_first_order(up, down)
        if first is not None:
            boundaries.append(first)

    onsets: list[PhaseBoundary] = []
    for branch, partner in ((up, down), (down, up)):
        if branch is None:
            continue
        for op in ("m_x", "m_s"):
            onsets.extend(
                detect_continuous(
                    branch, op, solve_at=solve_at, counterpart=partner, refine_tol=refine_tol
                )
            )

    # Onsets inside the hysteresis region duplicate the crossing
    # (spinodal jumps); elsewhere collapse duplicates from the two
    # branches and the two order parameters.
    kept: list[PhaseBoundary] = []
    for b in sorted(onsets, key=lambda b: (b.location, b.uncertainty)):
        if first is not None and abs(b.location - first.location) <= max(
            merge_radius, first.uncertainty + b.uncertainty
        ):
            continue
        if any(
            abs(b.location - k.location) <= max(merge_radius, b.uncertainty + k.uncertainty)
            for k in kept
        ):
            continue
        kept.append(b)
    boundaries.extend(kept)
    return sorted(boundaries, key=lambda b: b.location)
