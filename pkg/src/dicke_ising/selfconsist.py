"""Coupled self-consistency over (m_x, m_s) with Anderson acceleration.

One map evaluation builds the effective Hamiltonian at the current
fields, solves the two NLCE clusters with DMRG (warm-starting from the
previous wavefunctions when available) and telescopes the new fields.
In ferro mode m_s is pinned to zero and no boundary fields are applied;
in af mode both parameters iterate jointly as a single 2-vector fixed
point, which avoids nested-loop bias.

The total energy per site adds the photon shift (g^2/omega_c) m_x^2 to
the telescoped matter energy; its stationarity in m_x is equivalent to
the self-consistency condition, which is what the Hellmann-Feynman
residual probes.
"""

from __future__ import annotations

import atexit
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dmrg import ClusterSolution, DmrgSettings, dmrg_ground
from .model import ModelParams, SelfFields, phase_label
from .mpo import build_mpo, effective_field_value
from .mps import MPS, product_state
from .nlce import AF_MODE, FERRO_MODE, ClusterPair, bulk_energy, bulk_observable

__all__ = [
    "FixedPointConfig",
    "ConvergedPoint",
    "SweepBranch",
    "WarmStates",
    "CycleError",
    "effective_field",
    "photon_density",
    "fixed_point_map",
    "total_energy",
    "anderson_solve",
    "hellmann_feynman_residual",
    "landscape_scan",
    "LandscapeResult",
    "adiabatic_sweep",
    "pair_sizes",
]

FERRO = "ferro"
AF = "af"

_CLASSIFY_THRESHOLD = 1e-6
_SEED_ITERS = 3  # symmetry-breaking floor active for this many iterations


class CycleError(RuntimeError):
    """Period-2 oscillation of the fixed-point iteration."""


@dataclass(frozen=True)
class FixedPointConfig:
    """Anderson-accelerated fixed-point iteration settings.

    The relaxed default tolerance is 1e-10; high-resolution runs use
    1e-13 (see the ``tight`` profile in :mod:`dicke_ising.profiles`).
    """

    tol: float = 1e-10
    max_iters: int = 500
    anderson_window: int = 5
    damping: float = 1.0
    seed_floor: float = 1e-5

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.anderson_window < 1:
            raise ValueError("anderson_window must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")

    def with_(self, **kwargs) -> "FixedPointConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class WarmStates:
    small: MPS
    large: MPS


@dataclass(frozen=True)
class ConvergedPoint:
    """One self-consistent solution of the effective model."""

    params: ModelParams
    fields: SelfFields
    energy_per_site: float  # total: matter bulk + (g^2/omega_c) m_x^2
    photon_density: float
    iterations: int
    residual: float
    converged: bool
    warm_start_used: bool
    classification: str  # one of PN, PS, AN, AS
    pair: ClusterPair | None = field(default=None, repr=False, compare=False)

    @property
    def warm_states(self) -> WarmStates | None:
        if self.pair is None:
            return None
        return WarmStates(self.pair.small.final_state, self.pair.large.final_state)


@dataclass(frozen=True)
class SweepBranch:
    """Ordered converged points of one adiabatic sweep direction."""

    direction: str  # ascending | descending
    swept: str  # g | eps
    points: tuple[ConvergedPoint, ...]

    def values(self) -> np.ndarray:
        return np.array([getattr(p.params, self.swept) for p in self.points])


def effective_field(params: ModelParams, m_x: float) -> float:
    """Transverse field h_x = g^2 m_x / omega_c induced by the cavity."""
    return effective_field_value(params, m_x)


def photon_density(params: ModelParams, m_x: float) -> float:
    """Photons per site of the displaced coherent field, (g m_x / omega_c)^2."""
    return (params.g * m_x / params.omega_c) ** 2


def pair_sizes(mode: str, sizes: tuple[int, int]) -> tuple[int, int]:
    ns, nl = sizes
    if mode == FERRO:
        if nl - ns != 1:
            raise ValueError(f"ferro mode needs sizes (N, N+1), got {sizes}")
    elif mode == AF:
        if nl - ns != 2 or ns % 2 or nl % 2:
            raise ValueError(f"af mode needs even sizes (N, N+2), got {sizes}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ns, nl


def _nlce_mode(mode: str) -> str:
    return FERRO_MODE if mode == FERRO else AF_MODE


def _cold_start(n: int, fields: SelfFields, mode: str, init_state: str | None) -> MPS:
    if init_state is not None:
        return product_state(n, init_state)
    if mode == AF and abs(fields.m_s) > abs(fields.m_x):
        return product_state(n, "neel_even_up")
    if abs(fields.m_x) > 1e-3:
        return product_state(n, "plus_x")
    return product_state(n, "minus_z")


# The two cluster solves of a pair are independent; an optional process
# pool runs them concurrently.  Results are identical either way.
_POOL: ProcessPoolExecutor | None = None
_WORKERS = 1


def set_workers(n: int) -> None:
    """Cap the worker count for concurrent cluster solves (1 = serial)."""
    global _POOL, _WORKERS
    n = max(1, int(n))
    if n == _WORKERS:
        return
    if _POOL is not None:
        _POOL.shutdown(wait=False, cancel_futures=True)
        _POOL = None
    _WORKERS = n


def _get_pool() -> ProcessPoolExecutor | None:
    global _POOL
    if _WORKERS < 2:
        return None
    if _POOL is None:
        _POOL = ProcessPoolExecutor(max_workers=2)
        atexit.register(lambda: _POOL.shutdown(wait=False) if _POOL else None)
    return _POOL


def _solve_cluster(params, eff_fields, n, with_boundary, settings, warm_state, mode, init_state):
    mpo = build_mpo(params, eff_fields, n, with_af_boundary=with_boundary)
    if warm_state is not None and warm_state.n_sites == n:
        init = warm_state
        local = settings.with_(noise=0.0)  # continuation, no kick needed
    else:
        init = _cold_start(n, eff_fields, mode, init_state)
        local = settings
    sol = dmrg_ground(mpo, init, local)
    if not sol.converged:
        raise RuntimeError(
            f"DMRG did not converge on the {n}-site cluster "
            f"(params={params}, fields={eff_fields})"
        )
    return sol


def solve_pair(
    params: ModelParams,
    fields: SelfFields,
    mode: str,
    sizes: tuple[int, int],
    dmrg: DmrgSettings | None = None,
    warm: WarmStates | None = None,
    init_state: str | None = None,
) -> ClusterPair:
    """Solve the two NLCE clusters at fixed fields."""
    ns, nl = pair_sizes(mode, sizes)
    settings = dmrg if dmrg is not None else DmrgSettings()
    with_boundary = mode == AF
    eff_fields = fields if mode == AF else fields.with_(m_s=0.0)
    tasks = [
        (params, eff_fields, ns, with_boundary, settings,
         None if warm is None else warm.small, mode, init_state),
        (params, eff_fields, nl, with_boundary, settings,
         None if warm is None else warm.large, mode, init_state),
    ]
    pool = _get_pool()
    if pool is not None:
        futures = [pool.submit(_solve_cluster, *t) for t in tasks]
        solutions = [f.result() for f in futures]
    else:
        solutions = [_solve_cluster(*t) for t in tasks]
    return ClusterPair(solutions[0], solutions[1], _nlce_mode(mode))


def fixed_point_map(
    params: ModelParams,
    fields: SelfFields,
    mode: str,
    sizes: tuple[int, int],
    dmrg: DmrgSettings | None = None,
    warm_state: WarmStates | None = None,
    init_state: str | None = None,
) -> SelfFields:
    """One evaluation of the self-consistency map (m_x, m_s) -> (m_x', m_s')."""
    pair = solve_pair(params, fields, mode, sizes, dmrg, warm_state, init_state)
    return _map_output(pair, mode)


def _map_output(pair: ClusterPair, mode: str) -> SelfFields:
    m_x = bulk_observable(pair, "sum_sx")
    m_s = bulk_observable(pair, "staggered_sum_sz") if mode == AF else 0.0
    clip = lambda v: float(np.clip(v, -0.5, 0.5))
    return SelfFields(m_x=clip(m_x), m_s=clip(m_s))


def total_energy(
    params: ModelParams,
    fields: SelfFields,
    mode: str,
    sizes: tuple[int, int],
    dmrg: DmrgSettings | None = None,
    warm: WarmStates | None = None,
    init_state: str | None = None,
) -> float:
    """Total energy per site at fixed fields: matter bulk + photon shift."""
    pair = solve_pair(params, fields, mode, sizes, dmrg, warm, init_state)
    return bulk_energy(pair) + params.g**2 * fields.m_x**2 / params.omega_c


def _floor_fields(x: np.ndarray, mode: str, floor: float) -> np.ndarray:
    out = x.copy()
    sign = 1.0 if x[0] >= 0 else -1.0
    out[0] = sign * max(abs(x[0]), floor)
    if mode == AF:
        sign = 1.0 if x[1] >= 0 else -1.0
        out[1] = sign * max(abs(x[1]), floor)
    return out


def _to_fields(x: np.ndarray, mode: str) -> SelfFields:
    return SelfFields(m_x=float(x[0]), m_s=float(x[1]) if mode == AF else 0.0)


def anderson_solve(
    params: ModelParams,
    init: SelfFields,
    config: FixedPointConfig,
    mode: str,
    sizes: tuple[int, int],
    dmrg: DmrgSettings | None = None,
    warm: WarmStates | None = None,
    init_state: str | None = None,
) -> ConvergedPoint:
    """Anderson-accelerated solution of the coupled self-consistency.

    The magnitude of m_x (and of m_s in af mode) is floored at
    ``seed_floor`` for the first three iterations so symmetry-broken
    solutions are reachable from symmetric warm starts, then left free
    so the normal phase can decay to zero.  A final |m_x| below 10*tol
    is snapped to exactly 0.  Residuals are max-norm of (output-input).
    """
    dim = 2 if mode == AF else 1
    x = np.array([init.m_x] if dim == 1 else [init.m_x, init.m_s])
    x = np.clip(x, -0.5, 0.5)

    warm_used = warm is not None
    current_warm = warm
    pair = None
    damping = config.damping
    hist_x: list[np.ndarray] = []
    hist_r: list[np.ndarray] = []
    prev_r: np.ndarray | None = None
    # Geometric escape is armed only for components seeded at floor
    # scale; warm starts near a solution must never be catapulted.
    amplify_latch = np.abs(x) < 10.0 * config.seed_floor
    best_res = np.inf
    cycle_count = 0
    iterations = 0
    converged = False
    x_final = x
    recent: list[np.ndarray] = []

    for it in range(config.max_iters):
        iterations = it + 1
        x_in = _floor_fields(x, mode, config.seed_floor) if it < _SEED_ITERS else x
        pair = solve_pair(
            params, _to_fields(x_in, mode), mode, sizes, dmrg, current_warm, init_state
        )
        current_warm = WarmStates(pair.small.final_state, pair.large.final_state)
        out = _map_output(pair, mode)
        g_vec = np.array([out.m_x, out.m_s][:dim])
        r = g_vec - x_in
        res = float(np.max(np.abs(r)))
        best_res = min(best_res, res)

        if res <= config.tol:
            converged = True
            x_final = g_vec
            break

        # Period-2 oscillation watchdog.
        recent.append(x_in.copy())
        if len(recent) > 3:
            recent.pop(0)
        if len(recent) == 3 and (
            np.max(np.abs(recent[-1] - recent[-3])) < config.tol
            and np.max(np.abs(recent[-1] - recent[-2])) >= config.tol
        ):
            cycle_count += 1
            if cycle_count >= 20:
                raise CycleError(
                    "fixed-point iteration entered a period-2 cycle; "
                    "reduce the damping factor"
                )
        else:
            cycle_count = 0

        # Extrapolation is a root finder: it would converge onto the
        # symmetric solution even where the map repels it, defeating the
        # seed.  While any residual component still grows (escape from a
        # repelling symmetric point) the update follows the map itself,
        # geometrically amplified for components that were seeded at
        # floor scale, and the extrapolation history stays empty.
        # Anderson takes over once the iteration contracts.  Damping is
        # halved on direction-reversing residual growth (overshoot),
        # never during the monotone escape.
        if prev_r is not None:
            shrunk = (np.abs(r) <= np.abs(prev_r) + 1e-15) | (np.abs(r) <= 0.1 * config.tol)
            amplify_latch &= ~shrunk
            contracted_all = bool(np.all(shrunk))
            if not contracted_all and float(r @ prev_r) < 0.0:
                damping = damping / 2.0
                if damping < config.damping / 1024.0:
                    raise CycleError(
                        "fixed-point iteration keeps reversing direction while "
                        "growing (oscillatory divergence); reduce the damping factor"
                    )
        else:
            contracted_all = False
        prev_r = r

        expanding = amplify_latch & (np.abs(g_vec) > np.abs(x_in)) & (np.abs(x_in) < 0.1)
        if not contracted_all or bool(np.any(expanding)):
            hist_x.clear()
            hist_r.clear()
            x_new = np.where(expanding, 4.0 * g_vec, g_vec)
        else:
            hist_x.append(x_in.copy())
            hist_r.append(r.copy())
            if len(hist_x) > config.anderson_window + 1:
                hist_x.pop(0)
                hist_r.pop(0)
            if len(hist_x) >= 2:
                dX = np.stack(
                    [hist_x[k + 1] - hist_x[k] for k in range(len(hist_x) - 1)], axis=1
                )
                dR = np.stack(
                    [hist_r[k + 1] - hist_r[k] for k in range(len(hist_r) - 1)], axis=1
                )
                gamma, *_ = np.linalg.lstsq(dR, r, rcond=None)
                x_new = x_in + damping * r - (dX + damping * dR) @ gamma
            else:
                x_new = x_in + damping * r
        x = np.clip(x_new, -0.5, 0.5)
        x_final = g_vec

    m_x = float(x_final[0])
    m_s = float(x_final[1]) if dim == 2 else 0.0
    if abs(m_x) < 10.0 * config.tol:
        m_x = 0.0
    fields_final = SelfFields(m_x=m_x, m_s=m_s)
    energy = bulk_energy(pair) + params.g**2 * m_x**2 / params.omega_c
    return ConvergedPoint(
        params=params,
        fields=fields_final,
        energy_per_site=float(energy),
        photon_density=photon_density(params, m_x),
        iterations=iterations,
        residual=float(best_res if not converged else res),
        converged=converged,
        warm_start_used=warm_used,
        classification=phase_label(m_x, m_s, _CLASSIFY_THRESHOLD),
        pair=pair,
    )


def hellmann_feynman_residual(
    params: ModelParams,
    m_x_star: float,
    mode: str,
    sizes: tuple[int, int],
    h: float = 1e-4,
    m_s: float = 0.0,
    dmrg: DmrgSettings | None = None,
    warm: WarmStates | None = None,
) -> float:
    """|dE/dm_x| at a converged point from a central difference.

    Vanishing derivative of the total energy functional is equivalent to
    the self-consistency condition, so small values certify a genuine
    stationary point.
    """
    e_plus = total_energy(
        params, SelfFields(m_x=min(m_x_star + h, 0.5), m_s=m_s), mode, sizes, dmrg, warm
    )
    e_minus = total_energy(
        params, SelfFields(m_x=max(m_x_star - h, -0.5), m_s=m_s), mode, sizes, dmrg, warm
    )
    return float(abs((e_plus - e_minus) / (2.0 * h)))


@dataclass(frozen=True)
class LandscapeResult:
    m_x: np.ndarray
    energy: np.ndarray
    is_local_min: np.ndarray
    global_min_index: int


def _converge_ms_at_fixed_mx(
    params, m_x, m_s0, sizes, config, dmrg, warm
) -> tuple[float, ClusterPair, WarmStates]:
    """Inner 1-vector fixed point over m_s only (m_x held fixed)."""
    m_s = m_s0
    current = warm
    pair = None
    hist = []
    for it in range(config.max_iters):
        m_s_in = m_s
        if it < _SEED_ITERS:
            sign = 1.0 if m_s_in >= 0 else -1.0
            m_s_in = sign * max(abs(m_s_in), config.seed_floor)
        pair = solve_pair(
            params, SelfFields(m_x=m_x, m_s=m_s_in), AF, sizes, dmrg, current
        )
        current = WarmStates(pair.small.final_state, pair.large.final_state)
        out = bulk_observable(pair, "staggered_sum_sz")
        r = out - m_s_in
        if abs(r) <= config.tol:
            return out, pair, current
        hist.append((m_s_in, r))
        if len(hist) >= 2:  # secant step
            (x0, r0), (x1, r1) = hist[-2], hist[-1]
            denom = r1 - r0
            m_s = x1 - r1 * (x1 - x0) / denom if abs(denom) > 1e-300 else out
        else:
            m_s = out
        m_s = float(np.clip(m_s, -0.5, 0.5))
    raise RuntimeError(f"inner m_s loop did not converge at m_x={m_x}")


def landscape_scan(
    params: ModelParams,
    m_x_grid,
    mode: str,
    sizes: tuple[int, int],
    m_s_policy: str = "pinned_zero",
    config: FixedPointConfig | None = None,
    dmrg: DmrgSettings | None = None,
) -> LandscapeResult:
    """Energy landscape E(m_x), optionally with m_s converged at each point."""
    grid = np.asarray(m_x_grid, dtype=float)
    if grid.size == 0 or np.max(np.abs(grid)) > 0.5 + 1e-12:
        raise ValueError("m_x grid must be non-empty and lie within [-1/2, 1/2]")
    if m_s_policy not in ("pinned_zero", "inner_converged"):
        raise ValueError(f"unknown m_s policy {m_s_policy!r}")
    if m_s_policy == "inner_converged" and mode != AF:
        raise ValueError("inner_converged requires af mode")
    cfg = config if config is not None else FixedPointConfig()

    energies = np.empty(grid.size)
    warm = None
    m_s = 0.5 if m_s_policy == "inner_converged" else 0.0
    for k, m_x in enumerate(grid):
        if m_s_policy == "inner_converged":
            m_s, pair, warm = _converge_ms_at_fixed_mx(
                params, float(m_x), m_s, sizes, cfg, dmrg, warm
            )
        else:
            pair = solve_pair(
                params, SelfFields(m_x=float(m_x), m_s=0.0), mode, sizes, dmrg, warm
            )
            warm = WarmStates(pair.small.final_state, pair.large.final_state)
        energies[k] = bulk_energy(pair) + params.g**2 * m_x**2 / params.omega_c

    n = grid.size
    local = np.zeros(n, dtype=bool)
    for i in range(n):
        left_ok = i == 0 or energies[i] < energies[i - 1]
        right_ok = i == n - 1 or energies[i] < energies[i + 1]
        local[i] = left_ok and right_ok
    return LandscapeResult(grid, energies, local, int(np.argmin(energies)))


def adiabatic_sweep(
    params_template: ModelParams,
    sweep_var: str,
    values,
    mode: str,
    sizes: tuple[int, int],
    config: FixedPointConfig | None = None,
    dmrg: DmrgSettings | None = None,
    init_fields: SelfFields | None = None,
    init_state: str | None = None,
) -> SweepBranch:
    """Adiabatic continuation along strictly monotone parameter values.

    Each point warm-starts from the previous converged fields and
    wavefunctions.  Failed points are recorded unconverged and the sweep
    continues from the last good warm start; three consecutive failures
    abort the branch.
    """
    if sweep_var not in ("g", "eps"):
        raise ValueError(f"sweep variable must be 'g' or 'eps', got {sweep_var!r}")
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ValueError("sweep needs at least one value")
    diffs = np.diff(vals)
    if vals.size > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("sweep values must be strictly monotone")
    ascending = vals.size == 1 or diffs[0] > 0
    cfg = config if config is not None else FixedPointConfig()

    if init_fields is None:
        if ascending:
            init_fields = SelfFields(m_x=0.0, m_s=0.5 if mode == AF else 0.0)
        else:
            init_fields = SelfFields(m_x=0.5, m_s=0.0)

    points: list[ConvergedPoint] = []
    fields = init_fields
    warm = None
    failures = 0
    for v in vals:
        params = params_template.with_(**{sweep_var: float(v)})
        try:
            point = anderson_solve(
                params, fields, cfg, mode, sizes, dmrg, warm, init_state
            )
        except (CycleError, RuntimeError) as exc:
            point = ConvergedPoint(
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
            points.append(point)
            failures += 1
            if failures >= 3:
                break
            continue
        points.append(point)
        if point.converged:
            failures = 0
            fields = point.fields
            warm = point.warm_states
        else:
            failures += 1
            if failures >= 3:
                break
    return SweepBranch(
        direction="ascending" if ascending else "descending",
        swept=sweep_var,
        points=tuple(points),
    )
