"""Optimal power allocation: closed-form max-min fairness for the multicast
groups, water-filling for the weighted-sum unicast spectral efficiency, the
Pareto-boundary sweep that couples them through the shared power budget, a
convexity check of the swept boundary, and a brute-force grid oracle used to
validate the closed forms on tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .closed_form import (
    estimation_variance_multicast,
    estimation_variance_unicast,
)
from .scenario import LargeScaleProfile, SystemConfig

LN2 = math.log(2.0)

# bisection controls for the water-filling level
_WF_MAX_ITER = 200
_WF_RTOL = 1e-12


class WaterFillingError(RuntimeError):
    """Bisection for the water level failed to converge."""


class OracleInstanceTooLarge(ValueError):
    """Brute-force oracle refused an instance that would not finish quickly."""


@dataclass
class MmfSolution:
    """Closed-form max-min-fairness solution for a fixed unicast power."""

    objective: float
    common_sinr: float
    q_dl: list
    q_up: list
    tau: int
    upsilon: list
    x_star: list


@dataclass
class WsseSolution:
    """Water-filling solution of the weighted-sum unicast SE problem."""

    objective: float
    p_dl: list
    p_up: list
    tau: int
    water_level_nu: float | None
    vartheta_star: list


@dataclass
class ParetoPoint:
    """One boundary point: a power split with both optimal objective values."""

    p_un: float
    p_mu: float
    o_mu: float
    o_un: float
    mmf: MmfSolution
    wsse: WsseSolution


@dataclass
class ConvexityReport:
    is_consistent: bool
    max_violation: float
    slope_violation: float
    dominance_violation: float


def solve_mmf(
    config: SystemConfig, profile: LargeScaleProfile, p_un: float
) -> MmfSolution:
    """Maximize the minimum multicast SE for a fixed unicast power ``p_un``.

    The optimum puts tau = U + G, pilots at the per-group equalizing energies,
    and downlink powers that make every multicast user's SINR equal to the
    common value Gamma = N*P_mu / (P*sum(K_j) + sum(1/Upsilon_j)
    + sum_jk 1/eta_jk) with P_mu = P - p_un.
    """
    P = config.total_dl_power
    if not 0.0 <= p_un <= P:
        raise ValueError("p_un must lie in [0, total_dl_power]")
    tau = config.n_pilots
    p_mu = P - p_un

    eta = [np.asarray(g, dtype=float) for g in profile.eta]
    budgets = [np.asarray(g, dtype=float) for g in config.multicast_energy_budgets]

    upsilon = [float(np.min(e_g * eta_g**2 / (1.0 + eta_g * P)))
               for eta_g, e_g in zip(eta, budgets)]
    x_star = [
        (1.0 + eta_g * P) / eta_g**2 * ups
        for eta_g, ups in zip(eta, upsilon)
    ]
    q_up = [x / tau for x in x_star]

    denom = (
        P * sum(config.group_sizes)
        + sum(1.0 / u for u in upsilon)
        + sum(float(np.sum(1.0 / e_g)) for e_g in eta)
    )
    common_sinr = config.n_antennas * p_mu / denom

    q_dl = [
        common_sinr / (config.n_antennas * ups) * (1.0 + float(np.sum(x * e_g)))
        for ups, x, e_g in zip(upsilon, x_star, eta)
    ]

    objective = config.prelog(tau) * math.log2(1.0 + common_sinr)
    return MmfSolution(
        objective=objective,
        common_sinr=common_sinr,
        q_dl=q_dl,
        q_up=[list(q) for q in q_up],
        tau=tau,
        upsilon=upsilon,
        x_star=[list(x) for x in x_star],
    )


def _waterfill_powers(nu: float, alpha: np.ndarray, floors: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, alpha / (nu * LN2) - floors)


def _solve_water_level(
    alpha: np.ndarray, floors: np.ndarray, target: float
) -> tuple[float, np.ndarray]:
    """Find nu with sum(max(0, alpha/(nu ln2) - floors)) == target, target > 0."""
    # bracket: at nu_lo the best user alone already reaches the target power,
    # at nu_hi every user is inactive
    nu_lo = float(np.max(alpha / (LN2 * (target + floors))))
    nu_hi = float(np.max(alpha / (LN2 * floors)))
    for _ in range(64):
        if np.sum(_waterfill_powers(nu_lo, alpha, floors)) >= target:
            break
        nu_lo /= 2.0
    lo, hi = nu_lo, nu_hi
    nu = lo
    for _ in range(_WF_MAX_ITER):
        nu = 0.5 * (lo + hi)
        total = float(np.sum(_waterfill_powers(nu, alpha, floors)))
        if abs(total - target) <= _WF_RTOL * target:
            break
        if total > target:
            lo = nu
        else:
            hi = nu

    # pin the active set from the bisected level, then solve that set exactly
    # so the power constraint holds to machine precision
    active = _waterfill_powers(nu, alpha, floors) > 0.0
    if not np.any(active):
        active = alpha / (LN2 * floors) >= nu
    for _ in range(alpha.size + 1):
        nu_exact = float(np.sum(alpha[active])) / (
            LN2 * (target + float(np.sum(floors[active])))
        )
        p = _waterfill_powers(nu_exact, alpha, floors)
        new_active = p > 0.0
        if np.array_equal(new_active, active):
            nu = nu_exact
            break
        active = new_active
    else:
        raise WaterFillingError("active-set refinement did not stabilize")

    p = _waterfill_powers(nu, alpha, floors)
    total = float(np.sum(p))
    if abs(total - target) > 1e-10 * target:
        raise WaterFillingError(
            f"water level search left a power mismatch of {total - target!r}"
        )
    return nu, p


def solve_wsse(
    config: SystemConfig, profile: LargeScaleProfile, p_mu: float
) -> WsseSolution:
    """Maximize the weighted sum of unicast SEs for a fixed multicast power.

    tau = U + G, every user spends its full pilot energy budget, and the
    downlink powers water-fill against per-user floors (1 + beta*P)/(N*theta).
    """
    P = config.total_dl_power
    if not 0.0 <= p_mu <= P:
        raise ValueError("p_mu must lie in [0, total_dl_power]")
    tau = config.n_pilots
    target = P - p_mu

    energy = np.asarray(config.unicast_energy_budgets, dtype=float)
    beta = np.asarray(profile.beta, dtype=float)
    alpha = np.asarray(config.unicast_weights, dtype=float)
    p_up = energy / tau
    vartheta = energy * beta**2 / (1.0 + energy * beta)

    if target == 0.0:
        return WsseSolution(
            objective=0.0,
            p_dl=[0.0] * config.n_unicast,
            p_up=list(p_up),
            tau=tau,
            water_level_nu=None,
            vartheta_star=list(vartheta),
        )

    floors = (1.0 + beta * P) / (config.n_antennas * vartheta)
    nu, p_dl = _solve_water_level(alpha, floors, target)

    sinr = config.n_antennas * p_dl * vartheta / (1.0 + beta * P)
    objective = config.prelog(tau) * float(np.sum(alpha * np.log2(1.0 + sinr)))
    return WsseSolution(
        objective=objective,
        p_dl=list(p_dl),
        p_up=list(p_up),
        tau=tau,
        water_level_nu=nu,
        vartheta_star=list(vartheta),
    )


def pareto_sweep(
    config: SystemConfig, profile: LargeScaleProfile, n_points: int = 21
) -> list[ParetoPoint]:
    """Sweep the boundary P_un + P_mu = P over a uniform grid of power splits."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    P = config.total_dl_power
    points = []
    for frac in np.linspace(0.0, 1.0, n_points):
        p_un = float(frac) * P
        p_mu = P - p_un
        mmf = solve_mmf(config, profile, p_un)
        wsse = solve_wsse(config, profile, p_mu)
        points.append(
            ParetoPoint(
                p_un=p_un,
                p_mu=p_mu,
                o_mu=mmf.objective,
                o_un=wsse.objective,
                mmf=mmf,
                wsse=wsse,
            )
        )
    return points


def check_convexity(
    points: list[ParetoPoint], tol: float = 1e-9
) -> ConvexityReport:
    """Verify the swept boundary bounds a convex attainable region.

    Checks concavity of o_un as a function of o_mu (consecutive slopes must be
    non-increasing) and that midpoints of all boundary-point pairs are weakly
    dominated by the piecewise-linear boundary itself.
    """
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    p_un = [pt.p_un for pt in points]
    if any(b <= a for a, b in zip(p_un, p_un[1:])):
        raise ValueError("points must be sorted by strictly increasing p_un")

    o_mu = np.array([pt.o_mu for pt in points])
    o_un = np.array([pt.o_un for pt in points])
    order = np.argsort(o_mu)
    x, y = o_mu[order], o_un[order]

    dx = np.diff(x)
    if np.any(dx <= 0):
        raise ValueError("boundary o_mu values must be distinct")
    slopes = np.diff(y) / dx
    slope_violation = float(max(0.0, np.max(np.diff(slopes), initial=0.0)))

    dominance_violation = 0.0
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            mid_x = 0.5 * (x[i] + x[j])
            mid_y = 0.5 * (y[i] + y[j])
            boundary_y = float(np.interp(mid_x, x, y))
            dominance_violation = max(dominance_violation, mid_y - boundary_y)

    max_violation = float(max(slope_violation, dominance_violation))
    return ConvexityReport(
        is_consistent=bool(max_violation <= tol),
        max_violation=max_violation,
        slope_violation=float(slope_violation),
        dominance_violation=float(dominance_violation),
    )


@dataclass
class OracleResult:
    objective: float
    tau: int
    dl_powers: list
    up_powers: list


def _simplex_grid(n_vars: int, steps: int) -> np.ndarray:
    """All fractions (t_1..t_n) on a grid with sum t_i = 1, step 1/steps."""
    if n_vars == 1:
        return np.ones((1, 1))
    if n_vars == 2:
        t = np.linspace(0.0, 1.0, steps + 1)
        return np.column_stack([t, 1.0 - t])
    rows = []
    for i in range(steps + 1):
        for j in range(steps + 1 - i):
            rows.append((i / steps, j / steps, (steps - i - j) / steps))
    return np.asarray(rows)


def brute_force_oracle(
    config: SystemConfig,
    profile: LargeScaleProfile,
    objective: str,
    grid_steps: int,
    *,
    p_un: float = 0.0,
    p_mu: float = 0.0,
    pilot_fractions=(0.25, 0.5, 0.75, 1.0),
    tau_span: int = 4,
) -> OracleResult:
    """Exhaustive grid search over the feasible set; test-only validation tool.

    ``objective`` is "mmf" (min multicast SE, unicast power fixed at ``p_un``)
    or "wsse" (weighted-sum unicast SE, multicast power fixed at ``p_mu``).
    Downlink powers are searched on the simplex where the power constraint
    binds (uniformly scaling all downlink powers up improves every SINR, so
    the optimum always exhausts the budget); pilot powers on a fractional grid
    of each energy box; tau over {U+G, ..., U+G+tau_span} capped at T.
    """
    if objective not in ("mmf", "wsse"):
        raise ValueError("objective must be 'mmf' or 'wsse'")
    if config.n_unicast > 3 or config.n_groups > 2 or max(config.group_sizes) > 2:
        raise OracleInstanceTooLarge("oracle instances must have U<=3, G<=2, K_g<=2")
    if not 1 <= grid_steps <= 1000:
        raise OracleInstanceTooLarge("grid_steps must be in [1, 1000]")

    P = config.total_dl_power
    taus = range(config.n_pilots, min(config.coherence_symbols,
                                      config.n_pilots + tau_span) + 1)

    if objective == "mmf":
        return _oracle_mmf(config, profile, grid_steps, P - p_un, taus,
                           pilot_fractions)
    return _oracle_wsse(config, profile, grid_steps, P - p_mu, taus,
                        pilot_fractions)


def _oracle_mmf(config, profile, grid_steps, p_mu, taus, pilot_fractions):
    P = config.total_dl_power
    eta = [np.asarray(g, dtype=float) for g in profile.eta]
    budgets = [np.asarray(g, dtype=float) for g in config.multicast_energy_budgets]
    n_users = [len(g) for g in eta]
    splits = _simplex_grid(config.n_groups, grid_steps)  # (n_pts, G)

    best = OracleResult(-math.inf, 0, [], [])
    for tau in taus:
        prelog = config.prelog(tau)
        # one fraction per multicast user, all combinations
        for fracs in itertools.product(pilot_fractions, repeat=sum(n_users)):
            it = iter(fracs)
            q_up = [np.array([next(it) for _ in range(k)]) * bud / tau
                    for k, bud in zip(n_users, budgets)]
            # min over each group's users of xi / (1 + eta * P): the group's
            # worst per-power SINR coefficient
            coeffs = []
            for q_g, eta_g in zip(q_up, eta):
                xi, _ = estimation_variance_multicast(tau, q_g, eta_g)
                coeffs.append(np.min(xi / (1.0 + eta_g * P)))
            coeffs = np.asarray(coeffs)
            # min SINR over groups for every downlink split at once
            min_sinr = np.min(
                config.n_antennas * splits * p_mu * coeffs, axis=1
            )
            idx = int(np.argmax(min_sinr))
            obj = prelog * math.log2(1.0 + float(min_sinr[idx]))
            if obj > best.objective:
                best = OracleResult(
                    objective=obj,
                    tau=tau,
                    dl_powers=list(splits[idx] * p_mu),
                    up_powers=[list(q) for q in q_up],
                )
    return best


def _oracle_wsse(config, profile, grid_steps, p_un, taus, pilot_fractions):
    P = config.total_dl_power
    beta = np.asarray(profile.beta, dtype=float)
    alpha = np.asarray(config.unicast_weights, dtype=float)
    energy = np.asarray(config.unicast_energy_budgets, dtype=float)
    splits = _simplex_grid(config.n_unicast, grid_steps)  # (n_pts, U)

    best = OracleResult(-math.inf, 0, [], [])
    for tau in taus:
        prelog = config.prelog(tau)
        for fracs in itertools.product(pilot_fractions, repeat=config.n_unicast):
            p_up = np.asarray(fracs) * energy / tau
            vartheta = estimation_variance_unicast(tau, p_up, beta)
            gain = config.n_antennas * vartheta / (1.0 + beta * P)
            obj_all = prelog * np.sum(
                alpha * np.log2(1.0 + splits * p_un * gain), axis=1
            )
            idx = int(np.argmax(obj_all))
            if obj_all[idx] > best.objective:
                best = OracleResult(
                    objective=float(obj_all[idx]),
                    tau=tau,
                    dl_powers=list(splits[idx] * p_un),
                    up_powers=list(p_up),
                )
    return best
