"""Closed-form estimation statistics and SINR / spectral-efficiency expressions.

Everything here is evaluated in natural (linear) scale with float64; dB
conversion is left to the I/O boundary.  Infeasible allocations raise instead
of being clamped, so sweep code cannot silently corrupt results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import LargeScaleProfile, SystemConfig

# relative slack when checking the total-power constraint, absorbs roundoff
# from solvers that place the allocation exactly on the power boundary
_POWER_FEASIBILITY_RTOL = 1e-9


class InfeasibleAllocationError(ValueError):
    """Raised when a power allocation violates its feasibility constraints."""


@dataclass
class PowerAllocation:
    """Full decision-variable tuple: downlink powers, pilot powers, pilot length."""

    p_dl: list
    q_dl: list
    p_up: list
    q_up: list
    tau: int

    def __post_init__(self):
        self.p_dl = [float(p) for p in self.p_dl]
        self.q_dl = [float(q) for q in self.q_dl]
        self.p_up = [float(p) for p in self.p_up]
        self.q_up = [[float(q) for q in grp] for grp in self.q_up]
        self.tau = int(self.tau)
        if self.tau < 1:
            raise ValueError("tau must be a positive integer")
        neg = (
            any(p < 0 for p in self.p_dl)
            or any(q < 0 for q in self.q_dl)
            or any(p < 0 for p in self.p_up)
            or any(q < 0 for g in self.q_up for q in g)
        )
        if neg:
            raise ValueError("powers must be nonnegative")

    @property
    def unicast_power(self) -> float:
        """Total downlink unicast power P_un."""
        return float(np.sum(self.p_dl))

    @property
    def multicast_power(self) -> float:
        """Total downlink multicast power P_mu."""
        return float(np.sum(self.q_dl))

    def check_feasible(self, config: SystemConfig):
        """Validate the total-power and pilot-energy constraints."""
        total = self.unicast_power + self.multicast_power
        budget = config.total_dl_power
        if total > budget * (1.0 + _POWER_FEASIBILITY_RTOL):
            raise InfeasibleAllocationError(
                f"downlink power {total!r} violates P_un + P_mu <= P "
                f"with P = {budget!r}"
            )
        for m, (p, e) in enumerate(zip(self.p_up, config.unicast_energy_budgets)):
            if self.tau * p > e * (1.0 + _POWER_FEASIBILITY_RTOL):
                raise InfeasibleAllocationError(
                    f"unicast pilot energy tau*p_up exceeds budget for user {m}"
                )
        for j, (grp, egrp) in enumerate(
            zip(self.q_up, config.multicast_energy_budgets)
        ):
            for k, (q, e) in enumerate(zip(grp, egrp)):
                if self.tau * q > e * (1.0 + _POWER_FEASIBILITY_RTOL):
                    raise InfeasibleAllocationError(
                        f"multicast pilot energy tau*q_up exceeds budget for "
                        f"user {k} of group {j}"
                    )


def estimation_variance_unicast(tau, p_up, beta):
    """Per-antenna variance of the MMSE unicast channel estimate.

    vartheta = tau * p_up * beta**2 / (1 + tau * p_up * beta).  Accepts scalars
    or broadcastable arrays.
    """
    x = np.multiply(tau, np.multiply(p_up, beta))
    out = x * beta / (1.0 + x)
    if np.ndim(out) == 0:
        return float(out)
    return out


def estimation_variance_multicast(tau, q_up, eta):
    """Per-user and composite estimate variances for one multicast group.

    Returns ``(xi, gamma)`` where ``xi[k]`` is the per-user estimate variance
    and ``gamma`` the variance of the composite-channel estimate.
    """
    q = np.asarray(q_up, dtype=float)
    e = np.asarray(eta, dtype=float)
    if q.shape != e.shape:
        raise ValueError("q_up and eta must have matching lengths")
    s = float(np.sum(tau * q * e))
    xi = tau * q * e**2 / (1.0 + s)
    gamma = s * s / (1.0 + s)
    return xi, gamma


def pilot_scaling(tau, q_up, eta):
    """Scalars c_k tying each per-user estimate to the composite estimate.

    c_k = sqrt(tau*q_k)*eta_k / sum_t tau*q_t*eta_t; all-zero pilot powers give
    all-zero scalings (the estimates collapse to zero anyway).
    """
    q = np.asarray(q_up, dtype=float)
    e = np.asarray(eta, dtype=float)
    s = float(np.sum(tau * q * e))
    if s == 0.0:
        return np.zeros_like(q)
    return np.sqrt(tau * q) * e / s


@dataclass
class EstimationStats:
    """Channel-estimate variances for every user and group."""

    vartheta: list
    xi: list
    gamma: list

    @classmethod
    def from_allocation(
        cls, alloc: PowerAllocation, profile: LargeScaleProfile
    ) -> "EstimationStats":
        vartheta = [
            estimation_variance_unicast(alloc.tau, p, b)
            for p, b in zip(alloc.p_up, profile.beta)
        ]
        xi, gamma = [], []
        for q_grp, eta_grp in zip(alloc.q_up, profile.eta):
            xi_g, gamma_g = estimation_variance_multicast(alloc.tau, q_grp, eta_grp)
            xi.append(list(xi_g))
            gamma.append(gamma_g)
        return cls(vartheta=vartheta, xi=xi, gamma=gamma)


@dataclass
class SpectralEfficiencies:
    """Per-user linear SINRs and spectral efficiencies (bit/s/Hz)."""

    sinr_unicast: list
    se_unicast: list
    sinr_multicast: list
    se_multicast: list

    @property
    def min_multicast_se(self) -> float:
        return min(se for grp in self.se_multicast for se in grp)

    def weighted_sum_unicast_se(self, weights) -> float:
        return float(np.dot(weights, self.se_unicast))


def sinr_se_unicast(
    config: SystemConfig,
    stats: EstimationStats,
    alloc: PowerAllocation,
    profile: LargeScaleProfile,
):
    """Per-unicast-user (sinr, se) under MRT.

    SINR_m = N * p_m * vartheta_m / (1 + beta_m * (P_un + P_mu)), and
    SE_m = (1 - tau/T) * log2(1 + SINR_m).
    """
    alloc.check_feasible(config)
    total = alloc.unicast_power + alloc.multicast_power
    p = np.asarray(alloc.p_dl)
    beta = np.asarray(profile.beta)
    vartheta = np.asarray(stats.vartheta)
    sinr = config.n_antennas * p * vartheta / (1.0 + beta * total)
    se = config.prelog(alloc.tau) * np.log2(1.0 + sinr)
    return sinr, se


def sinr_se_multicast(
    config: SystemConfig,
    stats: EstimationStats,
    alloc: PowerAllocation,
    profile: LargeScaleProfile,
):
    """Per-multicast-user (sinr, se) under MRT, grouped like ``profile.eta``."""
    alloc.check_feasible(config)
    total = alloc.unicast_power + alloc.multicast_power
    prelog = config.prelog(alloc.tau)
    sinr_groups, se_groups = [], []
    for q_dl, xi_grp, eta_grp in zip(alloc.q_dl, stats.xi, profile.eta):
        xi = np.asarray(xi_grp)
        eta = np.asarray(eta_grp)
        sinr = config.n_antennas * q_dl * xi / (1.0 + eta * total)
        sinr_groups.append(sinr)
        se_groups.append(prelog * np.log2(1.0 + sinr))
    return sinr_groups, se_groups


def evaluate(
    config: SystemConfig, alloc: PowerAllocation, profile: LargeScaleProfile
) -> SpectralEfficiencies:
    """Evaluate every user's SINR and SE for a full allocation."""
    stats = EstimationStats.from_allocation(alloc, profile)
    sinr_un, se_un = sinr_se_unicast(config, stats, alloc, profile)
    sinr_mu, se_mu = sinr_se_multicast(config, stats, alloc, profile)
    return SpectralEfficiencies(
        sinr_unicast=list(sinr_un),
        se_unicast=list(se_un),
        sinr_multicast=[list(g) for g in sinr_mu],
        se_multicast=[list(g) for g in se_mu],
    )
