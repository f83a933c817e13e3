#!/usr/bin/env python3
"""Monte Carlo check of the closed-form SINR expressions.

Builds a small joint unicast/multicast scenario, solves both allocation
problems at an even power split, and compares simulated SINRs against the
closed forms for a range of antenna counts.
"""

import argparse
import sys

from mmjoint import (
    LargeScaleProfile,
    PowerAllocation,
    SystemConfig,
    empirical_sinr,
    solve_mmf,
    solve_wsse,
)


def build_scenario(n_antennas):
    config = SystemConfig(
        n_antennas=n_antennas,
        n_unicast=2,
        n_groups=1,
        group_sizes=[2],
        coherence_symbols=200,
        total_dl_power=5.0,
        unicast_energy_budgets=[10.0, 10.0],
        multicast_energy_budgets=[[10.0, 10.0]],
    )
    profile = LargeScaleProfile(beta=[0.8, 1.5], eta=[[1.0, 0.6]])
    return config, profile


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--antennas", type=int, nargs="+",
                        default=[32, 64, 128])
    parser.add_argument("--realizations", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    print(f"{'N':>5} {'user':>12} {'sim SINR':>12} {'analytic':>12} "
          f"{'rel err':>9}")
    worst = 0.0
    for n in args.antennas:
        config, profile = build_scenario(n)
        half = 0.5 * config.total_dl_power
        mmf = solve_mmf(config, profile, p_un=half)
        wsse = solve_wsse(config, profile, p_mu=half)
        alloc = PowerAllocation(p_dl=wsse.p_dl, q_dl=mmf.q_dl,
                                p_up=wsse.p_up, q_up=mmf.q_up,
                                tau=config.n_pilots)
        report = empirical_sinr(config, profile, alloc, args.realizations,
                                seed=args.seed, n_workers=args.workers)
        for user in report.unicast + report.multicast:
            label = f"{user.service[:3]}{tuple(user.index)}"
            print(f"{n:>5} {label:>12} {user.sinr_empirical:>12.4f} "
                  f"{user.sinr_analytic:>12.4f} "
                  f"{user.sinr_relative_error:>9.2%}")
            worst = max(worst, user.sinr_relative_error)
    print(f"worst relative error: {worst:.2%}")
    return 0 if worst < 0.05 else 1


if __name__ == "__main__":
    sys.exit(main())
