"""Compare the harmonic-balance solver with brute-force time integration.

Draws random two-colour drives, integrates each to its periodic orbit and
projects onto the beat harmonics, then reports the worst deviation from the
Floquet solution.

    python scripts/oracle_check.py [--count 200] [--seed 1] [--n-max 10]
"""
import argparse

import numpy as np

from mollow.dynamics import steady_harmonics_oracle
from mollow.floquet import floquet_solve
from mollow.model import DriveConfig, EmitterParams


def draw(rng, gamma):
    return DriveConfig(
        omega_pump=float(rng.uniform(0.1, 3.0) * gamma),
        omega_probe=float(rng.uniform(0.05, 1.0) * gamma),
        delta_pump=float(rng.uniform(-1.5, 1.5) * gamma),
        delta_pp=float(rng.choice([-1, 1]) * rng.uniform(0.5, 3.0) * gamma),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--n-max", type=int, default=10)
    ap.add_argument("--gamma", type=float, default=20.0)
    a = ap.parse_args()
    e = EmitterParams(a.gamma)
    rng = np.random.default_rng(a.seed)
    devs = []
    worst = None
    for _ in range(a.count):
        d = draw(rng, a.gamma)
        c, p = steady_harmonics_oracle(e, d, n_max=a.n_max, tol=1e-11)
        sol = floquet_solve(e, d, n_max=a.n_max, check_truncation=False)
        dev = max(np.max(np.abs(c - sol.c)), np.max(np.abs(p - sol.p_full)))
        devs.append(dev)
        if worst is None or dev > worst[0]:
            worst = (dev, d, sol.truncation_warning)
    devs = np.array(devs)
    print(f"{a.count} drives, n_max={a.n_max}")
    print(f"median deviation {np.median(devs):.2e}, max {devs.max():.2e}")
    print(f"worst case {worst[1]} (truncation warning: {worst[2]})")


if __name__ == "__main__":
    main()
