"""Richardson self-convergence rates of ETD1 / ETDRK2 with a frozen fitting field.

Rates approach 1 and 2 only once S * dt is small, because the stabilizer
part of the nonlinearity is treated explicitly. Vary --epsilon / --lam to see
how fast the asymptotic regime is reached.

    python scripts/order_study.py --epsilon 50 --lam 0.01
"""

import argparse
import math

import numpy as np

from acseg import etd_solver as etd


def solve(scheme, dt, eps, lam, n=32, T=1.0):
    y, x = np.mgrid[0:n, 0:n] + 0.5
    image = 0.5 + 0.4 * np.cos(np.pi * x / n) * np.cos(2 * np.pi * y / n)
    U = 0.5 + 0.35 * np.cos(2 * np.pi * x / n) * np.cos(np.pi * y / n)
    p = etd.SolverParams(epsilon=eps, lambda1=lam, lambda2=lam, dt=dt)
    plan = etd.spectral_plan(n, n, p)
    f = etd.FittingField.from_params(image, 0.8, 0.2, p)
    step = etd.etd1_step if scheme == "etd1" else etd.etdrk2_step
    for _ in range(round(T / dt)):
        U = step(U, f, plan, p)
    return U, p.S


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--epsilon", type=float, default=50.0)
    ap.add_argument("--lam", type=float, default=0.01)
    ap.add_argument("--dts", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025, 0.0125])
    args = ap.parse_args()
    for scheme in ("etd1", "etdrk2"):
        sols = [solve(scheme, dt, args.epsilon, args.lam) for dt in args.dts]
        S = sols[0][1]
        diffs = [np.max(np.abs(a[0] - b[0])) for a, b in zip(sols, sols[1:])]
        rates = [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]
        print(f"{scheme}: S = {S:.3f}")
        for dt, r in zip(args.dts, rates):
            print(f"  dt = {dt:<7g} S*dt = {S * dt:6.3f}  rate = {r:.3f}")


if __name__ == "__main__":
    main()
