"""Consensus error of the linear protocol versus horizon, with the slowest-mode prediction.

The slowest closed-loop mode of q_t = q_ss, q_s(1) = -lambda q(1) decays like
exp(-w^2 t) with w tan w = lambda; for the second Laplacian eigenvalue this
sets how long the linear law needs to reach a given consensus tolerance.
"""

import argparse
import math

import numpy as np

from heatnet.experiments.runner import simulate_scenario
from heatnet.experiments.scenario import load_preset
from heatnet.dynamics import SimConfig
from heatnet.graph import laplacian, spectrum


def slowest_rate(lam):
    lo, hi = 0.0, math.pi / 2 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if mid * math.tan(mid) < lam else (lo, mid)
    return lo * lo


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--t-end", type=float, default=25.0)
    parser.add_argument("--tol", type=float, default=1e-2)
    args = parser.parse_args()
    s = load_preset("test1")
    lam2 = spectrum(laplacian(s.topology)).lambda2
    rate = slowest_rate(lam2)
    print(f"lambda2 = {lam2:.6f}, slowest decay rate = {rate:.4f} 1/s")
    rec = simulate_scenario(s, config=SimConfig(s.sim.dt, args.t_end, 1000))
    q_star = rec.report.q_star
    errs = np.array([np.abs(q - q_star).max() for q in rec.q])
    for t, e in list(zip(rec.times, errs))[::10]:
        print(f"t = {t:6.2f}  max |Q - Q*| = {e:.3e}")
    hit = np.nonzero(errs <= args.tol)[0]
    print(f"first sample within {args.tol:g}: "
          + (f"t = {rec.times[hit[0]]:.1f}" if hit.size else "not reached"))


if __name__ == "__main__":
    main()
