#!/usr/bin/env python3
"""Pilot runs behind the configured brackets and grids.

Reproduces the calibration evidence for the pinned experiment parameters:
the coupling-error slope at several grid resolutions, the small-ball grid
bias, and the Laplace-fit behavior of the alpha(1) proxy.  Slow-ish; run
when revisiting a bracket, not as part of verification.
"""

import argparse
import time

import numpy as np

from polymerlab import brownian_lab as bl
from polymerlab import stat_toolkit as st
from polymerlab import _kernels as K


def pilot_coupling(args):
    ns = [2 ** k for k in range(10, args.nmax_pow + 1)]
    for dt in (0.02, 0.01, 0.005):
        t0 = time.time()
        res = bl.revesz_coupling_errors(ns, replicates=args.reps, seed=args.seed,
                                        grid_dt=dt, bin_width=0.25)
        med = np.median(res["errors"], axis=0)
        fit = st.loglog_slope(np.column_stack([ns, med]))
        print(f"grid_dt={dt:<6} slope={fit.slope:.4f} r2={fit.r_squared:.4f} "
              f"disp_mean={res['disp_mean']:.4f} ({time.time() - t0:.0f}s)")


def pilot_smallball(args):
    for dt in (1e-3, 5e-4, 2.5e-4):
        alive = K.small_ball_survivals(args.seed, args.reps, int(round(1.0 / dt)), dt, 0.5)
        emp = alive / args.reps
        lo, hi = bl.small_ball_bounds(0.5, 1.0)
        print(f"grid_dt={dt:<8} y=0.5 empirical={emp:.5f} bounds=[{lo:.5f}, {hi:.5f}]")


def pilot_astar(args):
    for m in (10_000, 30_000, 100_000):
        al = bl.alpha_walk_proxy_samples(m, n_steps=100_000, seed=args.seed)
        fit = bl.a_star_fit(al)
        print(f"samples={m:<7} a*={fit.a_star:.4f} r2={fit.r_squared:.5f} "
              f"dropped={fit.dropped}")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("what", choices=["coupling", "smallball", "astar", "all"])
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--seed", type=int, default=20260810)
    p.add_argument("--nmax-pow", type=int, default=18)
    args = p.parse_args()
    if args.what in ("coupling", "all"):
        pilot_coupling(args)
    if args.what in ("smallball", "all"):
        pilot_smallball(args)
    if args.what in ("astar", "all"):
        pilot_astar(args)


if __name__ == "__main__":
    main()
