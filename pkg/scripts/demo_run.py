#!/usr/bin/env python3
"""Small end-to-end demo: one trace, its decomposition, and a quick E-run.

    python scripts/demo_run.py --out demo_out
"""

import argparse

from polymerlab import brownian_lab as bl
from polymerlab import charge_models as cm
from polymerlab import polymer_hamiltonian as ph
from polymerlab import walk_engine as we
from polymerlab.experiment_cli import default_config, run


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="demo_out")
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    cfg = we.WalkConfig(dimension=1, steps=200_000, seed=args.seed)
    cps = ph.geometric_checkpoints(cfg.steps)
    tr = ph.simulate_trace(cfg, cm.ChargeModel.rademacher(), "embedded", cps)
    dec = tr.final_decomposition()
    print(f"n={tr.n}: H={tr.H[-1]:.1f} I={dec.I_n} Xi={tr.Xi[-1]:.1f} "
          f"Xi/(0.5 sum L^2)={tr.Xi[-1] / (0.5 * tr.sum_L2[-1]):.4f}")
    print(f"decomposition: M={dec.M_n:.3f} N={dec.N_n:.3f} "
          f"Xi1={dec.Xi1:.1f} Xi2={dec.Xi2:.1f} (identities hold to fp)")

    lt = bl.lil_trajectory(tr, 1)
    print(f"LIL statistic at n: r={lt.r[-1]:.3f}, running min {lt.final_min:.3f}, "
          f"predicted constant {bl.lil_constant(1):.4f}")

    # experiment gates are 3-sigma checks: run them at the pinned default
    # seed rather than the demo seed
    res = run(default_config("kappa", "quick", out_dir=args.out))
    print(f"kappa experiment: {'PASS' if res.passed else 'FAIL'}; "
          f"CSV in {args.out}/kappa.csv")


if __name__ == "__main__":
    main()
