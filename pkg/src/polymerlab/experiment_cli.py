"""Experiment orchestration: config files, seeds, CSV/summary output, CLI.

Exit codes: 0 pass, 1 criterion failure, 2 config error, 3 I/O error.
CSV sidecars use the fixed schema (experiment, replicate, d, n, statistic,
value, seed); two runs with the same config and seed produce byte-identical
CSV bodies regardless of thread count.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from . import __version__
from .charge_models import ChargeModel, InvalidChargeModelError
from .experiments import (
    KNOWN_EXPERIMENTS,
    RUNNERS,
    ExperimentResult,
    InvalidDimensionError,
    InvalidExperimentError,
)

EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_CONFIG = 2
EXIT_IO = 3

DEFAULT_SEED = 20260810


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    dimensions: list
    n_values: list
    replicates: int
    charge: ChargeModel = field(default_factory=ChargeModel.rademacher)
    duration_mode: str = "unit"
    master_seed: int = DEFAULT_SEED
    threads: int = 1
    out_dir: str = "out"
    tolerances: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.experiment not in KNOWN_EXPERIMENTS:
            raise ConfigError(f"unknown experiment id {self.experiment!r}; "
                              f"known: {', '.join(KNOWN_EXPERIMENTS)}")
        if self.replicates < 1:
            raise ConfigError("replicate count must be >= 1")
        if list(self.n_values) != sorted(set(int(n) for n in self.n_values)):
            raise ConfigError("n values must be positive and strictly increasing")
        if any(n <= 0 for n in self.n_values):
            raise ConfigError("n values must be positive")
        if self.duration_mode not in ("unit", "embedded"):
            raise ConfigError(f"unknown duration mode {self.duration_mode!r}")
        if self.threads < 1:
            raise ConfigError("thread count must be >= 1")

    def config_hash(self) -> str:
        blob = repr((self.experiment, tuple(self.dimensions), tuple(self.n_values),
                     self.replicates, self.charge, self.duration_mode,
                     self.master_seed, sorted(self.tolerances.items()),
                     sorted(self.extra.items()))).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_FULL = {
    "E1": dict(dimensions=[3], n_values=[100_000], replicates=2000),
    "E2": dict(dimensions=[1], n_values=[100_000], replicates=2000),
    "E3": dict(dimensions=[1], n_values=[100_000], replicates=2000),
    "E4": dict(dimensions=[1, 2, 3], n_values=[1_000_000], replicates=200,
               extra=dict(n_d2=10_000, scaling_ns=[2 ** k for k in range(10, 19)],
                          scaling_reps=200)),
    "E5": dict(dimensions=[1], n_values=[2 ** k for k in range(10, 19)], replicates=100,
               extra=dict(grid_dt=0.02, bin_width=0.25)),
    "E6": dict(dimensions=[1], n_values=[100_000], replicates=200_000,
               extra=dict(y_values=(0.4, 0.5, 0.7, 1.0), grid_dt=2.5e-4,
                          alpha_samples=100_000, alpha_walk_steps=100_000)),
    "E7": dict(dimensions=[1, 2, 3], n_values=[10_000_000], replicates=1,
               extra=dict(lil_n_min=1000)),
    "kappa": dict(dimensions=[3], n_values=[100_000], replicates=200,
                  tolerances=dict(kappa_tol=1e-4)),
}

_QUICK = {
    "E1": dict(dimensions=[3], n_values=[20_000], replicates=300,
               tolerances=dict(ks_threshold=0.12)),
    "E2": dict(dimensions=[1], n_values=[20_000], replicates=300,
               tolerances=dict(ks_threshold=0.15)),
    "E3": dict(dimensions=[1], n_values=[20_000], replicates=300,
               tolerances=dict(ks_threshold=0.15)),
    "E4": dict(dimensions=[1, 2, 3], n_values=[100_000], replicates=40,
               extra=dict(n_d2=4000, scaling_ns=[2 ** k for k in range(10, 16)],
                          scaling_reps=40),
               tolerances=dict(slope_m_d1_low=0.75, slope_m_d1_high=1.3,
                               slope_m_d3_low=0.3, slope_m_d3_high=0.85,
                               slope_xi2_d1_low=1.0, slope_xi2_d1_high=1.55,
                               slope_xi2_d3_low=0.3, slope_xi2_d3_high=0.85,
                               slope_n_d1_low=0.75, slope_n_d1_high=1.25,
                               clock_d1_low=0.85, clock_d1_high=1.15,
                               clock_d3_low=0.9, clock_d3_high=1.1)),
    "E5": dict(dimensions=[1], n_values=[2 ** k for k in range(10, 16)], replicates=20,
               extra=dict(grid_dt=0.05, bin_width=0.25),
               tolerances=dict(slope_low=0.1, slope_high=0.45)),
    "E6": dict(dimensions=[1], n_values=[20_000], replicates=20_000,
               extra=dict(y_values=(0.5, 1.0), grid_dt=1e-3,
                          alpha_samples=10_000, alpha_walk_steps=20_000),
               tolerances=dict(a_star_low=1.5, a_star_high=3.0, a_star_r2=0.98,
                               reflection_tol=0.02)),
    "E7": dict(dimensions=[1, 2, 3], n_values=[1_000_000], replicates=1,
               extra=dict(lil_n_min=500),
               tolerances=dict(lil_low_factor=0.1, lil_high_factor=10.0)),
    "kappa": dict(dimensions=[3], n_values=[20_000], replicates=100,
                  tolerances=dict(kappa_tol=1e-4)),
}


def default_config(experiment: str, profile: str = "full", *, master_seed: int = DEFAULT_SEED,
                   threads: int = 1, out_dir: str = "out") -> ExperimentConfig:
    if experiment not in KNOWN_EXPERIMENTS:
        raise ConfigError(f"unknown experiment id {experiment!r}")
    if profile not in ("full", "quick"):
        raise ConfigError(f"unknown profile {profile!r}")
    base = (_FULL if profile == "full" else _QUICK)[experiment]
    return ExperimentConfig(
        experiment=experiment,
        dimensions=list(base["dimensions"]),
        n_values=list(base["n_values"]),
        replicates=base["replicates"],
        tolerances=dict(base.get("tolerances", {})),
        extra=dict(base.get("extra", {})),
        master_seed=master_seed,
        threads=threads,
        out_dir=out_dir,
    )


def _charge_from_table(tab: dict) -> ChargeModel:
    kind = tab.get("kind", "rademacher")
    if kind == "discrete":
        if "support" not in tab or "probabilities" not in tab:
            raise ConfigError("discrete charge model needs support and probabilities")
        return ChargeModel.discrete(tab["support"], tab["probabilities"])
    if kind == "rademacher":
        return ChargeModel.rademacher()
    if kind == "gaussian":
        return ChargeModel.gaussian()
    if kind == "gaussian_quantized":
        return ChargeModel.gaussian_quantized(int(tab.get("points", 64)))
    raise ConfigError(f"unknown charge kind {kind!r}")


def load_config(path: str, *, profile: str = "full", master_seed: Optional[int] = None,
                threads: Optional[int] = None, out_dir: Optional[str] = None) -> ExperimentConfig:
    """TOML file -> ExperimentConfig; CLI flags override file values."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config file does not parse: {e}") from e
    exp_tab = data.get("experiment", {})
    exp_id = exp_tab.get("id")
    if exp_id is None:
        raise ConfigError("config needs [experiment] id")
    cfg = default_config(exp_id, exp_tab.get("profile", profile),
                         master_seed=exp_tab.get("master_seed", DEFAULT_SEED))
    if "dimensions" in exp_tab:
        cfg = replace(cfg, dimensions=[int(d) for d in exp_tab["dimensions"]])
    if "n" in exp_tab:
        nv = exp_tab["n"]
        cfg = replace(cfg, n_values=[int(x) for x in (nv if isinstance(nv, list) else [nv])])
    if "replicates" in exp_tab:
        cfg = replace(cfg, replicates=int(exp_tab["replicates"]))
    if "duration_mode" in exp_tab:
        cfg = replace(cfg, duration_mode=exp_tab["duration_mode"])
    if "threads" in exp_tab:
        cfg = replace(cfg, threads=int(exp_tab["threads"]))
    if "out_dir" in exp_tab:
        cfg = replace(cfg, out_dir=exp_tab["out_dir"])
    if "charges" in data:
        try:
            cfg = replace(cfg, charge=_charge_from_table(data["charges"]))
        except InvalidChargeModelError as e:
            raise ConfigError(f"invalid charge model: {e}") from e
    if "tolerances" in data:
        cfg.tolerances.update(data["tolerances"])
    if "extra" in data:
        cfg.extra.update(data["extra"])
    if master_seed is not None:
        cfg = replace(cfg, master_seed=master_seed)
    if threads is not None:
        cfg = replace(cfg, threads=threads)
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    return cfg


CSV_HEADER = ["experiment", "replicate", "d", "n", "statistic", "value", "seed"]


def write_rows_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r[0], r[1], r[2], r[3], r[4], repr(r[5]), r[6]])


def _summary_lines(result: ExperimentResult, cfg: ExperimentConfig) -> list:
    lines = [f"[{result.experiment}] config={cfg.config_hash()} version={__version__}"]
    for s in result.stats:
        ci = f" ci=[{s.ci_low!r}, {s.ci_high!r}]" if s.ci_low is not None else ""
        if s.passed is None:
            lines.append(f"  {s.name} = {s.value!r}{ci}  (report)")
        else:
            lines.append(f"  {s.name} = {s.value!r}{ci}  {s.threshold}  "
                         f"{'PASS' if s.passed else 'FAIL'}")
    lines.append(f"  -> {'PASS' if result.passed else 'FAIL'} "
                 f"(wall {result.wall_time:.1f}s)")
    return lines


def run(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one experiment and write its CSV sidecar."""
    runner = RUNNERS[cfg.experiment]
    t0 = time.time()
    result = runner(cfg)
    result.wall_time = time.time() - t0
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_rows_csv(out / f"{cfg.experiment}.csv", result.rows)
    except OSError as e:
        raise IOError(f"cannot write to {out}: {e}") from e
    return result


def verify_all(profile: str = "full", out_dir: str = "out", master_seed: int = DEFAULT_SEED,
               threads: int = 1, experiments=None) -> int:
    """Run the whole suite; one pass/fail line per criterion; summary.txt."""
    if profile not in ("full", "quick"):
        raise ConfigError(f"unknown profile {profile!r}")
    todo = list(experiments) if experiments else list(KNOWN_EXPERIMENTS)
    all_lines = [f"verification profile={profile} seed={master_seed} version={__version__}"]
    ok = True
    t0 = time.time()
    if experiments is None:
        # engine exactness sweep runs first: incremental vs direct sums
        from .experiments import run_exactness

        n_inst = 500 if profile == "full" else 60
        t1 = time.time()
        exact = run_exactness(master_seed, n_instances=n_inst)
        exact.wall_time = time.time() - t1
        lines = _summary_lines(exact, default_config("kappa", profile,
                                                     master_seed=master_seed))
        lines[0] = f"[exactness] instances={n_inst}"
        all_lines.extend(lines)
        for ln in lines:
            print(ln)
        ok = ok and exact.passed
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            write_rows_csv(Path(out_dir) / "exactness.csv", exact.rows)
        except OSError as e:
            raise IOError(f"cannot write to {out_dir}: {e}") from e
    for exp in todo:
        cfg = default_config(exp, profile, master_seed=master_seed, threads=threads,
                             out_dir=out_dir)
        result = run(cfg)
        lines = _summary_lines(result, cfg)
        all_lines.extend(lines)
        for ln in lines:
            print(ln)
        ok = ok and result.passed
    all_lines.append(f"TOTAL {'PASS' if ok else 'FAIL'} wall={time.time() - t0:.1f}s")
    print(all_lines[-1])
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "summary.txt").write_text("\n".join(all_lines) + "\n")
    except OSError as e:
        raise IOError(f"cannot write summary: {e}") from e
    return EXIT_OK if ok else EXIT_CRITERION


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    from .polymer_hamiltonian import geometric_checkpoints, simulate_trace
    from .walk_engine import WalkConfig

    cfg = WalkConfig(dimension=args.d, steps=args.n, seed=args.seed)
    model = _charge_from_table({"kind": args.charges})
    cps = geometric_checkpoints(args.n)
    tr = simulate_trace(cfg, model, args.duration_mode, cps)
    rows = []
    for i, k in enumerate(tr.k):
        for stat, arr in (("H", tr.H), ("V", tr.V), ("Xi", tr.Xi), ("I", tr.I),
                          ("M", tr.M), ("N", tr.N), ("Xi2", tr.Xi2)):
            rows.append(("simulate", 0, args.d, int(k), stat, float(arr[i]), args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(out / "simulate.csv", rows)
    dec = tr.final_decomposition()
    print(f"n={tr.n} d={args.d} H={tr.H[-1]:.6g} I={dec.I_n} Xi={tr.Xi[-1]:.6g} "
          f"max|H|={tr.max_abs_H[-1]:.6g}")
    return EXIT_OK


def _cmd_kappa(args) -> int:
    from .walk_engine import kappa

    v = kappa(args.d, tol=args.tol)
    q = kappa(args.d, tol=args.tol, method="quadrature")
    print(f"kappa(d={args.d}) = {v:.10f}  (series; quadrature {q:.10f}, "
          f"difference {abs(v - q):.2e})")
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.config:
        cfg = load_config(args.config, profile=args.profile, master_seed=args.seed,
                          threads=args.threads, out_dir=args.out)
        if cfg.experiment != args.experiment:
            raise ConfigError(f"config file is for {cfg.experiment!r}, "
                              f"CLI asked for {args.experiment!r}")
    else:
        cfg = default_config(args.experiment, args.profile,
                             master_seed=args.seed if args.seed is not None else DEFAULT_SEED,
                             threads=args.threads or 1, out_dir=args.out)
    result = run(cfg)
    for ln in _summary_lines(result, cfg):
        print(ln)
    return EXIT_OK if result.passed else EXIT_CRITERION


def _cmd_verify_all(args) -> int:
    return verify_all(profile=args.profile, out_dir=args.out,
                      master_seed=args.seed if args.seed is not None else DEFAULT_SEED,
                      threads=args.threads or 1)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polymerlab",
                                description="Monte Carlo lab for charged-polymer Hamiltonians")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="one Hamiltonian trace, CSV checkpoints")
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--charges", default="rademacher")
    s.add_argument("--duration-mode", default="unit", choices=["unit", "embedded"])
    s.add_argument("--out", default="out")
    s.set_defaults(fn=_cmd_simulate)

    k = sub.add_parser("kappa", help="return-probability series sum for d >= 3")
    k.add_argument("--d", type=int, default=3)
    k.add_argument("--tol", type=float, default=1e-4)
    k.set_defaults(fn=_cmd_kappa)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment", choices=list(KNOWN_EXPERIMENTS))
    r.add_argument("--config", default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--out", default="out")
    r.add_argument("--profile", default="full", choices=["quick", "full"])
    r.set_defaults(fn=_cmd_run)

    v = sub.add_parser("verify-all", help="run the whole verification suite")
    v.add_argument("--profile", default="quick", choices=["quick", "full"])
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--threads", type=int, default=None)
    v.add_argument("--out", default="out")
    v.set_defaults(fn=_cmd_verify_all)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ConfigError, InvalidDimensionError, InvalidExperimentError,
            InvalidChargeModelError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IOError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
