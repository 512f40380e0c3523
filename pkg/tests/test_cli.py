import csv
import hashlib

import numpy as np
import pytest

from polymerlab import experiment_cli as cli
from polymerlab import walk_engine as we


def run_main(*args):
    return cli.main(list(args))


def test_default_configs_exist_for_all_experiments():
    for exp in cli.KNOWN_EXPERIMENTS:
        for profile in ("quick", "full"):
            cfg = cli.default_config(exp, profile)
            assert cfg.experiment == exp


def test_unknown_experiment_rejected():
    with pytest.raises(cli.ConfigError):
        cli.default_config("E9", "quick")
    with pytest.raises(cli.ConfigError):
        cli.default_config("E1", "medium")


def test_config_validation():
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig("E1", [3], [100, 50], 10)   # not increasing
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig("E1", [3], [100], 0)        # no replicates
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig("E1", [3], [100], 1, duration_mode="nope")


def test_load_config_roundtrip(tmp_path):
    p = tmp_path / "e1.toml"
    p.write_text("""
[experiment]
id = "E1"
dimensions = [3]
n = [5000]
replicates = 50
master_seed = 123

[charges]
kind = "rademacher"

[tolerances]
ks_threshold = 0.2
""")
    cfg = cli.load_config(str(p))
    assert cfg.experiment == "E1"
    assert cfg.n_values == [5000]
    assert cfg.replicates == 50
    assert cfg.master_seed == 123
    assert cfg.tolerances["ks_threshold"] == 0.2
    cfg2 = cli.load_config(str(p), master_seed=777, threads=2)
    assert cfg2.master_seed == 777 and cfg2.threads == 2


def test_load_config_errors(tmp_path):
    with pytest.raises(cli.ConfigError):
        cli.load_config(str(tmp_path / "missing.toml"))
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment\nid=")
    with pytest.raises(cli.ConfigError):
        cli.load_config(str(bad))
    nocharge = tmp_path / "badcharge.toml"
    nocharge.write_text('[experiment]\nid = "E1"\n[charges]\nkind = "discrete"\n')
    with pytest.raises(cli.ConfigError):
        cli.load_config(str(nocharge))


def test_cli_kappa_exit_codes():
    assert run_main("kappa", "--d", "3", "--tol", "1e-4") == cli.EXIT_OK
    assert run_main("kappa", "--d", "2") == cli.EXIT_CONFIG


def test_cli_invalid_dimension_exit_code(tmp_path):
    p = tmp_path / "e1d2.toml"
    p.write_text('[experiment]\nid = "E1"\ndimensions = [2]\nn = [2000]\nreplicates = 20\n')
    code = run_main("run", "E1", "--config", str(p), "--out", str(tmp_path / "o"))
    assert code == cli.EXIT_CONFIG


def test_cli_io_error_exit_code(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    code = run_main("run", "kappa", "--profile", "quick",
                    "--out", str(blocker / "nested"))
    assert code == cli.EXIT_IO


def test_cli_simulate_writes_fixed_schema(tmp_path):
    out = tmp_path / "sim"
    code = run_main("simulate", "--d", "2", "--n", "5000", "--seed", "5",
                    "--out", str(out))
    assert code == cli.EXIT_OK
    rows = list(csv.reader(open(out / "simulate.csv")))
    assert rows[0] == cli.CSV_HEADER
    stats = {r[4] for r in rows[1:]}
    assert {"H", "V", "Xi", "I", "M", "N", "Xi2"} <= stats


def test_run_writes_csv_and_summary(tmp_path):
    cfg = cli.default_config("kappa", "quick", out_dir=str(tmp_path))
    result = cli.run(cfg)
    assert result.passed
    rows = list(csv.reader(open(tmp_path / "kappa.csv")))
    assert rows[0] == cli.CSV_HEADER
    assert all(len(r) == 7 for r in rows[1:])
    assert any(r[4] == "kappa_series" for r in rows[1:])


def test_thread_count_independence(tmp_path):
    hashes = []
    for threads, sub in ((1, "a"), (3, "b")):
        cfg = cli.default_config("E2", "quick", master_seed=99, threads=threads,
                                 out_dir=str(tmp_path / sub))
        cli.run(cfg)
        hashes.append(hashlib.sha256((tmp_path / sub / "E2.csv").read_bytes()).hexdigest())
    assert hashes[0] == hashes[1]


def test_repeat_run_determinism(tmp_path):
    for sub in ("x", "y"):
        cfg = cli.default_config("E4", "quick", master_seed=5, threads=1,
                                 out_dir=str(tmp_path / sub))
        cli.run(cfg)
    assert (tmp_path / "x" / "E4.csv").read_bytes() == (tmp_path / "y" / "E4.csv").read_bytes()


def test_config_charge_model_reaches_experiments(tmp_path):
    # the parsed charge table changes the experiment's sample law
    from dataclasses import replace
    from polymerlab.charge_models import ChargeModel
    from polymerlab.experiments import run_e2

    base = cli.default_config("E2", "quick", master_seed=4)
    base = replace(base, n_values=[4000], replicates=150,
                   tolerances=dict(ks_threshold=0.3))
    r_rad = run_e2(base)
    r_disc = run_e2(replace(base, charge=ChargeModel.discrete(
        (-2.0, 0.0, 2.0), (0.125, 0.75, 0.125))))
    a = [row[5] for row in r_rad.rows if row[4] == "H_scaled_t100"]
    b = [row[5] for row in r_disc.rows if row[4] == "H_scaled_t100"]
    assert a != b  # different law, different replicate draws
    assert r_disc.stat("ks_two_sample_t100").value < 0.3  # mixture law is law-free


def test_moment_condition_enforced_for_dimension():
    from dataclasses import replace
    from polymerlab.charge_models import ChargeModel, InvalidChargeModelError
    from polymerlab.experiments import run_e2

    cfg = cli.default_config("E2", "quick", master_seed=4)
    weak = ChargeModel(kind="gaussian", declared_moment_order=4)  # d=1 needs 6
    with pytest.raises(InvalidChargeModelError):
        run_e2(replace(cfg, charge=weak))


def test_run_exactness_gate():
    from polymerlab.experiments import run_exactness

    res = run_exactness(321, n_instances=25, max_n=80)
    assert res.passed
    assert res.stat("worst_rel_err").value <= 1e-9


def test_verify_all_subset_quick(tmp_path):
    code = cli.verify_all(profile="quick", out_dir=str(tmp_path), master_seed=cli.DEFAULT_SEED,
                          threads=1, experiments=["kappa", "E1"])
    assert code == cli.EXIT_OK
    summary = (tmp_path / "summary.txt").read_text()
    assert "kappa" in summary and "E1" in summary and "TOTAL PASS" in summary
    assert (tmp_path / "kappa.csv").exists() and (tmp_path / "E1.csv").exists()


def test_mutation_sensitivity_of_intersection_gate():
    # an engine that also counted the site of S_0 adds one phantom
    # intersection per visit to the origin; the brute-force exactness gate
    # catches it instance by instance, and the per-instance discrepancy is
    # exactly the origin visit count (mean = sum_k P{S_k=0})
    import oracles
    from polymerlab import polymer_hamiltonian as ph

    rng = np.random.default_rng(11)
    n = 60
    per_trials = 60
    for d in (1, 2, 3):
        discrepancies = []
        caught = 0
        for _ in range(per_trials):
            pos = we.walk_positions(we.WalkConfig(d, n, seed=int(rng.integers(2**31))))
            q = np.where(rng.random(n) < 0.5, 1.0, -1.0)
            tr = ph.hamiltonian_path(pos, q)
            o = oracles.brute_decomposition(pos, q, np.ones(n))
            assert tr.I[-1] == o["I"]  # the correct engine matches exactly
            origin_visits = int(np.sum(np.all(pos.reshape(n, -1) == 0, axis=1)))
            mutated_I = tr.I[-1] + origin_visits
            discrepancies.append(mutated_I - o["I"])
            if mutated_I != o["I"]:
                caught += 1
        expected = sum(we.return_probability(k, d) for k in range(1, n + 1))
        # the exactness gate sees the mutation on every returning walk and
        # the discrepancy tracks the return-probability series
        assert caught / per_trials > 0.25
        se = np.std(discrepancies, ddof=1) / np.sqrt(per_trials)
        assert abs(np.mean(discrepancies) - expected) < max(4 * se, 0.3)
