"""Brute-force oracles: direct evaluation of every defining sum.

These deliberately avoid the incremental recursions they check.  Pair
sums are evaluated from the full (i, j) site-equality matrix; the triple
sum is evaluated per endpoint k from the explicit pair sum over i < j < k.
Runtime is O(n^2)-O(n^3), fine for n <= a few hundred.
"""

from __future__ import annotations

import itertools

import numpy as np


def equality_matrix(positions: np.ndarray) -> np.ndarray:
    pos = np.asarray(positions)
    if pos.ndim == 1:
        pos = pos[:, None]
    return (pos[:, None, :] == pos[None, :, :]).all(axis=2)


def brute_decomposition(positions, q, dt) -> dict:
    """Direct evaluation of H, I, M, N, V, Xi, Xi1, Xi2, a, b and max|H|."""
    q = np.asarray(q, dtype=float)
    dt = np.asarray(dt, dtype=float)
    n = len(q)
    E = equality_matrix(positions)
    iu = np.triu_indices(n, 1)
    H = float((np.outer(q, q) * E)[iu].sum())
    I = int(E[iu].sum())
    M = float((np.outer(q * q - 1.0, np.ones(n)) * E)[iu].sum())
    N = float((np.outer(q * q, dt - 1.0) * E)[iu].sum())
    Xi1 = float((np.outer(q * q, dt) * E)[iu].sum())
    a = b = Xi2 = 0.0
    V = Xi = 0.0
    maxH = 0.0
    run_H = 0.0
    for k in range(n):
        mask = E[:k, k].astype(float)
        qm = q[:k] * mask
        if k > 1:
            tau = float(np.triu(np.outer(qm, qm), 1).sum())
        else:
            tau = 0.0
        b += tau
        a += tau * (dt[k] - 1.0)
        Xi2 += 2.0 * tau * dt[k]
        g = float(qm.sum())
        V += g * g
        Xi += g * g * dt[k]
        run_H += q[k] * g
        maxH = max(maxH, abs(run_H))
    return dict(H=H, I=I, M=M, N=N, Xi1=Xi1, Xi2=Xi2, a=a, b=b, V=V, Xi=Xi,
                max_abs_H=maxH)


def hamiltonian_direct(positions, q) -> float:
    """H_n as the literal double sum over 1 <= i < j <= n."""
    q = np.asarray(q, dtype=float)
    E = equality_matrix(positions)
    n = len(q)
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if E[i, j]:
                total += q[i] * q[j]
    return total


def lattice_moves(d: int) -> list:
    out = []
    for axis in range(d):
        for sign in (1, -1):
            v = [0] * d
            v[axis] = sign
            out.append(tuple(v))
    return out


def enumerate_walk_statistic(n: int, d: int, statistic) -> float:
    """Average of statistic(sites) over all (2d)^n equally likely paths."""
    moves = lattice_moves(d)
    total = 0.0
    count = 0
    for seq in itertools.product(moves, repeat=n):
        pos = [0] * d
        sites = []
        for mv in seq:
            pos = [p + m for p, m in zip(pos, mv)]
            sites.append(tuple(pos))
        total += statistic(sites)
        count += 1
    return total / count


def intersection_pairs(sites) -> int:
    n = len(sites)
    return sum(1 for i in range(n) for j in range(i + 1, n) if sites[i] == sites[j])


def return_probability_enumerated(k: int, d: int) -> float:
    origin = (0,) * d
    return enumerate_walk_statistic(k, d, lambda sites: 1.0 if sites[-1] == origin else 0.0)
