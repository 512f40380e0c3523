"""Incremental Hamiltonian, clock, and clock-decomposition traces.

Everything here is O(1) amortized per step: one fused pass maintains the
per-site (count, charge sum C, squared-charge sum D) state and all
running sums.  The per-step algebra is documented in ``_kernels``; the
resulting identities

    Xi1 = I + M + N,   Xi2 = 2 (a + b),   Xi = Xi1 + Xi2

hold to floating-point accuracy and are asserted by the test suite
against direct evaluation of the defining double and triple sums.

The clock is exact given the (q, dt) pairs: the embedded integrand is
piecewise constant between stopping times, so no Brownian path is ever
needed to evaluate it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from . import rng as rng_mod
from .charge_models import ChargeModel, ChargeStream
from .walk_engine import WalkConfig


class LengthMismatchError(ValueError):
    """Walk length and charge count disagree."""


DEFAULT_CHECKPOINT_RATIO = 2.0 ** 0.25


def geometric_checkpoints(n: int, ratio: float = DEFAULT_CHECKPOINT_RATIO,
                          first: int = 1) -> np.ndarray:
    """Geometric checkpoint grid ending exactly at n (log-spaced slopes
    need log-spaced sample points; storing every step is O(n) for nothing)."""
    if n < 1:
        return np.array([], dtype=np.int64)
    pts = []
    x = float(max(1, first))
    while x < n:
        pts.append(int(round(x)))
        x *= ratio
    pts.append(n)
    return np.unique(np.array(pts, dtype=np.int64))


@dataclass
class HamiltonianTrace:
    """Per-checkpoint records of the running Hamiltonian and clocks.

    k[i] is the step index; H, V (unit-duration clock), Xi (embedded
    clock), I (self-intersection count) and the decomposition components
    M, N, a, b, Xi1, Xi2 are the values after step k[i]; max_abs_H[i] is
    max_{j <= k[i]} |H_j| (H_0 = 0 included); sum_L2[i] is the sum of
    squared site visit counts.
    """

    dimension: int
    k: np.ndarray
    H: np.ndarray
    V: np.ndarray
    Xi: np.ndarray
    I: np.ndarray
    M: np.ndarray
    N: np.ndarray
    a: np.ndarray
    b: np.ndarray
    Xi1: np.ndarray
    Xi2: np.ndarray
    max_abs_H: np.ndarray
    sum_L2: np.ndarray

    @property
    def n(self) -> int:
        return int(self.k[-1]) if len(self.k) else 0

    def final_decomposition(self) -> "XiDecomposition":
        return XiDecomposition(
            I_n=int(self.I[-1]),
            M_n=float(self.M[-1]),
            N_n=float(self.N[-1]),
            Xi1=float(self.Xi1[-1]),
            Xi2=float(self.Xi2[-1]),
            a_n=float(self.a[-1]),
            b_n=float(self.b[-1]),
        )


@dataclass(frozen=True)
class XiDecomposition:
    """Terminal clock decomposition: Xi1 = I + M + N, Xi2 = 2(a + b)."""

    I_n: int
    M_n: float
    N_n: float
    Xi1: float
    Xi2: float
    a_n: float
    b_n: float

    @property
    def Xi(self) -> float:
        return self.Xi1 + self.Xi2


def _as_stream(charges: Union[ChargeStream, np.ndarray, Sequence[float]],
               durations: Optional[np.ndarray]) -> ChargeStream:
    if isinstance(charges, ChargeStream):
        if durations is not None:
            raise ValueError("durations are already carried by the ChargeStream")
        return charges
    q = np.asarray(charges, dtype=float)
    if durations is None:
        return ChargeStream.unit(q)
    return ChargeStream(q=q, dt=np.asarray(durations, dtype=float))


def _trace_from_outputs(d, cps, arrays) -> HamiltonianTrace:
    (H, V, Xi, I, M, N, a, b, X1, X2, mx, L2) = arrays
    return HamiltonianTrace(
        dimension=d, k=np.asarray(cps, dtype=np.int64),
        H=H, V=V, Xi=Xi, I=np.asarray(I, dtype=np.int64),
        M=M, N=N, a=a, b=b, Xi1=X1, Xi2=X2, max_abs_H=mx,
        sum_L2=np.asarray(L2, dtype=np.int64),
    )


def hamiltonian_path(
    positions: np.ndarray,
    charges: Union[ChargeStream, np.ndarray, Sequence[float]],
    durations: Optional[np.ndarray] = None,
    checkpoints: Optional[Sequence[int]] = None,
) -> HamiltonianTrace:
    """Fused incremental pass over an explicit walk trace S_1..S_n.

    positions: (n,) ints for d=1 or (n, d); charges: array or ChargeStream
    (durations default to 1).  At step k with site z: H gains q_k * C(z),
    I gains count(z), V gains C(z)^2, Xi gains C(z)^2 dt_k, all read
    before the site is updated with (z, q_k).
    """
    positions = np.asarray(positions, dtype=np.int64)
    n = len(positions)
    d = 1 if positions.ndim == 1 else positions.shape[1]
    stream = _as_stream(charges, durations)
    if len(stream) != n:
        raise LengthMismatchError(f"walk has {n} steps, stream has {len(stream)} charges")
    if checkpoints is None:
        cps = np.array([n], dtype=np.int64) if n else np.array([], dtype=np.int64)
    else:
        cps = np.unique(np.asarray(list(checkpoints), dtype=np.int64))
        if len(cps) and (cps[0] < 1 or cps[-1] > n):
            raise ValueError("checkpoints must lie in 1..n")
        if n and (len(cps) == 0 or cps[-1] != n):
            cps = np.append(cps, n)
    if n == 0:
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int64)
        return HamiltonianTrace(d, zi, z, z, z, zi, z, z, z, z, z, z, z, zi)
    keys = _kernels.pack_positions(positions, d)
    unit = bool(np.all(stream.dt == 1.0))
    arrays = _kernels.trace_from_keys(keys, stream.q, stream.dt, unit, cps)
    return _trace_from_outputs(d, cps, arrays)


def xi_decomposition(
    positions: np.ndarray,
    charges: Union[ChargeStream, np.ndarray, Sequence[float]],
    durations: Optional[np.ndarray] = None,
) -> XiDecomposition:
    """Terminal decomposition of the clock for an explicit walk trace."""
    return hamiltonian_path(positions, charges, durations).final_decomposition()


_QMODE = {"ones": _kernels.QMODE_ONES, "rademacher": _kernels.QMODE_RADEMACHER,
          "gaussian": _kernels.QMODE_GAUSSIAN, "discrete": _kernels.QMODE_DISCRETE}


def simulate_trace(
    cfg: WalkConfig,
    model: Optional[ChargeModel] = None,
    duration_mode: str = "unit",
    checkpoints: Optional[Sequence[int]] = None,
    replicate: int = 0,
) -> HamiltonianTrace:
    """Self-contained bulk replicate: walk, charges and durations are drawn
    inside one numba kernel (O(1) memory per step), seeded from
    (cfg.seed, replicate).

    duration_mode="embedded" samples durations from the exact exit-time
    law of [-1, 1]; it is only meaningful for rademacher charges (the
    symmetric two-point embedding), other laws raise.
    """
    from .charge_models import unit_exit_time_table

    d = cfg.dimension
    n = cfg.steps
    if checkpoints is None:
        cps = np.array([n], dtype=np.int64)
    else:
        cps = np.unique(np.asarray(list(checkpoints), dtype=np.int64))
        if len(cps) == 0 or cps[-1] != n:
            cps = np.unique(np.append(cps, n))

    if model is None:
        qmode = _kernels.QMODE_ONES
        qvals = np.zeros(1)
        qcdf = np.ones(1)
    elif model.kind == "rademacher":
        qmode = _kernels.QMODE_RADEMACHER
        qvals = np.zeros(1)
        qcdf = np.ones(1)
    elif model.kind == "gaussian":
        qmode = _kernels.QMODE_GAUSSIAN
        qvals = np.zeros(1)
        qcdf = np.ones(1)
    else:
        qmode = _kernels.QMODE_DISCRETE
        qvals = np.asarray(model.support, dtype=float)
        qcdf = np.cumsum(np.asarray(model.probabilities, dtype=float))
        qcdf[-1] = 1.0

    if duration_mode == "unit":
        dtmode = _kernels.DTMODE_UNIT
        dt_u = np.zeros(1)
        dt_t = np.ones(1)
    elif duration_mode == "embedded":
        if model is not None and model.kind not in ("rademacher",):
            raise NotImplementedError(
                "bulk embedded durations are implemented for rademacher charges; "
                "use skorohod_stream + hamiltonian_path for general laws"
            )
        dtmode = _kernels.DTMODE_TABLE
        dt_u, dt_t = unit_exit_time_table()
    else:
        raise ValueError(f"unknown duration mode {duration_mode!r}")

    seed = rng_mod.kernel_seed(cfg.seed, replicate, rng_mod.LANE_WALK)
    if d == 1:
        R = max(1024, int(16.0 * math.sqrt(n)) + 64)
        while True:
            out, err, _, _, _ = _kernels.trace_bulk_dense1(
                seed, n, qmode, qvals, qcdf, dtmode, dt_u, dt_t, cps, R)
            if err == 0:
                break
            R *= 2
        return _trace_from_outputs(d, cps, tuple(out))
    out, err = _kernels.trace_bulk_hash(
        seed, n, d, qmode, qvals, qcdf, dtmode, dt_u, dt_t, cps)
    if err != 0:
        raise OverflowError("walk left the packable coordinate range")
    return _trace_from_outputs(d, cps, tuple(out))


def write_trace_csv(path, traces, experiment: str = "trace") -> None:
    """Wide per-checkpoint rows (experiment, replicate, k, H, V, Xi, I, M, N, Xi2)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["experiment", "replicate", "k", "H", "V", "Xi", "I", "M", "N", "Xi2"])
        for rep, tr in enumerate(traces):
            for i in range(len(tr.k)):
                w.writerow([experiment, rep, int(tr.k[i]),
                            repr(float(tr.H[i])), repr(float(tr.V[i])),
                            repr(float(tr.Xi[i])), int(tr.I[i]),
                            repr(float(tr.M[i])), repr(float(tr.N[i])),
                            repr(float(tr.Xi2[i]))])
