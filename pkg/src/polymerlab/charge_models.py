"""i.i.d. mean-zero unit-variance charge laws and their Skorohod embedding.

A charge law q is realized as a Brownian increment W(T) - W(T') at an
interval-exit stopping time.  For a discrete mean-zero law the classical
randomized two-point construction applies: draw a pair a < 0 < b from the
mixing measure proportional to (b - a) mu(da) mu(db), then stop W at the
exit of [a, b].  The exit side reproduces the law exactly and
E[T] = E[q^2] = 1 by optional stopping.

Gaussian charges are not a discrete law; embedded mode routes them
through a 64-point Gauss-Hermite quantization (moments match N(0,1)
through order 127) or rejects, per configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from . import rng as rng_mod
from . import _kernels


class InvalidChargeModelError(ValueError):
    """Moment conditions violated (mean != 0, variance != 1, or p(d) order)."""


class NotExactlyEmbeddableError(ValueError):
    """Embedded durations requested for a law with no exact two-point mixture."""


_MOMENT_TOL = 1e-12


def moment_order_required(d: int) -> int:
    """Finite-moment order the charge law must declare: 6 if d=1, 4 if d>=2."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 6 if d == 1 else 4


@dataclass(frozen=True)
class ChargeModel:
    """kind in {"rademacher", "gaussian", "discrete"}; discrete kinds carry
    support points and probabilities.  Built-in kinds have all moments
    finite, hence the generous default declared order."""

    kind: str
    support: Optional[tuple] = None
    probabilities: Optional[tuple] = None
    declared_moment_order: int = 100

    def __post_init__(self) -> None:
        if self.kind not in ("rademacher", "gaussian", "discrete"):
            raise InvalidChargeModelError(f"unknown charge kind {self.kind!r}")
        if self.kind == "discrete":
            if self.support is None or self.probabilities is None:
                raise InvalidChargeModelError("discrete law needs support and probabilities")
            s = np.asarray(self.support, dtype=float)
            p = np.asarray(self.probabilities, dtype=float)
            if len(s) != len(p) or len(s) == 0:
                raise InvalidChargeModelError("support/probability length mismatch")
            if np.any(p < 0):
                raise InvalidChargeModelError("negative probability")
            if abs(p.sum() - 1.0) > _MOMENT_TOL:
                raise InvalidChargeModelError(f"probabilities sum to {p.sum()}, not 1")
            mean = float(np.dot(s, p))
            var = float(np.dot(s * s, p))
            if abs(mean) > _MOMENT_TOL:
                raise InvalidChargeModelError(f"mean {mean} != 0")
            if abs(var - 1.0) > _MOMENT_TOL:
                raise InvalidChargeModelError(f"variance {var} != 1")
        elif self.support is not None or self.probabilities is not None:
            raise InvalidChargeModelError(f"{self.kind} law takes no support table")

    @classmethod
    def rademacher(cls) -> "ChargeModel":
        return cls(kind="rademacher")

    @classmethod
    def gaussian(cls) -> "ChargeModel":
        return cls(kind="gaussian")

    @classmethod
    def discrete(cls, support, probabilities) -> "ChargeModel":
        return cls(kind="discrete", support=tuple(float(x) for x in support),
                   probabilities=tuple(float(x) for x in probabilities))

    @classmethod
    def gaussian_quantized(cls, n_points: int = 64) -> "ChargeModel":
        """Discrete 64-point stand-in for N(0,1) (Gauss-Hermite nodes).

        The quantized law matches Gaussian moments up to order 2*n_points-1;
        its Kolmogorov distance from the normal CDF is reported by
        ``gaussian_quantization_error``.
        """
        x, w = np.polynomial.hermite_e.hermegauss(n_points)
        w = w / w.sum()
        # renormalize variance exactly (numerical weights are ~1e-15 off)
        var = float(np.dot(x * x, w))
        x = x / math.sqrt(var)
        return cls(kind="discrete", support=tuple(x), probabilities=tuple(w))

    def validate_for_dimension(self, d: int) -> None:
        need = moment_order_required(d)
        if self.declared_moment_order < need:
            raise InvalidChargeModelError(
                f"law declares finite moments to order {self.declared_moment_order}, "
                f"d={d} requires {need}"
            )

    def moment(self, order: int) -> float:
        if self.kind == "rademacher":
            return 1.0 if order % 2 == 0 else 0.0
        if self.kind == "gaussian":
            if order % 2 == 1:
                return 0.0
            return float(np.prod(np.arange(1, order, 2, dtype=float)))  # (order-1)!!
        s = np.asarray(self.support)
        p = np.asarray(self.probabilities)
        return float(np.dot(s**order, p))


def gaussian_quantization_error(n_points: int = 64) -> float:
    """Kolmogorov distance between N(0,1) and the quantized stand-in."""
    from scipy.special import ndtr

    m = ChargeModel.gaussian_quantized(n_points)
    s = np.asarray(m.support)
    p = np.asarray(m.probabilities)
    order = np.argsort(s)
    s = s[order]
    cdf = np.cumsum(p[order])
    phi = ndtr(s)
    return float(max(np.max(np.abs(cdf - phi)), np.max(np.abs(np.concatenate([[0.0], cdf[:-1]]) - phi))))


@dataclass
class ChargeStream:
    """Aligned (q_k, dt_k) pairs; dt_k is the k-th embedded duration
    T_k - T_{k-1} (identically 1 in unit-duration mode)."""

    q: np.ndarray
    dt: np.ndarray

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        self.dt = np.asarray(self.dt, dtype=float)
        if self.q.shape != self.dt.shape:
            raise ValueError("q and dt must align")
        if np.any(self.dt <= 0):
            raise ValueError("durations must be positive")

    def __len__(self) -> int:
        return len(self.q)

    @classmethod
    def unit(cls, q: np.ndarray) -> "ChargeStream":
        return cls(q=np.asarray(q, dtype=float), dt=np.ones(len(q)))

    def times(self) -> np.ndarray:
        """Running stopping times T_1..T_n."""
        return np.cumsum(self.dt)


def sample_charges(model: ChargeModel, n: int,
                   seed_or_rng: Union[int, np.random.Generator] = 0,
                   replicate: int = 0) -> np.ndarray:
    """n i.i.d. draws from the law; deterministic given the seed."""
    if isinstance(seed_or_rng, np.random.Generator):
        gen = seed_or_rng
    else:
        gen = rng_mod.stream(int(seed_or_rng), replicate, rng_mod.LANE_CHARGE)
    if model.kind == "rademacher":
        return np.where(gen.random(n) < 0.5, 1.0, -1.0)
    if model.kind == "gaussian":
        return gen.standard_normal(n)
    s = np.asarray(model.support)
    cdf = np.cumsum(np.asarray(model.probabilities))
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, gen.random(n), side="left")
    return s[idx]


# ---------------------------------------------------------------------------
# Two-point mixture embedding
# ---------------------------------------------------------------------------


def _two_point_mixture(model: ChargeModel):
    """Atoms and mixing weights for the randomized two-point embedding.

    Returns (p_zero, a_vals, b_vals, pair_cdf): with probability p_zero the
    charge is the atom at 0; otherwise pair i is drawn with probability
    proportional to (b_i - a_i) mu(a_i) mu(b_i) and W exits [a_i, b_i].
    """
    s = np.asarray(model.support, dtype=float)
    p = np.asarray(model.probabilities, dtype=float)
    keep = p > 0
    s, p = s[keep], p[keep]
    p_zero = float(p[np.abs(s) < 1e-15].sum())
    neg = s < 0
    pos = s > 0
    a_atoms, pa = s[neg], p[neg]
    b_atoms, pb = s[pos], p[pos]
    if len(a_atoms) == 0 or len(b_atoms) == 0:
        if p_zero >= 1.0 - 1e-15:
            return 1.0, np.zeros(0), np.zeros(0), np.zeros(0)
        raise InvalidChargeModelError("mean-zero law needs mass on both sides of 0")
    A, B = np.meshgrid(a_atoms, b_atoms, indexing="ij")
    WA, WB = np.meshgrid(pa, pb, indexing="ij")
    wgt = (B - A) * WA * WB
    wgt = wgt.ravel()
    cdf = np.cumsum(wgt / wgt.sum())
    cdf[-1] = 1.0
    return p_zero, A.ravel(), B.ravel(), cdf


def skorohod_stream(
    model: ChargeModel,
    n: int,
    grid_dt: float = 1e-3,
    seed: int = 0,
    replicate: int = 0,
    gaussian_mode: str = "quantize",
) -> ChargeStream:
    """Embedded (charge, duration) pairs: q_k = exit side of [a_k, b_k].

    Interval exits run on an Euler grid of step grid_dt with the
    Brownian-bridge crossing correction exp(-2 g0 g1 / grid_dt) per
    substep, which removes the O(sqrt(grid_dt)) exit-detection bias.  The
    atom at 0 passes through with dt = grid_dt (epsilon_min) rather than 0
    so durations stay positive.  Gaussian laws quantize (default) or raise
    NotExactlyEmbeddableError when gaussian_mode="reject".
    """
    if not (0 < grid_dt <= 0.01):
        raise ValueError("grid_dt must lie in (0, 0.01]")
    if model.kind == "gaussian":
        if gaussian_mode == "reject":
            raise NotExactlyEmbeddableError(
                "a continuous law has no exact two-point mixture; "
                "use unit durations or gaussian_mode='quantize'"
            )
        model = ChargeModel.gaussian_quantized()
    if model.kind == "rademacher":
        model = ChargeModel.discrete((-1.0, 1.0), (0.5, 0.5))

    p_zero, a_vals, b_vals, pair_cdf = _two_point_mixture(model)
    gen = rng_mod.stream(seed, replicate, rng_mod.LANE_DURATION)
    u = gen.random(n)
    q = np.zeros(n)
    dt = np.full(n, grid_dt)  # zero-atom epsilon_min
    if len(a_vals) > 0:
        live = u >= p_zero
        upair = (u[live] - p_zero) / (1.0 - p_zero) if p_zero > 0 else u[live]
        idx = np.searchsorted(pair_cdf, upair, side="left")
        kseed = rng_mod.kernel_seed(seed, replicate, rng_mod.LANE_DURATION)
        qv, tv = _kernels.interval_exits(kseed, a_vals[idx], b_vals[idx], grid_dt)
        q[live] = qv
        dt[live] = np.maximum(tv, grid_dt * 0.5)
    return ChargeStream(q=q, dt=dt)


# ---------------------------------------------------------------------------
# Exact exit-time law of [-1, 1] (symmetric two-point shortcut)
# ---------------------------------------------------------------------------
#
# For the symmetric interval the exit side is an independent fair sign, so
# bulk rademacher streams can sample dt directly from the exit-time law:
#   P{T > t} = (4/pi) sum_{k>=0} (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 t / 8).


def _unit_exit_survival(t: np.ndarray, terms: int = 600) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    s = np.zeros_like(t)
    for k in range(terms):
        c = (-1.0) ** k / (2 * k + 1)
        s += c * np.exp(-((2 * k + 1) ** 2) * math.pi**2 * t / 8.0)
    return np.clip(4.0 / math.pi * s, 0.0, 1.0)


@lru_cache(maxsize=1)
def unit_exit_time_table(n_grid: int = 4096):
    """(F, t) inverse-CDF table for the exit time of [-1, 1] from 0.

    Geometric t-grid on [1e-3, 28]; beyond the grid the exact exponential
    tail rate pi^2/8 extends the inverse.  Returned arrays feed both the
    numpy sampler and the numba bulk kernels.
    """
    t = np.geomspace(1e-3, 28.0, n_grid)
    F = 1.0 - _unit_exit_survival(t)
    # strictly increasing F for interpolation
    keep = np.concatenate([[True], np.diff(F) > 1e-16])
    t, F = t[keep], F[keep]
    return F, t


def sample_unit_exit_times(n: int, gen: np.random.Generator) -> np.ndarray:
    F, t = unit_exit_time_table()
    u = gen.random(n)
    out = np.interp(u, F, t)
    tail = u > F[-1]
    if np.any(tail):
        lam = math.pi**2 / 8.0
        out[tail] = t[-1] + (np.log((1.0 - F[-1]) / (1.0 - u[tail]))) / lam
    return out


def rademacher_embedded_stream(n: int, seed: int = 0, replicate: int = 0) -> ChargeStream:
    """Rademacher (q, dt) with dt from the exact exit-time law.

    Same law as skorohod_stream(rademacher) but O(1) per charge; the side
    and the exit time of a symmetric interval are independent.
    """
    sgen = rng_mod.stream(seed, replicate, rng_mod.LANE_CHARGE)
    q = np.where(sgen.random(n) < 0.5, 1.0, -1.0)
    tgen = rng_mod.stream(seed, replicate, rng_mod.LANE_DURATION)
    return ChargeStream(q=q, dt=sample_unit_exit_times(n, tgen))
