"""Probabilistic sequences for uncertain wind and PV output.

A probabilistic sequence is a probability mass function on the uniform power
grid ``0, q, 2q, ..., N q``.  Wind and PV distributions are discretized onto
that grid, combined by discrete convolution, and queried for the expected
output and for the smallest reserve that covers a shortfall with a given
probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

# construction aborts beyond this raw-sum error
RAW_SUM_TOL = 1e-6
SUM_TOL = 1e-9
# slack used when comparing tail sums against a confidence level
TAIL_TOL = 1e-12


@dataclass(frozen=True)
class ProbSeq:
    """Probability mass ``probs[i]`` at power ``i * step_q`` (MW)."""

    step_q: float
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).ravel()
        if not (self.step_q > 0 and math.isfinite(self.step_q)):
            raise ValueError(f"step_q must be positive and finite, got {self.step_q}")
        if probs.size == 0:
            raise ValueError("a probabilistic sequence needs at least one bin")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = float(probs.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        probs.setflags(write=False)
        object.__setattr__(self, "step_q", float(self.step_q))
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_raw(cls, probs, step_q: float) -> "ProbSeq":
        """Build from raw bin masses, rescaling small summation error away."""
        probs = np.asarray(probs, dtype=float)
        # tiny negative values come from differences of nearly equal CDF values
        probs = np.where((probs < 0) & (probs > -1e-15), 0.0, probs)
        total = float(probs.sum())
        if abs(total - 1.0) > RAW_SUM_TOL:
            raise ValueError(
                f"raw probabilities sum to {total!r}; refusing to renormalize "
                f"an error larger than {RAW_SUM_TOL}"
            )
        return cls(step_q, probs / total)

    @classmethod
    def zero(cls, step_q: float) -> "ProbSeq":
        """Deterministic zero output."""
        return cls(step_q, np.array([1.0]))

    @property
    def n(self) -> int:
        """Index of the last bin (the sequence has ``n + 1`` states)."""
        return self.probs.size - 1

    @property
    def powers(self) -> np.ndarray:
        return np.arange(self.probs.size) * self.step_q

    def cdf(self) -> np.ndarray:
        """``P(X <= i q)`` for each bin index ``i``."""
        return np.cumsum(self.probs)

    def tail(self) -> np.ndarray:
        """``P(X >= i q)`` for each bin index ``i``."""
        return np.cumsum(self.probs[::-1])[::-1]

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class WindParams:
    """Weibull wind speed law plus a piecewise-linear turbine power curve."""

    v_in: float
    v_s: float
    v_out: float
    p_s: float
    shape_m: float
    scale_eps: float

    def __post_init__(self):
        if not (0 < self.v_in < self.v_s < self.v_out):
            raise ValueError(
                f"wind speeds must satisfy 0 < v_in < v_s < v_out, got "
                f"{self.v_in}, {self.v_s}, {self.v_out}"
            )
        if not self.p_s > 0:
            raise ValueError(f"rated power p_s must be positive, got {self.p_s}")
        if not (self.shape_m > 0 and self.scale_eps > 0):
            raise ValueError("Weibull shape and scale must be positive")

    @property
    def h(self) -> float:
        return self.v_s / self.v_in - 1.0

    def power_curve(self, v):
        """Turbine output (MW) for wind speed ``v`` (m/s); vectorized."""
        v = np.asarray(v, dtype=float)
        ramp = (v - self.v_in) / (self.v_s - self.v_in) * self.p_s
        out = np.where((v >= self.v_in) & (v < self.v_s), ramp, 0.0)
        return np.where((v >= self.v_s) & (v < self.v_out), self.p_s, out)

    def speed_cdf(self, v):
        v = np.maximum(np.asarray(v, dtype=float), 0.0)
        return -np.expm1(-((v / self.scale_eps) ** self.shape_m))

    def speed_ppf(self, u):
        """Inverse Weibull CDF."""
        u = np.asarray(u, dtype=float)
        return self.scale_eps * (-np.log1p(-u)) ** (1.0 / self.shape_m)


@dataclass(frozen=True)
class PvParams:
    """Beta-distributed PV output scaled to ``[0, p_max_pv]`` MW."""

    lambda1: float
    lambda2: float
    p_max_pv: float

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("Beta shape parameters must be positive")
        if not self.p_max_pv > 0:
            raise ValueError(f"p_max_pv must be positive, got {self.p_max_pv}")

    @classmethod
    def from_irradiance(cls, lambda1: float, lambda2: float, r_max: float,
                        area: float, efficiency: float) -> "PvParams":
        """Fold peak irradiance (W/m^2), panel area (m^2) and conversion
        efficiency into the peak output in MW."""
        return cls(lambda1, lambda2, r_max * area * efficiency * 1e-6)

    def cdf(self, p):
        x = np.clip(np.asarray(p, dtype=float) / self.p_max_pv, 0.0, 1.0)
        return special.betainc(self.lambda1, self.lambda2, x)

    def pdf(self, p):
        x = np.asarray(p, dtype=float) / self.p_max_pv
        inside = (x > 0) & (x < 1)
        xs = np.where(inside, x, 0.5)
        logpdf = ((self.lambda1 - 1) * np.log(xs) + (self.lambda2 - 1) * np.log1p(-xs)
                  - special.betaln(self.lambda1, self.lambda2))
        return np.where(inside, np.exp(logpdf) / self.p_max_pv, 0.0)

    def ppf(self, u):
        return self.p_max_pv * special.betaincinv(self.lambda1, self.lambda2, np.asarray(u, dtype=float))


def wind_power_cdf(params: WindParams, p: float) -> float:
    """``P(P_wind <= p)``.

    The mass at zero collects calm and storm-shutdown speeds; the jump at the
    rated power is the mass of speeds between rated and cut-out.
    """
    if p < 0:
        return 0.0
    if p >= params.p_s:
        return 1.0
    return _wind_cdf_left(params, p)


def _wind_cdf_left(params: WindParams, p: float) -> float:
    # continuous branch; equals P(P_wind < p) for 0 < p <= p_s
    v = (1.0 + params.h * p / params.p_s) * params.v_in
    below = -math.expm1(-((v / params.scale_eps) ** params.shape_m))
    storm = math.exp(-((params.v_out / params.scale_eps) ** params.shape_m))
    return below + storm


def discretize_wind(params: Optional[WindParams], q: float) -> ProbSeq:
    """Bin the wind power distribution onto the grid with step ``q``.

    Bin ``i`` collects the mass of ``[i q - q/2, i q + q/2)``; the atom at zero
    lands in bin 0 and the atom at rated power in the last bin.  ``None``
    stands for a turbine that cannot produce.
    """
    if not q > 0:
        raise ValueError(f"discretization step must be positive, got {q}")
    if params is None:
        return ProbSeq.zero(q)
    n = math.ceil(params.p_s / q)
    edges = [(i + 0.5) * q for i in range(n)]
    below = np.array([_wind_cdf_left(params, min(e, params.p_s)) for e in edges])
    raw = np.diff(np.concatenate(([0.0], below, [1.0])))
    return ProbSeq.from_raw(raw, q)


def discretize_pv(params: Optional[PvParams], q: float) -> ProbSeq:
    """Bin the PV output distribution onto the grid with step ``q``.

    Bin masses are differences of the regularized incomplete Beta function,
    which stays exact when a shape parameter below one makes the density
    singular at an endpoint.  The last bin runs up to ``p_max_pv``.
    """
    if not q > 0:
        raise ValueError(f"discretization step must be positive, got {q}")
    if params is None:
        return ProbSeq.zero(q)
    n = math.ceil(params.p_max_pv / q)
    edges = (np.arange(n) + 0.5) * q
    inner = params.cdf(edges)
    raw = np.diff(np.concatenate(([0.0], inner, [1.0])))
    return ProbSeq.from_raw(raw, q)


def convolve(a: ProbSeq, b: ProbSeq) -> ProbSeq:
    """Distribution of the sum of two independent sequences.

    ``c[i] = sum_{j+k=i} a[j] b[k]``, accumulated in ascending ``j`` so the
    result is bitwise identical to the literal double loop.
    """
    if a.step_q != b.step_q:
        raise ValueError(f"step mismatch: {a.step_q} vs {b.step_q}")
    pa, pb = a.probs, b.probs
    out = np.zeros(pa.size + pb.size - 1)
    for j in range(pa.size):
        out[j:j + pb.size] += pa[j] * pb
    return ProbSeq(a.step_q, out)


def expectation(s: ProbSeq) -> float:
    return float(np.dot(s.powers, s.probs))


def quantile_reserve(s: ProbSeq, alpha: float, e_t: float) -> float:
    """Smallest reserve ``R >= 0`` with ``P(R >= e_t - X) >= alpha``.

    ``m_alpha`` is the largest grid index whose tail mass still reaches
    ``alpha``; the reserve must cover the shortfall ``e_t - m_alpha q``.
    """
    if not (0 < alpha <= 1):
        raise ValueError(f"confidence level must lie in (0, 1], got {alpha}")
    tail = s.tail()
    m_alpha = int(np.flatnonzero(tail >= alpha - TAIL_TOL)[-1])
    return max(0.0, e_t - m_alpha * s.step_q)
