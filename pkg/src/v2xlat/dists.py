"""Latency distributions and the closed-form queuing formulas behind them.

All times are in seconds.  Every distribution exposes ``cdf``, ``mean``,
``percentile`` and ``lower`` (left end of the support), which is all the
composition code needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve
from scipy.special import gammaln

#: Upper bound on the convolution grid step.
MAX_STEP = 10e-6
#: Tail mass that may be left beyond the convolution horizon.
TAIL_MASS = 1e-6
#: Grid points spanned by the random part of a convolution.
GRID_POINTS = 16384

# Above this absolute term mass the alternating M/D/1 sum loses more than
# ~1e-11 to cancellation; the exponential tail is exact to that level there.
_MD1_SUM_LIMIT = 1e5
_MD1_TERMS = 100


class InstabilityError(ValueError):
    """Raised when a queue has utilization >= 1.

    ``nodes`` lists ``(name, rho)`` for every offending node.
    """

    def __init__(self, nodes, message=None):
        self.nodes = list(nodes)
        if message is None:
            parts = ", ".join(f"{name} (rho={rho:.4g})" for name, rho in self.nodes)
            message = f"unstable queue(s): {parts}; packets never depart"
        super().__init__(message)


class HorizonError(RuntimeError):
    def __init__(self, tail):
        self.tail = tail
        super().__init__(f"convolution horizon exhausted with tail mass {tail:.3g} left")


class UnsupportedPercentileError(ValueError):
    pass


def _check_stable(lam, mu, name="queue"):
    if lam < 0 or mu <= 0:
        raise ValueError(f"{name}: need lam >= 0 and mu > 0 (got lam={lam}, mu={mu})")
    if lam >= mu:
        raise InstabilityError([(name, lam / mu)])


def mm1_sojourn_mean(lam, mu, name="queue"):
    """Mean time in an M/M/1 node (waiting plus service): 1/(mu - lam)."""
    _check_stable(lam, mu, name)
    return 1.0 / (mu - lam)


def md1_transit_mean(lam, mu, name="queue"):
    """Mean transit through an M/D/1 UPF: ``2/mu`` of processing and
    transmission plus the Pollaczek-Khinchine queuing term."""
    _check_stable(lam, mu, name)
    rho = lam / mu
    return 2.0 / mu + lam / (2.0 * mu * mu * (1.0 - rho))


def md1_wait_mean(lam, mu):
    _check_stable(lam, mu)
    rho = lam / mu
    return lam / (2.0 * mu * mu * (1.0 - rho))


def _md1_decay(lam, mu):
    """Exponential tail constants (C, gamma) with P(W > t) ~ C exp(-gamma t)."""
    D = 1.0 / mu
    rho = lam * D

    def f(g):
        return lam * math.expm1(g * D) - g

    hi = 1.0 / D
    while f(hi) <= 0:
        hi *= 2.0
    g = brentq(f, 1e-12 / D, hi, xtol=1e-15 / D, rtol=1e-14)
    C = (1.0 - rho) / (lam * D * math.exp(g * D) - 1.0)
    return C, g


def md1_wait_cdf(lam, mu, t):
    """P(W <= t) for the FIFO M/D/1 waiting time.

    Uses the finite alternating sum
    ``(1-rho) * sum_{j<=t/D} [lam (jD - t)]^j / j! * exp(-lam (jD - t))``
    evaluated term-wise in log space.  Where the terms grow large enough for
    cancellation to matter the exponential tail asymptote takes over; at that
    point the two agree to ~1e-11.
    """
    _check_stable(lam, mu)
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    out = np.zeros_like(t_arr)
    if lam == 0:
        out[t_arr >= 0] = 1.0
        return float(out[0]) if scalar else out

    D = 1.0 / mu
    rho = lam * D
    pos = t_arr >= 0
    # lam*t beyond ~12 is always past the switch-over; skip the sum there
    near = pos & (lam * t_arr <= 12.0)
    far = pos & ~near
    idx = np.flatnonzero(near)
    for start in range(0, idx.size, 2048):
        sel = idx[start:start + 2048]
        tt = t_arr[sel]
        k = np.floor(tt / D).astype(int)
        # with lam*t <= 12 every term beyond j = 100 is below exp(-60)
        j = np.arange(min(k.max(), _MD1_TERMS) + 1)
        x = lam * (tt[:, None] - j[None, :] * D)
        live = (j[None, :] <= k[:, None]) & (x >= 0)
        xs = np.where(x > 0, x, 1.0)
        logterm = j[None, :] * np.log(xs) - gammaln(j + 1)[None, :] + np.where(live, x, 0.0)
        term = np.where(live, np.exp(np.where(live, logterm, -np.inf)), 0.0)
        term[(x <= 0) & (j[None, :] > 0)] = 0.0
        signed = np.where(j % 2 == 0, term, -term)
        total = signed.sum(axis=1)
        mass = term.sum(axis=1)
        vals = (1.0 - rho) * total
        bad = mass > _MD1_SUM_LIMIT
        out[sel[~bad]] = vals[~bad]
        far[sel[bad]] = True
    if far.any():
        C, g = _md1_decay(lam, mu)
        out[far] = 1.0 - C * np.exp(-g * t_arr[far])
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out


def md1_wait_quantile(lam, mu, p):
    _check_stable(lam, mu)
    rho = lam / mu
    if p <= 1.0 - rho:
        return 0.0
    D = 1.0 / mu
    hi = D
    while md1_wait_cdf(lam, mu, hi) < p:
        hi *= 2.0
    return brentq(lambda x: md1_wait_cdf(lam, mu, x) - p, 0.0, hi, xtol=D * 1e-10)


@dataclass(frozen=True)
class PercentileTriple:
    """Mean, 90th and 99.99th percentile.  A field is None when unknown."""

    mean: float | None
    p90: float | None
    p9999: float | None

    def at(self, level):
        if level == "mean":
            return self.mean
        if level == "p90":
            return self.p90
        if level == "p9999":
            return self.p9999
        raise KeyError(level)

    def scaled(self, k):
        return PercentileTriple(*(None if v is None else v * k for v in (self.mean, self.p90, self.p9999)))


def level_for(p):
    """Name of the triple field matching a reliability percentile, or None."""
    if math.isclose(p, 0.90, abs_tol=1e-12):
        return "p90"
    if math.isclose(p, 0.9999, abs_tol=1e-12):
        return "p9999"
    return None


class LatencyDistribution:
    """Base class.  Subclasses implement ``cdf``, ``mean``, ``percentile`` and ``lower``."""

    def cdf(self, t):
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def percentile(self, p):
        raise NotImplementedError

    @property
    def lower(self):
        raise NotImplementedError

    def shifted(self, d):
        """The distribution of X + d."""
        raise NotImplementedError

    def triple(self):
        return PercentileTriple(self.mean(), self.percentile(0.90), self.percentile(0.9999))

    def _upper(self, tail):
        return self.percentile(1.0 - tail)


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise ValueError(f"percentile level must be in (0, 1), got {p}")


@dataclass(frozen=True)
class Deterministic(LatencyDistribution):
    value: float

    def cdf(self, t):
        return np.where(np.asarray(t, dtype=float) >= self.value, 1.0, 0.0)

    def mean(self):
        return self.value

    def percentile(self, p):
        _check_p(p)
        return self.value

    @property
    def lower(self):
        return self.value

    def shifted(self, d):
        return Deterministic(self.value + d)


@dataclass(frozen=True)
class ShiftedExponential(LatencyDistribution):
    """``shift + Exp(mean_excess)``; the transport-network latency shape."""

    shift: float
    mean_excess: float

    def __post_init__(self):
        if self.shift < 0 or self.mean_excess < 0:
            raise ValueError("shift and mean_excess must be nonnegative")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.mean_excess == 0:
            return np.where(t >= self.shift, 1.0, 0.0)
        z = np.maximum(t - self.shift, 0.0)
        return np.where(t >= self.shift, -np.expm1(-z / self.mean_excess), 0.0)

    def mean(self):
        return self.shift + self.mean_excess

    def percentile(self, p):
        _check_p(p)
        return self.shift - self.mean_excess * math.log1p(-p)

    @property
    def lower(self):
        return self.shift

    def shifted(self, d):
        return ShiftedExponential(self.shift + d, self.mean_excess)


@dataclass(frozen=True)
class Uniform(LatencyDistribution):
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("Uniform needs lo <= hi")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.hi == self.lo:
            return np.where(t >= self.lo, 1.0, 0.0)
        return np.clip((t - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def percentile(self, p):
        _check_p(p)
        return self.lo + p * (self.hi - self.lo)

    @property
    def lower(self):
        return self.lo

    def _upper(self, tail):
        return self.hi

    def shifted(self, d):
        return Uniform(self.lo + d, self.hi + d)


@dataclass(frozen=True)
class MD1Transit(LatencyDistribution):
    """Deterministic part plus the waiting time of an M/D/1 queue with
    service time ``1/mu``.  Used for UPF transit with ``deterministic_extra``
    carrying the ``2/mu`` processing/transmission term."""

    lam: float
    mu: float
    deterministic_extra: float = 0.0

    def __post_init__(self):
        _check_stable(self.lam, self.mu, "UPF")

    def cdf(self, t):
        return md1_wait_cdf(self.lam, self.mu, np.asarray(t, dtype=float) - self.deterministic_extra)

    def mean(self):
        return self.deterministic_extra + md1_wait_mean(self.lam, self.mu)

    def percentile(self, p):
        _check_p(p)
        return self.deterministic_extra + md1_wait_quantile(self.lam, self.mu, p)

    @property
    def lower(self):
        return self.deterministic_extra

    def _upper(self, tail):
        # start from the exponential tail and widen until the mass is covered
        if self.lam == 0:
            return self.deterministic_extra
        C, g = _md1_decay(self.lam, self.mu)
        t = max(math.log(max(C, tail) / tail) / g, 1.0 / self.mu)
        while md1_wait_cdf(self.lam, self.mu, t) < 1.0 - tail:
            t *= 1.25
        return self.deterministic_extra + t

    def shifted(self, d):
        return MD1Transit(self.lam, self.mu, self.deterministic_extra + d)


@dataclass(frozen=True, eq=False)
class Empirical(LatencyDistribution):
    """CDF known on a grid of points; linear in between, 0 before the first
    point and 1 after the last.

    ``mean_hint`` carries an exactly known mean (e.g. the sum of the means of
    convolved parts); otherwise the mean is integrated from the grid.
    """

    t: np.ndarray
    F: np.ndarray
    mean_hint: float | None = field(default=None)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        F = np.asarray(self.F, dtype=float)
        if t.shape != F.shape or t.ndim != 1 or t.size == 0:
            raise ValueError("grid and CDF values must be equal-length 1-D arrays")
        if np.any(np.diff(t) < 0) or np.any(np.diff(F) < -1e-12):
            raise ValueError("grid and CDF must be nondecreasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "F", np.clip(F, 0.0, 1.0))

    @classmethod
    def from_csv(cls, path):
        """Two-column CSV (t_seconds, F); a header line is skipped if present."""
        data = np.genfromtxt(path, delimiter=",", comments="#", dtype=float)
        if data.ndim == 1 or np.isnan(data[0]).any():
            data = np.genfromtxt(path, delimiter=",", comments="#", dtype=float, skip_header=1)
        data = np.atleast_2d(data)
        return cls(data[:, 0], data[:, 1])

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.t[0], 0.0, np.interp(t, self.t, self.F, left=0.0, right=1.0))

    def mean(self):
        if self.mean_hint is not None:
            return self.mean_hint
        # atom at t[0] plus the integral of the survival function over the grid
        surv = 1.0 - self.F
        return float(self.t[0] + np.sum(0.5 * (surv[1:] + surv[:-1]) * np.diff(self.t)))

    def percentile(self, p):
        _check_p(p)
        i = int(np.searchsorted(self.F, p, side="left"))
        if i == 0:
            return float(self.t[0])
        if i >= self.F.size:
            return float(self.t[-1])
        f0, f1 = self.F[i - 1], self.F[i]
        if f1 <= f0:
            return float(self.t[i])
        return float(self.t[i - 1] + (p - f0) / (f1 - f0) * (self.t[i] - self.t[i - 1]))

    @property
    def lower(self):
        return float(self.t[0])

    def _upper(self, tail):
        return float(self.t[-1])

    def shifted(self, d):
        hint = None if self.mean_hint is None else self.mean_hint + d
        return Empirical(self.t + d, self.F, hint)


@dataclass(frozen=True)
class Tabulated(LatencyDistribution):
    """Only a mean and the two reported percentiles are known."""

    mean_value: float | None
    p90: float | None
    p9999: float | None

    def __post_init__(self):
        vals = [v for v in (self.mean_value, self.p90, self.p9999) if v is not None]
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("Tabulated requires mean <= p90 <= p9999")

    def mean(self):
        if self.mean_value is None:
            raise UnsupportedPercentileError("mean not tabulated")
        return self.mean_value

    def percentile(self, p):
        level = level_for(p)
        value = None if level is None else getattr(self, level)
        if value is None:
            raise UnsupportedPercentileError(f"percentile {p} is not tabulated")
        return value

    def triple(self):
        return PercentileTriple(self.mean_value, self.p90, self.p9999)

    def surrogate(self):
        """Shifted exponential matching the known statistics.

        Both percentiles when available, otherwise the mean and whichever
        percentile is present.
        """
        if self.p90 is not None and self.p9999 is not None:
            m = (self.p9999 - self.p90) / math.log(1000.0)
            s = self.p90 - m * math.log(10.0)
        elif self.mean_value is not None and (self.p90 is not None or self.p9999 is not None):
            q, p = (self.p90, 0.9) if self.p90 is not None else (self.p9999, 0.9999)
            m = (q - self.mean_value) / (-math.log1p(-p) - 1.0)
            s = self.mean_value - m
        else:
            raise UnsupportedPercentileError("not enough statistics for a surrogate")
        if s < 0:
            s = 0.0
            q, p = (self.p90, 0.9) if self.p90 is not None else (self.p9999, 0.9999)
            m = q / -math.log1p(-p)
        return ShiftedExponential(max(s, 0.0), max(m, 0.0))

    @property
    def lower(self):
        return self.surrogate().lower

    def cdf(self, t):
        return self.surrogate().cdf(t)

    def shifted(self, d):
        return self.surrogate().shifted(d)


def _horizon(d, tail):
    lo = d.lower
    try:
        return d._upper(tail)
    except UnsupportedPercentileError:
        pass
    width = max(abs(lo), 1e-9)
    for _ in range(80):
        hi = lo + width
        if float(d.cdf(hi)) >= 1.0 - tail:
            return hi
        width *= 2.0
    raise HorizonError(1.0 - float(d.cdf(lo + width)))


def _as_dist(d):
    return d.surrogate() if isinstance(d, Tabulated) else d


def convolve(a, b, step=None, tail=TAIL_MASS, points=GRID_POINTS):
    """Distribution of the sum of two independent latencies.

    Deterministic parts are added exactly.  Otherwise both CDFs are sampled on
    a shared uniform grid over the random parts (step at most ``MAX_STEP``,
    refined so the span holds ``points`` steps) and combined with a midpoint
    rule: mass of ``a`` in each cell is paired with the CDF of ``b`` at the
    cell midpoint.  The grid reaches until both CDFs are within ``tail`` of 1.
    """
    a, b = _as_dist(a), _as_dist(b)
    if isinstance(a, Deterministic):
        return b.shifted(a.value)
    if isinstance(b, Deterministic):
        return a.shifted(b.value)

    lo_a, lo_b = a.lower, b.lower
    span = (_horizon(a, tail) - lo_a) + (_horizon(b, tail) - lo_b)
    if span <= 0:
        return Deterministic(lo_a + lo_b)
    h = step if step is not None else min(MAX_STEP, span / points)
    n = int(math.ceil(span / h)) + 1
    grid = np.arange(n + 1) * h

    Fa = np.asarray(a.cdf(lo_a + grid), dtype=float)
    pa0 = Fa[0]
    pa = np.diff(Fa)
    Fb = np.asarray(b.cdf(lo_b + grid), dtype=float)
    Fb_mid = np.asarray(b.cdf(lo_b + grid[:-1] + 0.5 * h), dtype=float)

    F = pa0 * Fb
    if n > 0:
        conv = fftconvolve(pa, Fb_mid)[:n] if n > 64 else np.convolve(pa, Fb_mid)[:n]
        F[1:] += conv
    F = np.maximum.accumulate(np.clip(F, 0.0, 1.0))

    try:
        hint = a.mean() + b.mean()
    except UnsupportedPercentileError:
        hint = None
    return Empirical(lo_a + lo_b + grid, F, hint)


def convolve_all(dists, **kw):
    dists = list(dists)
    if not dists:
        return Deterministic(0.0)
    out = dists[0]
    for d in dists[1:]:
        out = convolve(out, d, **kw)
    return out


def percentile(d, p):
    return d.percentile(p)
