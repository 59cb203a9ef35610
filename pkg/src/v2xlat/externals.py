"""Internet (PSA UPF to cloud AS) and inter-operator peering latency.

Only a handful of statistics are known for these links, so they are
represented by distributions pinned to those statistics: linear CDF pieces
from a minimum latency up to the lowest percentile anchor (with one interior
knot placed to reproduce the reported mean) and exponential tail pieces
between and beyond the upper anchors.
"""
from __future__ import annotations

import math

import numpy as np

from .dists import Empirical, LatencyDistribution

INTERNET_ANCHORS = ((0.90, 21e-3), (0.9999, 43e-3))
INTERNET_MEAN = 10.3e-3
INTERNET_MIN = 1e-3

PEERING = {
    "local": dict(anchors=((0.90, 0.431e-3), (0.9999, 1.493e-3)), mean=0.306e-3, t_min=0.05e-3),
    "remote": dict(anchors=((0.90, 29.867e-3), (0.9999, 99.212e-3)), mean=13.001e-3, t_min=1e-3),
}


class AnchoredCdf(LatencyDistribution):
    def __init__(self, anchors, mean=None, t_min=0.0):
        anchors = tuple(sorted((float(p), float(t)) for p, t in anchors))
        if not anchors:
            raise ValueError("at least one anchor is required")
        ps = [p for p, _ in anchors]
        ts = [t for _, t in anchors]
        if any(b <= a for a, b in zip(ps, ps[1:])) or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("anchors must be strictly increasing in both percentile and value")
        if not (0.0 < ps[0] and ps[-1] < 1.0):
            raise ValueError("anchor percentiles must lie in (0, 1)")
        if not 0.0 <= t_min < ts[0]:
            raise ValueError("minimum latency must be nonnegative and below the lowest anchor")
        self.anchors = anchors
        self.t_min = float(t_min)
        self.target_mean = mean

        surv = [1.0 - p for p in ps]
        self._rates = [math.log(s0 / s1) / (t1 - t0) for (s0, s1, t0, t1) in zip(surv, surv[1:], ts, ts[1:])]
        if not self._rates:
            # single anchor: tail keeps the slope of the linear piece
            self._rates = [ps[0] / (ts[0] - t_min) / surv[0]]
        else:
            self._rates.append(self._rates[-1])

        upper = 0.0
        for i, (t0, s0) in enumerate(zip(ts, surv)):
            r = self._rates[i]
            if i + 1 < len(ts):
                upper += t0 * s0 - ts[i + 1] * surv[i + 1] + (s0 - surv[i + 1]) / r
            else:
                upper += t0 * s0 + s0 / r

        p1, t1 = anchors[0]
        pk = 0.5 * p1
        if mean is None:
            tk = 0.5 * (t_min + t1)
        else:
            need = mean - upper
            tk = (need - pk * t_min / 2.0 - (p1 - pk) * t1 / 2.0) / (p1 / 2.0)
            eps = 1e-9 * (t1 - t_min)
            tk = min(max(tk, t_min + eps), t1 - eps)
        self._lo_t = np.array([t_min, tk, t1])
        self._lo_F = np.array([0.0, pk, p1])
        self._upper_mean = upper

    def __repr__(self):
        return f"AnchoredCdf(anchors={self.anchors!r}, mean={self.target_mean!r}, t_min={self.t_min!r})"

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self._lo_t, self._lo_F, left=0.0)
        for i, (p0, t0) in enumerate(self.anchors):
            hi = self.anchors[i + 1][1] if i + 1 < len(self.anchors) else np.inf
            seg = (t >= t0) & (t < hi)
            out = np.where(seg, 1.0 - (1.0 - p0) * np.exp(-self._rates[i] * (t - t0)), out)
        return out

    def mean(self):
        lo = self._lo_t
        F = self._lo_F
        return float(np.sum(np.diff(F) * 0.5 * (lo[1:] + lo[:-1])) + self._upper_mean)

    def percentile(self, p):
        if not 0.0 < p < 1.0:
            raise ValueError(f"percentile level must be in (0, 1), got {p}")
        for q, t in self.anchors:
            if p == q:
                return t
        p1 = self.anchors[0][0]
        if p <= p1:
            return float(np.interp(p, self._lo_F, self._lo_t))
        i = max(k for k, (q, _) in enumerate(self.anchors) if q < p)
        q, t = self.anchors[i]
        return t + math.log((1.0 - q) / (1.0 - p)) / self._rates[i]

    @property
    def lower(self):
        return self.t_min

    def scaled(self, k):
        mean = None if self.target_mean is None else self.target_mean * k
        return AnchoredCdf([(p, t * k) for p, t in self.anchors], mean, self.t_min * k)

    def shifted(self, d):
        mean = None if self.target_mean is None else self.target_mean + d
        return AnchoredCdf([(p, t + d) for p, t in self.anchors], mean, self.t_min + d)


def cdf_from_csv(path):
    """Distribution through digitized points of a two-column CSV (t_ms, F)."""
    data = np.genfromtxt(path, delimiter=",", comments="#", dtype=float)
    if data.ndim == 1 or np.isnan(data[0]).any():
        data = np.genfromtxt(path, delimiter=",", comments="#", dtype=float, skip_header=1)
    data = np.atleast_2d(data)
    return Empirical(data[:, 0] * 1e-3, data[:, 1])


def internet_latency(mode="round-trip", cdf_csv=None):
    """UPF to cloud AS latency.  ``one-way`` halves the round trip."""
    if mode not in ("round-trip", "one-way"):
        raise ValueError("mode must be 'round-trip' or 'one-way'")
    dist = cdf_from_csv(cdf_csv) if cdf_csv else AnchoredCdf(INTERNET_ANCHORS, INTERNET_MEAN, INTERNET_MIN)
    if mode == "one-way":
        if isinstance(dist, Empirical):
            return Empirical(dist.t * 0.5, dist.F)
        return dist.scaled(0.5)
    return dist


def peering_latency(kind="local", cdf_csv=None):
    if kind not in PEERING:
        raise ValueError("peering kind must be 'local' or 'remote'")
    if cdf_csv:
        return cdf_from_csv(cdf_csv)
    spec = PEERING[kind]
    return AnchoredCdf(spec["anchors"], spec["mean"], spec["t_min"])
