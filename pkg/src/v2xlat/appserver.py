"""V2X application server latency and processor dimensioning.

The AS forwards every packet it receives.  Over one radio slot ``t_tt`` it
accumulates ``eta = lambda_AS * t_tt`` packets, each costing ``B * theta``
cycles with theta in cycles/bit, so the time to clear a slot's worth of
traffic is ``eta * B * theta / F``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dists import Deterministic, ShiftedExponential, Uniform
from .transport import gnbs_served


@dataclass(frozen=True)
class AsLoad:
    lam_ul: float
    eta: float
    capacity: float
    aggregated_gnbs: int
    packet_bits: float
    theta_mean: float

    @property
    def mean_latency(self):
        """Forwarding cost of one slot's arrivals, seconds (uses the mean theta)."""
        return self.eta * self.packet_bits * self.theta_mean / self.capacity


def aggregated_gnbs(scenario):
    agg = scenario.as_profile.aggregated_gnbs
    if agg is not None:
        return int(agg)
    return gnbs_served(scenario)


def as_load(scenario):
    prof = scenario.as_profile
    agg = aggregated_gnbs(scenario)
    lam = scenario.traffic.arrival_rate * agg
    return AsLoad(lam, lam * prof.t_tt, prof.capacity, agg, scenario.traffic.packet_bits, prof.THETA_MEAN)


def _shape(mean, theta_model):
    if mean == 0.0:
        return Deterministic(0.0)
    if theta_model == "exponential":
        return ShiftedExponential(0.0, mean)
    # theta ~ U(100, 300) is mean * U(1/2, 3/2)
    return Uniform(0.5 * mean, 1.5 * mean)


def forwarding_mean(scenario):
    return as_load(scenario).mean_latency


def as_latency(scenario, model=None):
    """AS latency distribution.

    ``model`` overrides the profile's ``latency_model``: "forwarder" uses the
    configured hardware, "slot-bound" fixes the mean at ``t_tt``.
    """
    prof = scenario.as_profile
    model = model or prof.latency_model
    if model == "slot-bound":
        mean = prof.t_tt if scenario.traffic.arrival_rate > 0 else 0.0
    elif model == "forwarder":
        mean = forwarding_mean(scenario)
    else:
        raise ValueError(f"unknown AS latency model {model!r}")
    return _shape(mean, prof.theta_model)


@dataclass(frozen=True)
class BacklogStatus:
    backlogged: bool
    mean: float
    limit: float

    def __str__(self):
        if self.backlogged:
            return f"backlogged (mean {self.mean * 1e3:.4g} ms > {self.limit * 1e3:g} ms)"
        return "stable"


def backlog_check(scenario):
    """Whether the configured hardware clears a slot's arrivals within the slot."""
    mean = forwarding_mean(scenario)
    limit = scenario.as_profile.t_tt
    return BacklogStatus(mean > limit, mean, limit)


def min_processors(scenario):
    """Fewest processors whose forwarding mean stays within one slot."""
    prof = scenario.as_profile
    per_proc = prof.parallel_units * prof.frequency
    # eta * B * theta / (n * per_proc) <= t_tt, and eta = lam * t_tt
    need = as_load(scenario).lam_ul * scenario.traffic.packet_bits * prof.THETA_MEAN / per_proc
    n = max(1, math.ceil(need))
    if n > 1 and (n - 1) >= need:
        n -= 1
    return n
