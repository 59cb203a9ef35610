"""Transport network (gNB, M1, M2, M3) latency.

Each node is an M/M/1 queue whose service rate is the V2X share of its
outgoing link.  Uplink rates aggregate over the fan-in; downlink rates split
over the children of each multiplexing node.
"""
from __future__ import annotations

from dataclasses import dataclass

from .dists import (
    Deterministic,
    InstabilityError,
    ShiftedExponential,
    convolve_all,
)
from .scenario import DeploymentKind

# Nodes traversed per direction, in path order.
_PATH = {
    DeploymentKind.MEC_GNB: ("gNB",),
    DeploymentKind.MEC_M1: ("gNB", "M1"),
    DeploymentKind.MEC_CN: ("gNB", "M1", "M2", "M3"),
    DeploymentKind.CENTRALIZED: ("gNB", "M1", "M2", "M3"),
}


@dataclass(frozen=True)
class NodeRates:
    node: str
    direction: str  # "UL" or "DL"
    lam: float
    mu: float
    link_capacity: float

    @property
    def rho(self):
        return self.lam / self.mu

    @property
    def stable(self):
        return self.rho < 1.0

    @property
    def name(self):
        return f"{self.node}/{self.direction}"


def path_nodes(deployment):
    return _PATH[DeploymentKind.parse(deployment)]


def tn_distance(scenario):
    """One-way distance through the transport network, km."""
    topo = scenario.topology
    nodes = path_nodes(scenario.deployment)
    d = 0.0
    if "M1" in nodes:
        d += topo.d_gnb_m1
    if "M3" in nodes:
        d += topo.d_m1_m2 + topo.d_m2_m3
    return d


def tn_shift(scenario):
    """Round-trip (propagation, processing) delays in seconds."""
    topo = scenario.topology
    n = len(path_nodes(scenario.deployment))
    return 2.0 * tn_distance(scenario) / topo.v, 2 * n * topo.t_p


def gnbs_served(scenario, node=None):
    """gNBs whose uplink traffic reaches ``node`` (default: the path's last node)."""
    topo = scenario.topology
    node = node or path_nodes(scenario.deployment)[-1]
    return {"gNB": 1, "M1": topo.g, "M2": topo.gnbs_per_m2, "M3": topo.gnbs_per_m3}[node]


def uplink_aggregate(scenario, node):
    """Uplink arrival rate at ``node`` (packets/s)."""
    return scenario.traffic.arrival_rate * gnbs_served(scenario, node)


def upf_uplink_rate(scenario):
    """Rate reaching the UPF (and the AS): the aggregate of the attach node."""
    return uplink_aggregate(scenario, path_nodes(scenario.deployment)[-1])


def _tagged_share(traffic, node, fan_out):
    # the busiest child link is the one reported
    return max(traffic.split(node, fan_out))


def tn_rates(scenario):
    """Arrival and service rates of every transport node on the path.

    Uplink nodes first (gNB outward), then downlink nodes (toward the gNB).
    Stability is not enforced here.
    """
    topo = scenario.topology
    traffic = scenario.traffic
    B = traffic.packet_bits
    a_ul, a_dl = scenario.alpha.ul, scenario.alpha.dl
    nodes = path_nodes(scenario.deployment)

    out_link = {"gNB": topo.c_gnb_m1, "M1": topo.c_m1_m2, "M2": topo.c_m2_m3, "M3": topo.c_cn}
    rates = [
        NodeRates(n, "UL", uplink_aggregate(scenario, n), a_ul * out_link[n] / B, out_link[n])
        for n in nodes
    ]

    # downlink: rooted at the UPF, M copies per uplink packet
    lam = traffic.copies * upf_uplink_rate(scenario)
    down_link = {"M3": topo.c_m2_m3, "M2": topo.c_m1_m2, "M1": topo.c_gnb_m1}
    fan_out = {"M3": topo.m2, "M2": topo.m1, "M1": topo.g}
    for n in reversed(nodes):
        if n == "gNB":
            continue  # gNB only processes in the downlink
        lam = _tagged_share(traffic, n, fan_out[n]) * lam
        rates.append(NodeRates(n, "DL", lam, a_dl * down_link[n] / B, down_link[n]))
    return rates


def downlink_flow(scenario, node):
    """(arrival at ``node``, per-child rates) for a splitting node; used to
    check that downlink traffic is conserved."""
    topo = scenario.topology
    fan_out = {"M3": topo.m2, "M2": topo.m1, "M1": topo.g}
    order = [n for n in reversed(path_nodes(scenario.deployment)) if n != "gNB"]
    lam = scenario.traffic.copies * upf_uplink_rate(scenario)
    for n in order:
        if n == node:
            return lam, tuple(p * lam for p in scenario.traffic.split(n, fan_out[n]))
        lam *= _tagged_share(scenario.traffic, n, fan_out[n])
    raise KeyError(f"{node} does not split traffic in {scenario.deployment.value}")


def insufficient_alpha(bad):
    """InstabilityError for ``(name, rho)`` pairs of overloaded nodes."""
    return InstabilityError(bad, "this alpha is not sufficient to support the V2X traffic: "
                            + ", ".join(f"{n} rho={rho:.4g}" for n, rho in bad))


def check_stable(rates):
    bad = [(r.name, r.rho) for r in rates if not r.stable]
    if bad:
        raise insufficient_alpha(bad)


def tn_latency(scenario):
    """Round-trip (UL + DL) transport latency distribution.

    The deterministic part (propagation and per-node processing) is the
    shift; the queuing and transmission terms of all nodes are lumped into a
    single exponential whose mean is the sum of the per-node M/M/1 sojourns.
    With ``tn_model="hypoexponential"`` the per-node exponentials are
    convolved instead.
    """
    rates = tn_rates(scenario)
    check_stable(rates)
    prop, proc = tn_shift(scenario)
    sojourns = [1.0 / (r.mu - r.lam) for r in rates]
    if scenario.tn_model == "hypoexponential":
        return convolve_all([Deterministic(prop + proc)] + [ShiftedExponential(0.0, s) for s in sojourns])
    return ShiftedExponential(prop + proc, sum(sojourns))
