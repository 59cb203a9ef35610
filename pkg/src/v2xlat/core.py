"""Core network latency: UPFs modeled as M/D/1 queues.

MEC deployments cross a single local UPF per direction.  The centralized
deployment crosses two gateway UPFs (queuing) plus ``S`` intermediate
switching nodes (processing and transmission only) over ``d_cn`` km.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dists import MD1Transit, convolve_all, md1_transit_mean
from .scenario import DeploymentKind
from .transport import insufficient_alpha, upf_uplink_rate

# UPF transit is sub-microsecond: a coarser grid keeps percentile error far
# below anything visible in the end-to-end total.
CN_GRID_POINTS = 2048


@dataclass(frozen=True)
class CnPath:
    deployment: DeploymentKind
    lam_ul: float
    lam_dl: float
    mu_ul: float
    mu_dl: float
    S: int
    d_cn: float
    link_capacity: float

    @property
    def rho_ul(self):
        return self.lam_ul / self.mu_ul

    @property
    def rho_dl(self):
        return self.lam_dl / self.mu_dl


def intermediate_nodes(d_cn, d_cn_max):
    return max(int(math.floor(d_cn / d_cn_max)) - 1, 0)


def cn_rates(scenario):
    topo = scenario.topology
    B = scenario.traffic.packet_bits
    lam_ul = upf_uplink_rate(scenario)
    lam_dl = scenario.traffic.copies * lam_ul
    if scenario.deployment is DeploymentKind.CENTRALIZED:
        cap, S, d = topo.c_cn, intermediate_nodes(topo.d_cn, topo.d_cn_max), topo.d_cn
    else:
        cap, S, d = topo.c_upf_as, 0, 0.0
    return CnPath(
        deployment=scenario.deployment,
        lam_ul=lam_ul,
        lam_dl=lam_dl,
        mu_ul=scenario.alpha.ul * cap / B,
        mu_dl=scenario.alpha.dl * cap / B,
        S=S,
        d_cn=d,
        link_capacity=cap,
    )


def _check(path):
    bad = [(n, r) for n, r in (("UPF/UL", path.rho_ul), ("UPF/DL", path.rho_dl)) if r >= 1.0]
    if bad:
        raise insufficient_alpha(bad)


def cn_transit_mean(path, direction):
    """Mean one-way transit (no propagation)."""
    lam, mu = (path.lam_ul, path.mu_ul) if direction == "UL" else (path.lam_dl, path.mu_dl)
    local = md1_transit_mean(lam, mu, f"UPF/{direction}")
    if path.deployment is DeploymentKind.CENTRALIZED:
        return 2.0 * local + 2.0 / mu * path.S
    return local


def cn_mean(scenario):
    """Round-trip mean including propagation."""
    path = cn_rates(scenario)
    _check(path)
    prop = 2.0 * path.d_cn / scenario.topology.v
    return prop + cn_transit_mean(path, "UL") + cn_transit_mean(path, "DL")


def cn_latency(scenario):
    """Round-trip core latency distribution."""
    path = cn_rates(scenario)
    _check(path)
    lu, mu_u, ld, mu_d = path.lam_ul, path.mu_ul, path.lam_dl, path.mu_dl
    if path.deployment is not DeploymentKind.CENTRALIZED:
        return convolve_all([MD1Transit(lu, mu_u, 2.0 / mu_u), MD1Transit(ld, mu_d, 2.0 / mu_d)],
                            points=CN_GRID_POINTS)
    # two queuing gateways per direction; intermediates add 2/mu each
    fixed = 2.0 * path.d_cn / scenario.topology.v
    fixed += (4.0 + 2.0 * path.S) * (1.0 / mu_u + 1.0 / mu_d)
    return convolve_all([
        MD1Transit(lu, mu_u, fixed),
        MD1Transit(lu, mu_u),
        MD1Transit(ld, mu_d),
        MD1Transit(ld, mu_d),
    ], points=CN_GRID_POINTS)
