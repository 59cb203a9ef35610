"""Discrete-event simulation of FIFO queue chains.

Each node is a single FIFO server.  The observed ("tagged") packets enter as
a Poisson stream; a node may also carry Poisson cross traffic that merges
with the tagged packets, queues with them and then leaves the chain.  Waiting
times follow the Lindley recursion, evaluated for a whole run at once as a
reflected random walk.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import cn_latency, cn_rates, intermediate_nodes
from .dists import Empirical, PercentileTriple, convolve
from .scenario import DeploymentKind
from .transport import tn_latency, tn_rates, tn_shift

#: Nodes whose cross traffic exceeds this multiple of the tagged rate are
#: simulated on their own stream (their sojourn is then independent of the
#: other nodes, as in a Jackson network).
MAX_CROSS_RATIO = 64.0


@dataclass(frozen=True)
class NodeSpec:
    discipline: str  # "exp" or "det"
    rate: float  # service rate, 1/s (0 for a pure delay)
    extra: float = 0.0  # deterministic delay added after service, s
    cross_rate: float = 0.0  # Poisson cross traffic sharing the server, 1/s
    isolated: bool = False
    name: str = ""

    @property
    def delay_only(self):
        return self.rate == 0.0


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_packets: int
    lam: float
    chain: tuple
    warmup: int | None = None  # default 10% of n_packets
    record: str = "latency"  # or "wait": queuing time only

    @property
    def warmup_count(self):
        return self.n_packets // 10 if self.warmup is None else self.warmup

    def violations(self):
        out = []
        if self.n_packets <= self.warmup_count or self.warmup_count < 0:
            out.append(("n_packets", "need n_packets > warmup >= 0"))
        if self.record not in ("latency", "wait"):
            out.append(("record", "must be 'latency' or 'wait'"))
        if self.lam < 0:
            out.append(("lam", "arrival rate must be >= 0"))
        for i, node in enumerate(self.chain):
            if node.discipline not in ("exp", "det"):
                out.append((f"chain[{i}].discipline", "must be 'exp' or 'det'"))
            if node.rate < 0 or node.extra < 0 or node.cross_rate < 0:
                out.append((f"chain[{i}]", "rates and delays must be >= 0"))
        return out

    def utilizations(self):
        return [
            (n.name or f"node{i}", 0.0 if n.delay_only else (self.lam + n.cross_rate) / n.rate)
            for i, n in enumerate(self.chain)
        ]


@dataclass(frozen=True, eq=False)
class SimResult:
    samples: np.ndarray = field(repr=False)
    converged: bool = True
    unstable_by_design: bool = False
    note: str = ""

    @property
    def n(self):
        return int(self.samples.size)

    @property
    def mean(self):
        return float(self.samples.mean()) if self.n else None

    def percentile(self, p):
        if not self.n:
            return None
        return float(np.quantile(self.samples, p, method="inverted_cdf"))

    @property
    def p90(self):
        return self.percentile(0.90)

    @property
    def p9999(self):
        return self.percentile(0.9999)

    def triple(self):
        return PercentileTriple(self.mean, self.p90, self.p9999)

    def cdf(self):
        """Empirical CDF (steps drawn as a fine staircase)."""
        if not self.n:
            raise ValueError("no samples")
        t = np.sort(self.samples)
        F = np.arange(1, t.size + 1) / t.size
        return Empirical(t, F)

    def ks_distance(self, cdf):
        """Kolmogorov-Smirnov distance to a model CDF ``cdf(t)``; atoms in
        either distribution are handled by comparing left limits too."""
        u, counts = np.unique(self.samples, return_counts=True)
        right = np.cumsum(counts) / self.n
        left = right - counts / self.n
        model = np.asarray(cdf(u), dtype=float)
        model_left = np.asarray(cdf(np.nextafter(u, -np.inf)), dtype=float)
        return float(max(np.max(np.abs(right - model)), np.max(np.abs(left - model_left))))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["packet", "latency_s"])
            for i, x in enumerate(self.samples):
                w.writerow([i, repr(float(x))])


def fifo_waits(arrivals, service):
    """Waiting times at a FIFO single server fed in arrival order (empty at start)."""
    if arrivals.size == 0:
        return arrivals.copy()
    x = np.empty_like(arrivals)
    x[0] = 0.0
    x[1:] = service[:-1] - np.diff(arrivals)
    walk = np.cumsum(x)
    return walk - np.minimum.accumulate(np.minimum(walk, 0.0))


def fifo_departures(arrivals, service):
    return arrivals + fifo_waits(arrivals, service) + service


def _service(rng, node, n):
    if node.discipline == "det":
        return np.full(n, 1.0 / node.rate)
    return rng.exponential(1.0 / node.rate, n)


def _poisson_times(rng, lam, n):
    return np.cumsum(rng.exponential(1.0 / lam, n))


def _pass_node(rng, node, arrivals, lam):
    """(exit times, sojourns, waiting times) of the tagged packets at one node."""
    n = arrivals.size
    if node.delay_only:
        return arrivals + node.extra, np.full(n, node.extra), np.zeros(n)
    if node.isolated:
        # own stream at the node's total rate; waits paired with tagged packets
        own = _poisson_times(rng, lam + node.cross_rate, n)
        serv = _service(rng, node, n)
        wait = fifo_waits(own, serv)
    elif node.cross_rate > 0:
        horizon = arrivals[-1]
        m = rng.poisson(node.cross_rate * horizon)
        cross = np.sort(rng.uniform(0.0, horizon, m))
        times = np.concatenate([arrivals, cross])
        tagged = np.concatenate([np.ones(n, bool), np.zeros(m, bool)])
        order = np.argsort(times, kind="stable")
        times, tagged = times[order], tagged[order]
        all_serv = _service(rng, node, times.size)
        wait = fifo_waits(times, all_serv)[tagged]
        serv = all_serv[tagged]
    else:
        serv = _service(rng, node, n)
        wait = fifo_waits(arrivals, serv)
    sojourn = wait + serv + node.extra
    return arrivals + sojourn, sojourn, wait


def simulate(config):
    """Run the chain; latency samples (arrival to exit) after warmup."""
    problems = config.violations()
    if problems:
        raise ValueError("; ".join(f"{f}: {m}" for f, m in problems))
    if config.lam == 0:
        return SimResult(np.empty(0), True, False, "no arrivals")
    rng = np.random.default_rng(config.seed)
    start = _poisson_times(rng, config.lam, config.n_packets)
    t = start
    # latency is accumulated per node rather than as exit - start, so fixed
    # delays are not blurred by rounding of large absolute times
    latency = np.zeros(config.n_packets)
    waited = np.zeros(config.n_packets)
    for node in config.chain:
        t, stay, w = _pass_node(rng, node, t, config.lam)
        latency += stay
        waited += w
    total = waited if config.record == "wait" else latency
    samples = total[config.warmup_count:]
    unstable = any(rho >= 1.0 for _, rho in config.utilizations())
    q = samples.size // 4
    converged = True
    if q > 0:
        m3, m4 = samples[2 * q:3 * q].mean(), samples[3 * q:].mean()
        converged = not (m4 > m3 * 1.2 and m4 - m3 > 1e-12)
    note = "mean still growing over the last quartiles" if not converged else ""
    return SimResult(samples, converged, unstable, note)


# --- deployment chains ---------------------------------------------------


def deployment_chain(scenario):
    """Tagged-flow chain through the TN and CN of ``scenario``.

    Returns ``(tagged rate, [NodeSpec])``.  Propagation and per-node
    processing become pure delays; M/D/1 UPFs carry their extra ``1/mu``
    of processing as a deterministic delay.
    """
    lam = scenario.traffic.arrival_rate
    rates = tn_rates(scenario)
    cn = cn_rates(scenario)
    prop, proc = tn_shift(scenario)

    def queue(name, disc, total, mu, extra=0.0):
        cross = max(total - lam, 0.0)
        iso = lam > 0 and cross / lam > MAX_CROSS_RATIO
        return NodeSpec(disc, mu, extra, cross, iso, name)

    ul = [queue(r.name, "exp", r.lam, r.mu) for r in rates if r.direction == "UL"]
    dl = [queue(r.name, "exp", r.lam, r.mu) for r in rates if r.direction == "DL"]

    def upf(direction, total, mu):
        if scenario.deployment is DeploymentKind.CENTRALIZED:
            S = intermediate_nodes(scenario.topology.d_cn, scenario.topology.d_cn_max)
            return [
                queue(f"UPF1/{direction}", "det", total, mu, 1.0 / mu),
                NodeSpec("det", 0.0, 2.0 * S / mu + cn.d_cn / scenario.topology.v, name=f"CN/{direction}"),
                queue(f"UPF2/{direction}", "det", total, mu, 1.0 / mu),
            ]
        return [queue(f"UPF/{direction}", "det", total, mu, 1.0 / mu)]

    chain = [NodeSpec("det", 0.0, prop + proc, name="TN fixed")]
    chain += ul + upf("UL", cn.lam_ul, cn.mu_ul) + upf("DL", cn.lam_dl, cn.mu_dl) + dl
    return lam, chain


@dataclass(frozen=True, eq=False)
class DeploymentSimResult:
    sim: SimResult
    analytical: PercentileTriple

    def deviation(self):
        """Relative deviation (analytical - simulated) / simulated per statistic."""
        emp = self.sim.triple()
        out = {}
        for lv in ("mean", "p90", "p9999"):
            e, a = emp.at(lv), self.analytical.at(lv)
            out[lv] = None if e in (None, 0.0) else (a - e) / e
        return out


def simulate_deployment(scenario, n_packets=200_000, seed=0, warmup=None):
    """Simulated TN + CN round trip compared with the analytical model."""
    lam, chain = deployment_chain(scenario)
    sim = simulate(SimConfig(seed, n_packets, lam, tuple(chain), warmup))
    model = convolve(tn_latency(scenario), cn_latency(scenario))
    analytical = PercentileTriple(model.mean(), model.percentile(0.90), model.percentile(0.9999))
    return DeploymentSimResult(sim, analytical)
