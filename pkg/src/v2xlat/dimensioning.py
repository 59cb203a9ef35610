"""Smallest symmetric link share alpha meeting stability and the latency target.

E2E latency at the service percentile is nonincreasing in alpha once every
node is stable, so the threshold is bracketed by the closed-form stability
bound and the upper limit of the admissible alpha range and located with
Brent's method on log(alpha).
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .compose import _mno_key, cell_scenario, compose
from .core import cn_rates
from .dists import PercentileTriple
from .scenario import DeploymentKind, parse_service
from .transport import tn_rates

ALPHA_MAX = 0.5
#: Distance below ``ALPHA_MAX`` of the largest alpha tried.
EDGE = 1e-9


class MonotonicityError(RuntimeError):
    """The latency sampled over alpha is not nonincreasing, so the root search is unsafe."""


@dataclass(frozen=True)
class DimensioningResult:
    deployment: DeploymentKind
    service: object
    mno_mode: str
    lam: float
    alpha_min: float | None
    binding: str
    stability_bound: float
    achieved: PercentileTriple | None = None
    utilizations: tuple = ()
    cause: str | None = None

    @property
    def feasible(self):
        return self.alpha_min is not None

    @property
    def binding_kind(self):
        return self.binding.split("(", 1)[0]


def utilizations_per_alpha(scenario):
    """``(node, lambda*B/C)``: utilization of each path queue per unit alpha."""
    B = scenario.traffic.packet_bits
    out = [(r.name, r.lam * B / r.link_capacity) for r in tn_rates(scenario)]
    cn = cn_rates(scenario)
    out.append(("UPF/UL", cn.lam_ul * B / cn.link_capacity))
    out.append(("UPF/DL", cn.lam_dl * B / cn.link_capacity))
    return out


def stability_bound(scenario):
    """(alpha below which some queue is overloaded, name of that queue)."""
    name, bound = max(utilizations_per_alpha(scenario), key=lambda x: x[1])
    return bound, name


def _latency(scenario, alpha, mno):
    b = compose(scenario.with_alpha(alpha))
    return b, b.service_total(mno)


def _sample(scenario, lo, mno, samples=8, check=True):
    """``(alpha, latency)`` on a log grid above ``lo``; raises if the latency
    ever rises with alpha (``check``)."""
    alphas = np.geomspace(max(lo, 1e-12) * (1.0 + 1e-3), ALPHA_MAX - EDGE, samples)
    pairs = [(float(a), _latency(scenario, a, mno)[1]) for a in alphas]
    pairs = [(a, v) for a, v in pairs if v is not None]
    if check:
        for (a0, v0), (a1, v1) in zip(pairs, pairs[1:]):
            if v1 > v0 * (1.0 + 1e-12):
                raise MonotonicityError(
                    f"latency rises from {v0 * 1e3:.6g} ms at alpha={a0:.6g} to {v1 * 1e3:.6g} ms at alpha={a1:.6g}"
                )
    return pairs


def alpha_min(scenario, service=None, mno_mode=None, rel_tol=1e-4, check_monotone=True):
    """Minimum alpha (same in UL and DL) supporting the service.

    ``service`` and ``mno_mode`` default to the scenario's own; the scenario's
    alpha is ignored.
    """
    if service is not None:
        scenario = scenario.replace(service=parse_service(service))
    if mno_mode is not None:
        scenario = scenario.replace(mno_mode=mno_mode)
    mno = _mno_key(scenario.mno_mode)
    bound, node = stability_bound(scenario)

    def result(alpha, binding, b=None, cause=None):
        util = ()
        if alpha is not None:
            util = tuple((n, u / alpha) for n, u in utilizations_per_alpha(scenario))
        return DimensioningResult(
            scenario.deployment, scenario.service, scenario.mno_mode, scenario.traffic.arrival_rate,
            alpha, binding, bound, None if b is None else b.total(mno), util, cause,
        )

    row = scenario.radio.lookup(scenario.service, scenario.traffic.arrival_rate)
    if not row.supported:
        return result(None, "infeasible(radio)", cause="radio latency exceeds the requirement at this load")
    if bound >= ALPHA_MAX - EDGE:
        return result(None, "infeasible(stability)", cause=f"{node} needs alpha above {bound:.6g}")

    limit = scenario.service.latency_requirement
    b_hi, v_hi = _latency(scenario, ALPHA_MAX - EDGE, mno)
    if v_hi is None or v_hi > limit:
        cause = b_hi.cause or f"latency {v_hi * 1e3:.6g} ms exceeds {limit * 1e3:g} ms even at alpha -> 0.5"
        return result(None, "infeasible(latency)", b_hi, cause)
    samples = _sample(scenario, bound, mno, check=check_monotone) if check_monotone else []

    # just above the stability bound every queue is stable but may be slow
    lo = bound * (1.0 + 0.5 * rel_tol)
    b_lo, v_lo = _latency(scenario, lo, mno)
    if v_lo is not None and v_lo <= limit:
        return result(lo, f"stability({node})", b_lo)

    def excess(u):
        v = _latency(scenario, math.exp(u), mno)[1]
        return math.log(v / limit)

    # the root is located to rel_tol/4; stepping up by rel_tol/2 lands on the
    # feasible side while alpha*(1 - rel_tol) stays infeasible
    # the samples narrow the bracket: last infeasible and first feasible alpha
    a_lo, a_hi = lo, ALPHA_MAX - EDGE
    for a, v in samples:
        if a <= lo:
            continue
        if v > limit:
            a_lo = a
        else:
            a_hi = a
            break
    u = brentq(excess, math.log(a_lo), math.log(a_hi), xtol=0.25 * rel_tol, rtol=1e-15)
    hi = min(math.exp(u) * (1.0 + 0.5 * rel_tol), ALPHA_MAX - EDGE)
    b_best, v = _latency(scenario, hi, mno)
    while v is None or v > limit:
        hi = min(hi * (1.0 + 0.25 * rel_tol), ALPHA_MAX - EDGE)
        b_best, v = _latency(scenario, hi, mno)
    binding = "latency(L_REQ)"
    return result(hi, binding, b_best)


# --- sweeps --------------------------------------------------------------


def default_multi(deployment):
    """Multi-operator mode with the deployment's usual peering point."""
    return "multi-local" if DeploymentKind.parse(deployment).is_mec else "multi-remote"


def _dim_cell(args):
    base, dep, svc, mno, lam = args
    scen = cell_scenario(base, dep, svc, lam, 0.01)
    scen = scen.replace(mno_mode=default_multi(scen.deployment) if mno == "multi" else mno)
    try:
        return alpha_min(scen)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        bound = stability_bound(scen)[0]
        return DimensioningResult(scen.deployment, scen.service, mno, float(lam), None, "error", bound, cause=str(exc))


def alpha_min_sweep(base, lambdas, deployments, services, mno_modes=("single",), jobs=1):
    """alpha_min for every (deployment, service, mno_mode, lambda); never aborts."""
    axes = [list(deployments), list(services), list(mno_modes), list(lambdas)]
    if not all(axes):
        raise ValueError("every sweep axis needs at least one value")
    cells = [(base, d, s, m, lam) for d, s, m, lam in itertools.product(*axes)]
    if jobs and jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_dim_cell, cells))
    return [_dim_cell(c) for c in cells]


def monotonicity_report(results):
    """Cases where alpha_min decreases as lambda grows (same deployment/service/mno).

    Once a load is infeasible, a feasible result at a higher load is also
    reported.
    """
    issues = []
    key = lambda r: (r.deployment.value, r.service.name, r.mno_mode)  # noqa: E731
    for k, group in itertools.groupby(sorted(results, key=lambda r: (key(r), r.lam)), key=key):
        prev = None
        for r in group:
            if prev is not None:
                if prev.feasible and r.feasible and r.alpha_min < prev.alpha_min * (1.0 - 1e-9):
                    issues.append(f"{'/'.join(k)}: alpha_min drops from {prev.alpha_min:.6g} at "
                                  f"lambda={prev.lam:g} to {r.alpha_min:.6g} at lambda={r.lam:g}")
                if not prev.feasible and r.feasible:
                    issues.append(f"{'/'.join(k)}: infeasible at lambda={prev.lam:g} but feasible at {r.lam:g}")
            prev = r
    return issues


DIM_COLUMNS = ("deployment", "service", "mno", "lambda", "alpha_min", "binding", "stability_bound",
               "e2e_ms", "note")


def result_record(r):
    level = "p90" if r.service.name == "LLoA" else "p9999"
    total = "" if r.achieved is None or r.achieved.at(level) is None else f"{r.achieved.at(level) * 1e3:.6g}"
    return {
        "deployment": r.deployment.value,
        "service": r.service.name,
        "mno": r.mno_mode,
        "lambda": f"{r.lam:g}",
        "alpha_min": "" if r.alpha_min is None else f"{r.alpha_min:.6g}",
        "binding": r.binding,
        "stability_bound": f"{r.stability_bound:.6g}",
        "e2e_ms": total if r.feasible else "",
        "note": r.cause or "",
    }


def write_csv(records):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=DIM_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(records)
    return buf.getvalue()
