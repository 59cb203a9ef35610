"""End-to-end latency: radio + TN + CN (+ Internet) + AS (+ peering).

Two ways of combining the segments are offered.  ``percentile-sum`` adds the
segments' statistics level by level, which is conservative and matches how
per-segment budgets are usually quoted.  ``convolution`` treats the segments
as independent and convolves their distributions.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .appserver import as_latency, backlog_check
from .core import cn_latency
from .dists import InstabilityError, PercentileTriple, Tabulated, convolve, convolve_all, level_for
from .externals import internet_latency, peering_latency
from .scenario import (
    PAPER_AS_PROFILES,
    DeploymentKind,
    ScenarioError,
    default_paper_scenario,
    parse_service,
    validate,
)
from .transport import insufficient_alpha, tn_latency

COMPONENTS = ("radio", "TN", "CN", "UPF-AS", "AS", "peering")
LEVELS = ("mean", "p90", "p9999")


@dataclass(frozen=True)
class ComponentResult:
    triple: PercentileTriple | None
    supported: bool = True
    cause: str | None = None


@dataclass(frozen=True)
class ComponentBreakdown:
    deployment: DeploymentKind
    service: object
    lam: float
    alpha: float
    composition_mode: str
    peering_kind: str
    components: dict
    single: PercentileTriple | None
    multi: PercentileTriple | None
    cause: str | None = None
    mno_mode: str = "single"
    dists: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def level(self):
        return level_for(self.service.reliability)

    def total(self, mno="single"):
        return self.single if mno == "single" else self.multi

    def service_total(self, mno="single"):
        """Total at the service's reliability percentile, seconds (None if unsupported)."""
        tot = self.total(mno)
        if tot is None:
            return None
        if self.level is not None:
            return tot.at(self.level)
        dist = self.dists.get(mno)
        return None if dist is None else dist.percentile(self.service.reliability)

    def verdict(self, mno=None):
        mno = mno or self.mno_mode
        value = self.service_total(_mno_key(mno))
        if value is None:
            return "unsupported"
        return "meets" if value <= self.service.latency_requirement + 1e-15 else "violates"

    def mean_verdict(self, mno=None):
        tot = self.total(_mno_key(mno or self.mno_mode))
        if tot is None or tot.mean is None:
            return "unsupported"
        return "meets" if tot.mean <= self.service.latency_requirement + 1e-15 else "violates"

    def disagreement(self, mno=None):
        """True when judging by the mean would reach a different verdict."""
        v, m = self.verdict(mno), self.mean_verdict(mno)
        return v != "unsupported" and m != "unsupported" and v != m


def _mno_key(mno):
    return "single" if mno == "single" else "multi"


def _sum(triples):
    out = []
    for lv in LEVELS:
        vals = [t.at(lv) for t in triples]
        out.append(None if any(v is None for v in vals) else math.fsum(vals))
    return PercentileTriple(*out)


def _dist_triple(d):
    return PercentileTriple(d.mean(), d.percentile(0.90), d.percentile(0.9999))


def component_distributions(scenario, internet=None, peering=None):
    """Segment distributions (or the reason a segment cannot be evaluated).

    Returns ``{name: (distribution or None, cause or None)}``.  ``internet``
    and ``peering`` replace the built-in anchored distributions.
    """
    out = {}
    row = scenario.radio.lookup(scenario.service, scenario.traffic.arrival_rate)
    if row.supported:
        out["radio"] = (Tabulated(row.mean, row.p90, row.p9999), None)
    else:
        out["radio"] = (None, "radio latency exceeds the requirement at this load")
    for name, fn in (("TN", tn_latency), ("CN", cn_latency)):
        try:
            out[name] = (fn(scenario), None)
        except InstabilityError as exc:
            out[name] = (None, exc)
    if scenario.deployment is DeploymentKind.CENTRALIZED:
        out["UPF-AS"] = (internet if internet is not None else internet_latency("round-trip"), None)
    if scenario.as_profile.latency_model == "forwarder" and backlog_check(scenario).backlogged:
        out["AS"] = (None, f"AS {backlog_check(scenario)}")
    else:
        out["AS"] = (as_latency(scenario), None)
    out["peering"] = (peering if peering is not None else peering_latency(scenario.peering_kind), None)
    return out


def compose(scenario, internet=None, peering=None):
    """Per-segment statistics, single- and multi-operator totals."""
    parts = component_distributions(scenario, internet, peering)
    components = {}
    for name, (dist, cause) in parts.items():
        if dist is None:
            components[name] = ComponentResult(None, False, str(cause))
        elif isinstance(dist, Tabulated):
            components[name] = ComponentResult(dist.triple())
        else:
            components[name] = ComponentResult(_dist_triple(dist))

    chain = [n for n in COMPONENTS if n in parts and n != "peering"]
    causes = [str(parts[n][1]) for n in chain if parts[n][0] is None and not isinstance(parts[n][1], InstabilityError)]
    unstable = [node for n in chain if isinstance(parts[n][1], InstabilityError) for node in parts[n][1].nodes]
    if unstable:
        causes.append(str(insufficient_alpha(unstable)))
    single = multi = None
    dists = {}
    if not causes:
        if scenario.composition_mode == "convolution":
            total = convolve_all([parts[n][0] for n in chain])
            with_pp = convolve(total, parts["peering"][0])
            single, multi = _dist_triple(total), _dist_triple(with_pp)
            dists = {"single": total, "multi": with_pp}
        else:
            single = _sum([components[n].triple for n in chain])
            multi = _sum([single, components["peering"].triple])
    return ComponentBreakdown(
        deployment=scenario.deployment,
        service=scenario.service,
        lam=scenario.traffic.arrival_rate,
        alpha=scenario.alpha.ul,
        composition_mode=scenario.composition_mode,
        peering_kind=scenario.peering_kind,
        components=components,
        single=single,
        multi=multi,
        cause="; ".join(causes) if causes else None,
        mno_mode=scenario.mno_mode,
        dists=dists,
    )


# --- sweeps --------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    deployment: DeploymentKind
    service: object
    lam: float
    alpha: float
    breakdown: ComponentBreakdown | None
    error: str | None = None


def cell_scenario(base, deployment, service, lam, alpha):
    """``base`` moved to one sweep cell.

    The AS hardware follows the deployment unless ``base`` carries a custom
    profile.
    """
    deployment = DeploymentKind.parse(deployment)
    prof = base.as_profile
    if prof == PAPER_AS_PROFILES[base.deployment]:
        prof = PAPER_AS_PROFILES[deployment]
    scen = base.replace(deployment=deployment, service=parse_service(service), as_profile=prof)
    return scen.with_lambda(float(lam)).with_alpha(float(alpha))


def _cell(args):
    base, dep, svc, lam, alpha, internet, peering = args
    try:
        scen = cell_scenario(base, dep, svc, lam, alpha)
        problems = validate(scen)
        if problems:
            raise ScenarioError("; ".join(f"{f}: {m}" for f, m in problems))
        return SweepRow(scen.deployment, scen.service, lam, alpha, compose(scen, internet, peering))
    except (ScenarioError, ValueError, ArithmeticError) as exc:
        return SweepRow(DeploymentKind.parse(dep), parse_service(svc), lam, alpha, None, str(exc))


def sweep(base, lambdas, alphas, deployments, services, jobs=1, internet=None, peering=None):
    """Evaluate every (deployment, service, alpha, lambda) combination.

    Rows come back in that nesting order.  A cell that cannot be evaluated
    keeps its slot with ``error`` set.
    """
    if base is None:
        base = default_paper_scenario(DeploymentKind.MEC_GNB)
    axes = [list(deployments), list(services), list(alphas), list(lambdas)]
    if not all(axes):
        raise ValueError("every sweep axis needs at least one value")
    cells = [(base, d, s, lam, a, internet, peering) for d, s, a, lam in itertools.product(*axes)]
    if jobs and jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    return [_cell(c) for c in cells]


# --- rendering -----------------------------------------------------------

SWEEP_COLUMNS = (
    ["deployment", "service", "lambda", "alpha", "mode"]
    + [f"{c}_{lv}" for c in COMPONENTS for lv in LEVELS]
    + [f"{tot}_{lv}" for tot in ("single", "multi") for lv in LEVELS]
    + ["verdict_single", "verdict_multi", "mean_verdict_single", "mean_verdict_multi", "note"]
)
TEXT_COLUMNS = (
    "deployment", "service", "lambda", "alpha",
    "radio", "TN", "CN", "UPF-AS", "AS", "peering",
    "single_mean", "single", "multi_mean", "multi",
    "verdict_single", "verdict_multi", "note",
)


def fmt_ms(seconds):
    return "" if seconds is None else f"{seconds * 1e3:.6g}"


def fmt_num(x):
    return f"{x:g}"


def row_record(row):
    """Flat string record of one sweep cell (latencies in ms)."""
    b = row.breakdown
    rec = dict.fromkeys(SWEEP_COLUMNS, "")
    rec.update(
        deployment=row.deployment.value,
        service=row.service.name,
        alpha=fmt_num(row.alpha),
    )
    rec["lambda"] = fmt_num(row.lam)
    if b is None:
        rec["note"] = f"error: {row.error}"
        return rec
    rec["mode"] = b.composition_mode
    for c, res in b.components.items():
        if res.triple is None:
            continue
        for lv in LEVELS:
            rec[f"{c}_{lv}"] = fmt_ms(res.triple.at(lv))
    for tot in ("single", "multi"):
        t = b.total(tot)
        if t is not None:
            for lv in LEVELS:
                rec[f"{tot}_{lv}"] = fmt_ms(t.at(lv))
        rec[f"verdict_{tot}"] = b.verdict(tot)
        rec[f"mean_verdict_{tot}"] = b.mean_verdict(tot)
    notes = []
    if b.cause:
        notes.append(b.cause)
    if b.disagreement("single") or b.disagreement("multi"):
        notes.append("mean and percentile verdicts differ")
    rec["note"] = "; ".join(notes)
    return rec


def write_csv(records, out=None):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rec in records:
        w.writerow(rec)
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(source):
    """Records from a sweep CSV (a path, file object or the CSV text)."""
    if hasattr(source, "read"):
        text = source.read()
    elif "\n" in str(source):
        text = str(source)
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    return [dict(r) for r in csv.DictReader(io.StringIO(text))]


def _text_view(rec):
    level = "p90" if rec["service"] == "LLoA" else "p9999"
    view = {k: rec.get(k, "") for k in ("deployment", "service", "lambda", "alpha", "verdict_single", "verdict_multi", "note")}
    for c in COMPONENTS:
        view[c] = rec.get(f"{c}_{level}", "")
    for tot in ("single", "multi"):
        view[tot] = rec.get(f"{tot}_{level}", "")
        view[f"{tot}_mean"] = rec.get(f"{tot}_mean", "")
    return view


def render_table(rows, columns):
    """Aligned plain-text table of string rows."""
    widths = [max([len(c)] + [len(r.get(c, "")) for r in rows]) for c in columns]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(r.get(c, "").ljust(w) for c, w in zip(columns, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_text(records):
    """Sweep table in ms, components and totals at each row's service percentile."""
    return render_table([_text_view(r) for r in records], TEXT_COLUMNS)


def render_breakdown(b):
    """Readable summary of one composed scenario."""
    head = (
        f"{b.deployment.value}  {b.service.name} (L_REQ {b.service.latency_requirement * 1e3:g} ms at "
        f"{b.service.reliability:g})  lambda={b.lam:g} pkt/s  alpha={b.alpha:g}  mode={b.composition_mode}  "
        f"peering={b.peering_kind}"
    )
    rows = []
    for c, res in b.components.items():
        r = {"component": c}
        if res.triple is None:
            r["note"] = res.cause or "unsupported"
        else:
            r.update({lv: fmt_ms(res.triple.at(lv)) for lv in LEVELS})
        rows.append(r)
    for tot in ("single", "multi"):
        t = b.total(tot)
        r = {"component": f"E2E {tot}-MNO"}
        if t is not None:
            r.update({lv: fmt_ms(t.at(lv)) for lv in LEVELS})
        r["verdict"] = b.verdict(tot)
        r["note"] = f"mean-based: {b.mean_verdict(tot)}" + ("  (verdicts differ)" if b.disagreement(tot) else "")
        rows.append(r)
    table = render_table(rows, ["component", "mean", "p90", "p9999", "verdict", "note"])
    tail = f"cause: {b.cause}\n" if b.cause else ""
    return f"{head}\nlatencies in ms\n{table}{tail}"
