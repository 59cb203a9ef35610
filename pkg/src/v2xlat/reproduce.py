"""Re-derive the reference evaluation tables and compare with published values.

Every computed cell comes from the model with default parameters.  The
published values (``data/published_tables.json``) are only read to show the
per-cell deviation; they never feed a computation.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources

from .appserver import as_latency, min_processors
from .compose import compose, render_table
from .core import cn_latency
from .dists import InstabilityError
from .externals import internet_latency, peering_latency
from .scenario import DEPLOYMENTS, HLOA, LLOA, PAPER_LAMBDAS, DeploymentKind, default_paper_scenario
from .transport import tn_latency, tn_shift

TABLE_IDS = ("V", "VI", "VII", "VIII", "IX", "X", "XI", "XII", "XIII", "XIV", "XV")
E2E_TABLES = {
    "XI": DeploymentKind.MEC_GNB,
    "XII": DeploymentKind.MEC_M1,
    "XIII": DeploymentKind.MEC_CN,
    "XIV": DeploymentKind.CENTRALIZED,
}
E2E_COLUMNS = (
    (0.001, "LLoA", 2080), (0.001, "LLoA", 8320), (0.001, "HLoA", 2080), (0.001, "HLoA", 8320),
    (0.01, "LLoA", 2080), (0.01, "LLoA", 8320), (0.01, "LLoA", 31200), (0.01, "HLoA", 2080),
    (0.01, "HLoA", 8320),
)
ALPHAS = (0.001, 0.01, 0.1)
STATS = (("mean", None), ("p90", 0.90), ("p9999", 0.9999))
UNSTABLE = "unstable"
UNSUPPORTED = "unsupported"


class UnknownTableError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    row: str
    column: str
    computed: object  # float (ms or count), a status string or None
    published: object  # float, status string, (lo, hi) range or None

    @property
    def deviation(self):
        """Relative deviation for numeric cells, "match"/"mismatch" for status cells."""
        c, p = self.computed, self.published
        if p is None:
            return None
        if isinstance(p, tuple):
            if not isinstance(c, float):
                return "mismatch"
            lo, hi = p
            if lo <= c <= hi:
                return 0.0
            edge = lo if c < lo else hi
            return (c - edge) / edge
        if isinstance(p, str) or isinstance(c, str) or c is None:
            return "match" if c == p else "mismatch"
        if p == 0:
            return 0.0 if c == 0 else float("inf")
        return (c - p) / p


def published(table_id):
    """Published values of one table as ``{key: value}``."""
    data = json.loads(resources.files("v2xlat.data").joinpath("published_tables.json").read_text())
    if table_id not in data:
        raise UnknownTableError(f"unknown table id {table_id!r}; expected one of {', '.join(TABLE_IDS)}")
    return data[table_id], data.get("verdicts", {}).get(table_id, {})


def _pub(value):
    if isinstance(value, list):
        return tuple(value)
    if value == "*":
        return UNSTABLE
    if value == "-":
        return UNSUPPORTED
    return None if value is None else float(value)


def _ms(x):
    return x * 1e3


def _stats(dist):
    return {name: _ms(dist.mean() if p is None else dist.percentile(p)) for name, p in STATS}


def _queue_table(fn, pub):
    cells = []
    for dep in DEPLOYMENTS:
        for alpha in ALPHAS:
            try:
                vals = _stats(fn(default_paper_scenario(dep, lam=2080, alpha=alpha)))
            except InstabilityError:
                vals = dict.fromkeys((s for s, _ in STATS), UNSTABLE)
            for stat, _ in STATS:
                key = f"{dep.value}/{stat}/{alpha:g}"
                cells.append(Cell(f"{dep.value} {stat}", f"alpha={alpha:g}", vals[stat], _pub(pub.get(key))))
    return cells


def table_v(pub):
    cells = []
    for dep in DEPLOYMENTS:
        prop, proc = tn_shift(default_paper_scenario(dep))
        cells.append(Cell("t_prop", dep.value, _ms(prop), _pub(pub.get(f"t_prop/{dep.value}"))))
        cells.append(Cell("t_p", dep.value, _ms(proc), _pub(pub.get(f"t_p/{dep.value}"))))
    return cells


def table_viii(pub):
    cells = []
    for kind in ("remote", "local"):
        vals = _stats(peering_latency(kind))
        for stat, _ in STATS:
            cells.append(Cell(f"peering {kind}", stat, vals[stat], _pub(pub.get(f"{kind}/{stat}"))))
    net = _stats(internet_latency())
    for stat, _ in STATS:
        cells.append(Cell("Internet", stat, net[stat], None))
    return cells


def table_ix(pub):
    cells = []
    for dep in DEPLOYMENTS:
        for lam in (2080, 41600):
            scen = default_paper_scenario(dep, lam=lam)
            vals = _stats(as_latency(scen, model="forwarder"))
            for stat, _ in STATS:
                cells.append(Cell(f"{dep.value} {stat}", f"lambda={lam}", vals[stat],
                                  _pub(pub.get(f"{dep.value}/{stat}/{lam}"))))
    return cells


def table_x(pub):
    cells = []
    for lam in (2080, 41600):
        for dep in DEPLOYMENTS:
            n = float(min_processors(default_paper_scenario(dep, lam=lam)))
            cells.append(Cell(dep.value, f"lambda={lam}", n, _pub(pub.get(f"{dep.value}/{lam}"))))
    return cells


def table_xv(pub):
    radio = default_paper_scenario(DeploymentKind.MEC_GNB).radio
    cells = []
    for svc in (LLOA, HLOA):
        for lam in PAPER_LAMBDAS:
            row = radio.lookup(svc, lam)
            val = _ms(row.mean) if row.mean is not None else UNSUPPORTED
            cells.append(Cell(f"{svc.name} mean", f"lambda={lam}", val, _pub(pub.get(f"{svc.name}/{lam}"))))
    return cells


def e2e_cells(table_id, pub, verdicts):
    dep = E2E_TABLES[table_id]
    rows = ["radio", "TN", "CN"] + (["UPF-AS"] if dep is DeploymentKind.CENTRALIZED else [])
    rows += ["AS", "single", "peering", "multi"]
    cells = []
    for alpha, svc, lam in E2E_COLUMNS:
        col = f"{alpha:g}/{svc}/{lam}"
        b = compose(default_paper_scenario(dep, svc, lam, alpha))
        for r in rows:
            if r in ("single", "multi"):
                v = b.service_total(r)
            else:
                res = b.components[r]
                v = None if res.triple is None else res.triple.at(b.level)
            val = UNSUPPORTED if v is None else _ms(v)
            cells.append(Cell(r, col, val, _pub(pub.get(r, {}).get(col))))
        for mno in ("single", "multi"):
            expected = verdicts.get(mno, {}).get(col)
            if expected is None and pub.get(mno, {}).get(col) == "-":
                expected = UNSUPPORTED
            cells.append(Cell(f"verdict {mno}", col, b.verdict(mno), expected))
    return cells


def _vi(pub):
    return _queue_table(tn_latency, pub)


def _vii(pub):
    return _queue_table(cn_latency, pub)


_BUILDERS = {
    "V": table_v, "VI": _vi, "VII": _vii, "VIII": table_viii, "IX": table_ix, "X": table_x, "XV": table_xv,
}


def reproduce(table_id):
    """Cells of one table: computed value beside the published one."""
    table_id = table_id.strip().upper()
    if table_id not in TABLE_IDS:
        raise UnknownTableError(f"unknown table id {table_id!r}; expected one of {', '.join(TABLE_IDS)}")
    pub, verdicts = published(table_id)
    if table_id in E2E_TABLES:
        return e2e_cells(table_id, pub, verdicts)
    return _BUILDERS[table_id](pub)


# --- rendering -----------------------------------------------------------

COLUMNS = ("row", "column", "computed", "published", "deviation")


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, tuple):
        return f"{x[0]:.6g}-{x[1]:.6g}"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _fmt_dev(d):
    if d is None:
        return ""
    if isinstance(d, str):
        return d
    return f"{d * 100:+.2f}%"


def records(cells):
    return [
        {"row": c.row, "column": c.column, "computed": _fmt(c.computed), "published": _fmt(c.published),
         "deviation": _fmt_dev(c.deviation)}
        for c in cells
    ]


def render_text(table_id, cells):
    unit = "processors" if table_id.upper() == "X" else "latencies in ms"
    head = f"Table {table_id.upper()} ({unit})\n"
    return head + render_table(records(cells), COLUMNS)


def render_csv(cells):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(records(cells))
    return buf.getvalue()
