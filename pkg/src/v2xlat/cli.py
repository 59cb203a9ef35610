"""Command-line entry point.

Exit codes: 0 success (a "violates" verdict is still a success), 2 bad
input, 3 the requested quantity cannot be computed (unstable path,
unsupported radio load, no feasible alpha).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import compose as comp
from . import dimensioning as dim
from . import reproduce as rep
from .dists import InstabilityError
from .externals import cdf_from_csv
from .scenario import (
    COMPOSITION_MODES,
    DEPLOYMENTS,
    PAPER_LAMBDAS,
    Scenario,
    ScenarioError,
    default_paper_scenario,
    validate,
)
from .sim import simulate_deployment

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3
MNO_CHOICES = ("single", "multi", "multi-local", "multi-remote")


class InputError(ValueError):
    pass


class Infeasible(RuntimeError):
    def __init__(self, message, output=""):
        super().__init__(message)
        self.output = output


def _list(conv):
    def parse(text):
        try:
            return [conv(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def _set_path(doc, dotted, raw):
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise InputError(f"--set {dotted}: {k} is not a section")
    node[keys[-1]] = value


def build_scenario(args, deployment=None, service=None, lam=None, alpha=None):
    """Scenario from --scenario (or the defaults), explicit flags and --set overrides."""
    if args.scenario:
        try:
            with open(args.scenario) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read scenario file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"scenario file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise InputError("scenario file must hold a JSON object")
    else:
        # the default AS hardware follows the deployment
        doc = default_paper_scenario(deployment or "mec-gnb", check=False).to_dict()
    if deployment is not None:
        doc["deployment"] = deployment
    if service is not None:
        doc["service"] = service
    if lam is not None:
        doc.setdefault("traffic", {})["lambda_gnb_ul"] = float(lam)
    if alpha is not None:
        doc["alpha"] = {"ul": float(alpha), "dl": float(alpha)}
    mno = getattr(args, "mno", None)
    if mno is not None and mno != "multi":
        doc["mno_mode"] = mno
    if getattr(args, "mode", None):
        doc["composition_mode"] = args.mode
    for item in args.set or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise InputError(f"--set expects key=value, got {item!r}")
        _set_path(doc, key.strip(), raw.strip())
    if args.radio_table:
        doc["radio"] = args.radio_table
    try:
        scen = Scenario.from_dict(doc)
    except (ScenarioError, ValueError, TypeError) as exc:
        raise InputError(str(exc)) from exc
    if mno == "multi":
        scen = scen.replace(mno_mode=dim.default_multi(scen.deployment))
    problems = validate(scen)
    if problems:
        raise InputError("; ".join(f"{f}: {m}" for f, m in problems))
    return scen


def _externals(args):
    internet = cdf_from_csv(args.internet_cdf) if args.internet_cdf else None
    peering = cdf_from_csv(args.peering_cdf) if args.peering_cdf else None
    return internet, peering


def _emit(args, text):
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ------------------------------------------------------------


def cmd_compose(args):
    scen = build_scenario(args, args.deployment, args.service, args.lam, args.alpha)
    internet, peering = _externals(args)
    b = comp.compose(scen, internet, peering)
    if args.format == "csv":
        row = comp.SweepRow(scen.deployment, scen.service, scen.traffic.arrival_rate, scen.alpha.ul, b)
        text = comp.write_csv([comp.row_record(row)])
    else:
        text = comp.render_breakdown(b)
    if b.single is None:
        raise Infeasible(b.cause or "unsupported", text)
    _emit(args, text)
    return EXIT_OK


def cmd_sweep(args):
    base = build_scenario(args, args.deployments[0], args.services[0], args.lambdas[0], args.alphas[0])
    internet, peering = _externals(args)
    rows = comp.sweep(base, args.lambdas, args.alphas, args.deployments, args.services, jobs=args.jobs,
                      internet=internet, peering=peering)
    records = [comp.row_record(r) for r in rows]
    _emit(args, comp.write_csv(records) if args.format == "csv" else comp.render_text(records))
    return EXIT_OK


def cmd_dimension(args):
    base = build_scenario(args, args.deployments[0], args.services[0], args.lambdas[0], 0.01)
    results = dim.alpha_min_sweep(base, args.lambdas, args.deployments, args.services, args.mnos, args.jobs)
    records = [dim.result_record(r) for r in results]
    text = dim.write_csv(records) if args.format == "csv" else comp.render_table(records, dim.DIM_COLUMNS)
    if len(results) == 1 and not results[0].feasible:
        raise Infeasible(f"no feasible alpha: {results[0].binding}: {results[0].cause}", text)
    _emit(args, text)
    return EXIT_OK


def cmd_simulate(args):
    scen = build_scenario(args, args.deployment, args.service, args.lam, args.alpha)
    try:
        res = simulate_deployment(scen, n_packets=args.packets, seed=args.seed)
    except InstabilityError as exc:
        raise Infeasible(str(exc)) from exc
    dev = res.deviation()
    emp = res.sim.triple()
    rows = []
    for lv in comp.LEVELS:
        d = dev[lv]
        rows.append({
            "statistic": lv,
            "simulated_ms": comp.fmt_ms(emp.at(lv)),
            "analytical_ms": comp.fmt_ms(res.analytical.at(lv)),
            "deviation": "" if d is None else f"{d * 100:+.2f}%",
        })
    cols = ("statistic", "simulated_ms", "analytical_ms", "deviation")
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        head = (f"{scen.deployment.value} TN+CN round trip, lambda={scen.traffic.arrival_rate:g} pkt/s, "
                f"alpha={scen.alpha.ul:g}, {res.sim.n} packets after warmup, seed={args.seed}\n")
        text = head + comp.render_table(rows, cols)
        if not res.sim.converged:
            text += f"warning: {res.sim.note}\n"
    _emit(args, text)
    return EXIT_OK


def cmd_reproduce(args):
    try:
        cells = rep.reproduce(args.table)
    except rep.UnknownTableError as exc:
        raise InputError(str(exc)) from exc
    _emit(args, rep.render_csv(cells) if args.format == "csv" else rep.render_text(args.table, cells))
    return EXIT_OK


# --- parser --------------------------------------------------------------


def _common(p):
    p.add_argument("--scenario", metavar="FILE", help="scenario JSON file (defaults: reference scenario)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario field, e.g. traffic.packet_bits=2400 (repeatable)")
    p.add_argument("--radio-table", metavar="CSV", help="radio latency table CSV")
    p.add_argument("--mode", choices=COMPOSITION_MODES, help="composition mode")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--output", metavar="FILE", help="write to FILE instead of standard output")
    p.add_argument("--internet-cdf", metavar="CSV", help="UPF-to-AS latency CDF (t_ms, F)")
    p.add_argument("--peering-cdf", metavar="CSV", help="peering latency CDF (t_ms, F)")


def _single(p):
    p.add_argument("--deployment", help="mec-gnb (default), mec-m1, mec-cn or centralized")
    p.add_argument("--service", help="lloa (default) or hloa")
    p.add_argument("--lambda", dest="lam", type=float, help="per-gNB UL rate, pkt/s (default 2080)")
    p.add_argument("--alpha", type=float, help="link capacity share, UL and DL (default 0.01)")
    p.add_argument("--mno", choices=MNO_CHOICES, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="v2xlat", description="V2N2V end-to-end latency model")
    sub = parser.add_subparsers(dest="command", required=True)
    jobs = os.cpu_count() or 1

    p = sub.add_parser("compose", help="latency breakdown and verdict for one scenario")
    _single(p)
    _common(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("sweep", help="breakdowns over deployment x service x alpha x lambda")
    p.add_argument("--deployments", type=_list(str), default=[d.slug for d in DEPLOYMENTS])
    p.add_argument("--services", type=_list(str), default=["lloa", "hloa"])
    p.add_argument("--lambdas", type=_list(float), default=list(map(float, PAPER_LAMBDAS)))
    p.add_argument("--alphas", type=_list(float), default=[0.001, 0.01])
    p.add_argument("--mno", choices=MNO_CHOICES, default=None)
    p.add_argument("--jobs", type=int, default=jobs)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dimension", help="minimum alpha meeting stability and the latency target")
    p.add_argument("--deployment", "--deployments", dest="deployments", type=_list(str), default=["mec-gnb"])
    p.add_argument("--service", "--services", dest="services", type=_list(str), default=["lloa"])
    p.add_argument("--lambda", "--lambdas", dest="lambdas", type=_list(float), default=[2080.0])
    p.add_argument("--mno", dest="mnos", type=_list(str), default=["single"],
                   help="comma list of " + ", ".join(MNO_CHOICES))
    p.add_argument("--jobs", type=int, default=jobs)
    _common(p)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("simulate", help="discrete-event check of the TN+CN model")
    _single(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--packets", type=int, default=200_000)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce-table", help="recompute a reference table beside its published values")
    p.add_argument("table", help=", ".join(rep.TABLE_IDS))
    _common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "mnos", None):
        bad = [m for m in args.mnos if m not in MNO_CHOICES]
        if bad:
            parser.error(f"unknown --mno value(s): {', '.join(bad)}")
    try:
        return args.func(args)
    except Infeasible as exc:
        if exc.output:
            _emit(args, exc.output)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
