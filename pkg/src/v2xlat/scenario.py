"""Scenario description: topology, traffic, capacity shares, radio data,
application-server hardware and the service being evaluated.

Every value object is a frozen dataclass.  ``default_paper_scenario`` builds
the reference evaluation setup (three-level optical transport network,
200 km core, 30 kHz radio numerology).
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources


class ScenarioError(ValueError):
    """Invalid scenario input."""


class DeploymentKind(str, enum.Enum):
    MEC_GNB = "MEC@gNB"
    MEC_M1 = "MEC@M1"
    MEC_CN = "MEC@CN"
    CENTRALIZED = "Centralized"

    @property
    def slug(self):
        return {"MEC@gNB": "mec-gnb", "MEC@M1": "mec-m1", "MEC@CN": "mec-cn", "Centralized": "centralized"}[self.value]

    @property
    def is_mec(self):
        return self is not DeploymentKind.CENTRALIZED

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "-")
        for kind in cls:
            if key in (kind.value.lower(), kind.slug, kind.name.lower().replace("_", "-")):
                return kind
        raise ScenarioError(f"unknown deployment {text!r}; expected one of {[k.slug for k in cls]}")


DEPLOYMENTS = tuple(DeploymentKind)
MNO_MODES = ("single", "multi-local", "multi-remote")
COMPOSITION_MODES = ("percentile-sum", "convolution")
PAPER_LAMBDAS = (1040, 2080, 4160, 5200, 6240, 8320, 10400, 20800, 31200, 41600)


@dataclass(frozen=True)
class ServiceProfile:
    name: str
    latency_requirement: float  # seconds
    reliability: float  # percentile the requirement applies to

    def violations(self):
        out = []
        if not 0.0 < self.reliability < 1.0:
            out.append(("service.reliability", f"must lie in (0, 1), got {self.reliability}"))
        if not self.latency_requirement > 0:
            out.append(("service.latency_requirement", f"must be > 0, got {self.latency_requirement}"))
        return out


LLOA = ServiceProfile("LLoA", 25e-3, 0.90)
HLOA = ServiceProfile("HLoA", 10e-3, 0.9999)
SERVICES = {"lloa": LLOA, "hloa": HLOA}


def parse_service(text):
    if isinstance(text, ServiceProfile):
        return text
    try:
        return SERVICES[str(text).strip().lower()]
    except KeyError:
        raise ScenarioError(f"unknown service {text!r}; expected lloa or hloa") from None


@dataclass(frozen=True)
class Topology:
    """Hierarchical transport network plus core network geometry.

    Distances in km, capacities in bit/s, ``v`` in km/s, ``t_p`` in seconds.
    Rings are represented only by their fan-in counts.
    """

    g: int = 6  # gNBs per M1
    m1: int = 24  # M1 nodes per M2
    m2: int = 12  # M2 nodes per M3
    d_gnb_m1: float = 3.0
    d_m1_m2: float = 12.0
    d_m2_m3: float = 60.0
    d_cn: float = 200.0
    d_cn_max: float = 100.0
    c_gnb_m1: float = 10e9
    c_m1_m2: float = 300e9
    c_m2_m3: float = 6e12
    c_cn: float = 6e12
    c_upf_as: float = 10e12
    v: float = 200_000.0
    t_p: float = 0.2e-3

    @property
    def gnbs_per_m2(self):
        return self.g * self.m1

    @property
    def gnbs_per_m3(self):
        return self.g * self.m1 * self.m2

    def violations(self):
        out = []
        for name in ("g", "m1", "m2"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                out.append((f"topology.{name}", f"fan-in must be an integer >= 1, got {val}"))
        for name in ("d_gnb_m1", "d_m1_m2", "d_m2_m3", "d_cn"):
            if getattr(self, name) < 0:
                out.append((f"topology.{name}", "distance must be >= 0"))
        if not self.d_cn_max > 0:
            out.append(("topology.d_cn_max", "must be > 0"))
        for name in ("c_gnb_m1", "c_m1_m2", "c_m2_m3", "c_cn", "c_upf_as"):
            if not getattr(self, name) > 0:
                out.append((f"topology.{name}", "capacity must be > 0"))
        if not self.v > 0:
            out.append(("topology.v", "propagation speed must be > 0"))
        if self.t_p < 0:
            out.append(("topology.t_p", "processing delay must be >= 0"))
        return out


@dataclass(frozen=True)
class TrafficSpec:
    """Per-gNB uplink packet rate and packet size.

    ``lambda_gnb_ul`` wins when given; otherwise the rate is derived as
    ``n_ue * packet_rate * (1 - p_loss)``.  ``p_split`` maps a splitting node
    ("M1", "M2", "M3") to the downlink fractions over its children.
    """

    lambda_gnb_ul: float | None = 2080.0
    packet_bits: float = 2471.0
    packet_rate: float | None = None
    n_ue: int | None = None
    p_loss: float = 0.0
    copies: int = 1
    p_split: dict | None = None

    @property
    def arrival_rate(self):
        if self.lambda_gnb_ul is not None:
            return float(self.lambda_gnb_ul)
        if self.n_ue is None or self.packet_rate is None:
            raise ScenarioError("traffic needs lambda_gnb_ul or both n_ue and packet_rate")
        return self.n_ue * self.packet_rate * (1.0 - self.p_loss)

    def split(self, node, fan_out):
        """Downlink fractions at ``node``; uniform unless configured."""
        if self.p_split and node in self.p_split:
            return tuple(float(x) for x in self.p_split[node])
        return (1.0 / fan_out,) * fan_out

    def violations(self, topology=None):
        out = []
        try:
            lam = self.arrival_rate
        except ScenarioError as exc:
            return [("traffic.lambda_gnb_ul", str(exc))]
        if lam < 0:
            out.append(("traffic.lambda_gnb_ul", "arrival rate must be >= 0"))
        if not self.packet_bits > 0:
            out.append(("traffic.packet_bits", "packet size must be > 0"))
        if not 0.0 <= self.p_loss < 1.0:
            out.append(("traffic.p_loss", "residual loss must lie in [0, 1)"))
        if int(self.copies) != self.copies or self.copies < 1:
            out.append(("traffic.copies", "downlink copies M must be an integer >= 1"))
        fan = {"M1": topology.g, "M2": topology.m1, "M3": topology.m2} if topology else {}
        for node, fracs in (self.p_split or {}).items():
            if node not in ("M1", "M2", "M3"):
                out.append((f"traffic.p_split.{node}", "unknown splitting node"))
                continue
            if any(f < 0 for f in fracs):
                out.append((f"traffic.p_split.{node}", "split fractions must be >= 0"))
            if not math.isclose(sum(fracs), 1.0, abs_tol=1e-9):
                out.append((f"traffic.p_split.{node}", f"split fractions must sum to 1 (sum p_k = {sum(fracs):.6g})"))
            if node in fan and len(fracs) != fan[node]:
                out.append((f"traffic.p_split.{node}", f"expected {fan[node]} fractions, got {len(fracs)}"))
        return out


@dataclass(frozen=True)
class AlphaAllocation:
    ul: float
    dl: float

    def violations(self):
        out = []
        for name, val in (("ul", self.ul), ("dl", self.dl)):
            if not 0.0 < val < 0.5:
                out.append((f"alpha.{name}", f"capacity share must satisfy 0 < alpha < 0.5, got {val}"))
        if not self.ul + self.dl < 1.0:
            out.append(("alpha", "alpha_ul + alpha_dl must be < 1"))
        return out


@dataclass(frozen=True)
class RadioRow:
    mean: float | None  # seconds
    p90: float | None
    p9999: float | None
    supported: bool = True


@dataclass(frozen=True)
class RadioLatencyTable:
    """UL+DL radio latency rows keyed by (service name, per-gNB rate)."""

    rows: dict = field(default_factory=dict)

    @classmethod
    def from_csv(cls, source):
        """Load from a path or a text stream; latencies in the file are in ms."""
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source, newline="") as fh:
                text = fh.read()
        rows = {}
        for rec in csv.DictReader(io.StringIO(text)):
            def ms(key):
                val = (rec.get(key) or "").strip()
                return float(val) * 1e-3 if val and val != "-" else None

            supported = rec.get("supported", "true").strip().lower() in ("1", "true", "yes")
            row = RadioRow(ms("mean_ms"), ms("p90_ms"), ms("p9999_ms"), supported)
            if not supported:
                # the mean is still informative; percentiles beyond the requirement are not
                row = RadioRow(row.mean, None, None, False)
            rows[(rec["service"].strip(), float(rec["lambda"]))] = row
        return cls(rows)

    @classmethod
    def default(cls):
        text = resources.files("v2xlat.data").joinpath("radio_table.csv").read_text()
        return cls.from_csv(io.StringIO(text))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["service", "lambda", "mean_ms", "p90_ms", "p9999_ms", "supported"])

        def ms(x):
            return "" if x is None else repr(round(x * 1e3, 12))

        for (svc, lam), row in sorted(self.rows.items()):
            w.writerow([svc, repr(lam), ms(row.mean), ms(row.p90), ms(row.p9999), str(row.supported).lower()])
        return buf.getvalue()

    def lookup(self, service, lam):
        """Row for ``service`` at rate ``lam``.

        Rates between tabulated points are linearly interpolated; a gap next
        to an unsupported row is unsupported.  Rates below the table use the
        first row, rates above it are unsupported.
        """
        name = service.name if isinstance(service, ServiceProfile) else str(service)
        pts = sorted((k[1], v) for k, v in self.rows.items() if k[0] == name)
        if not pts:
            raise ScenarioError(f"radio table has no rows for service {name!r}")
        for x, row in pts:
            if math.isclose(x, lam, rel_tol=1e-12):
                return row
        if lam < pts[0][0]:
            return pts[0][1]
        if lam > pts[-1][0]:
            return RadioRow(None, None, None, False)
        for (x0, r0), (x1, r1) in zip(pts, pts[1:]):
            if x0 < lam < x1:
                if not (r0.supported and r1.supported):
                    return RadioRow(None, None, None, False)
                w = (lam - x0) / (x1 - x0)

                def mix(a, b):
                    return None if a is None or b is None else a + w * (b - a)

                return RadioRow(mix(r0.mean, r1.mean), mix(r0.p90, r1.p90), mix(r0.p9999, r1.p9999), True)
        raise AssertionError("unreachable")

    def violations(self):
        out = []
        for key, row in self.rows.items():
            vals = [v for v in (row.mean, row.p90, row.p9999) if v is not None]
            if row.supported and any(b < a for a, b in zip(vals, vals[1:])):
                out.append((f"radio[{key[0]},{key[1]:g}]", "requires mean <= p90 <= p9999"))
            if not row.supported and (row.p90 is not None or row.p9999 is not None):
                out.append((f"radio[{key[0]},{key[1]:g}]", "unsupported rows carry no percentile values"))
        return out


@dataclass(frozen=True)
class AsHardwareProfile:
    """Application-server compute.

    ``latency_model`` selects how the AS latency is produced: "forwarder"
    applies the eta*B*theta/F forwarding cost to the configured hardware;
    "slot-bound" assumes the AS has been provisioned so its mean latency
    equals the slot duration ``t_tt`` (the worst case that avoids backlog).
    """

    processors: int = 4
    parallel_units: int = 48
    frequency: float = 3.6e9
    theta_model: str = "uniform"  # "uniform" U(100, 300) or "exponential" mean 200
    t_tt: float = 0.5e-3
    latency_model: str = "slot-bound"
    aggregated_gnbs: int | None = None

    THETA_MEAN = 200.0

    @property
    def capacity(self):
        return self.processors * self.parallel_units * self.frequency

    def violations(self):
        out = []
        if int(self.processors) != self.processors or self.processors < 1:
            out.append(("as_profile.processors", "must be an integer >= 1"))
        if self.parallel_units < 1:
            out.append(("as_profile.parallel_units", "must be >= 1"))
        if not self.frequency > 0:
            out.append(("as_profile.frequency", "must be > 0"))
        if not self.t_tt > 0:
            out.append(("as_profile.t_tt", "must be > 0"))
        if self.theta_model not in ("uniform", "exponential"):
            out.append(("as_profile.theta_model", "must be 'uniform' or 'exponential'"))
        if self.latency_model not in ("slot-bound", "forwarder"):
            out.append(("as_profile.latency_model", "must be 'slot-bound' or 'forwarder'"))
        if self.aggregated_gnbs is not None and self.aggregated_gnbs < 1:
            out.append(("as_profile.aggregated_gnbs", "must be >= 1"))
        return out


MEC_AS = dict(parallel_units=48, frequency=3.6e9)
CLOUD_AS = dict(parallel_units=56, frequency=4.3e9)
PAPER_AS_PROFILES = {
    DeploymentKind.MEC_GNB: AsHardwareProfile(processors=2, **MEC_AS),
    DeploymentKind.MEC_M1: AsHardwareProfile(processors=4, **MEC_AS),
    DeploymentKind.MEC_CN: AsHardwareProfile(processors=4, **MEC_AS),
    DeploymentKind.CENTRALIZED: AsHardwareProfile(processors=23, **CLOUD_AS),
}


@dataclass(frozen=True)
class Scenario:
    deployment: DeploymentKind
    topology: Topology
    traffic: TrafficSpec
    alpha: AlphaAllocation
    radio: RadioLatencyTable
    as_profile: AsHardwareProfile
    service: ServiceProfile
    mno_mode: str = "single"
    composition_mode: str = "percentile-sum"
    tn_model: str = "single-exponential"  # or "hypoexponential"

    def with_alpha(self, alpha):
        return dataclasses.replace(self, alpha=AlphaAllocation(alpha, alpha))

    def with_lambda(self, lam):
        return dataclasses.replace(self, traffic=dataclasses.replace(self.traffic, lambda_gnb_ul=lam))

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    @property
    def peering_kind(self):
        """Peering used in the multi-operator total."""
        if self.mno_mode == "multi-local":
            return "local"
        if self.mno_mode == "multi-remote":
            return "remote"
        return "local" if self.deployment.is_mec else "remote"

    # --- serialization -------------------------------------------------
    def to_dict(self):
        return {
            "deployment": self.deployment.value,
            "topology": dataclasses.asdict(self.topology),
            "traffic": {k: (dict(v) if isinstance(v, dict) else v) for k, v in dataclasses.asdict(self.traffic).items()},
            "alpha": dataclasses.asdict(self.alpha),
            "radio": self.radio.to_csv(),
            "as_profile": dataclasses.asdict(self.as_profile),
            "service": dataclasses.asdict(self.service),
            "mno_mode": self.mno_mode,
            "composition_mode": self.composition_mode,
            "tn_model": self.tn_model,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        try:
            deployment = DeploymentKind.parse(data["deployment"])
            service = data.get("service", LLOA)
            if isinstance(service, dict):
                service = ServiceProfile(**service)
            else:
                service = parse_service(service)
            base = default_paper_scenario(deployment, service, 2080.0, 0.01, check=False)
            radio = data.get("radio")
            if radio is None or radio == "default":
                radio = base.radio
            elif isinstance(radio, str) and "\n" in radio:
                radio = RadioLatencyTable.from_csv(io.StringIO(radio))
            else:
                radio = RadioLatencyTable.from_csv(radio)
            traffic = dict(data.get("traffic", {}))
            if traffic.get("p_split"):
                traffic["p_split"] = {k: tuple(v) for k, v in traffic["p_split"].items()}
            alpha = data.get("alpha", dataclasses.asdict(base.alpha))
            if isinstance(alpha, (int, float)):
                alpha = {"ul": alpha, "dl": alpha}
            return cls(
                deployment=deployment,
                topology=dataclasses.replace(base.topology, **data.get("topology", {})),
                traffic=dataclasses.replace(base.traffic, **traffic),
                alpha=AlphaAllocation(**alpha),
                radio=radio,
                as_profile=dataclasses.replace(base.as_profile, **data.get("as_profile", {})),
                service=service,
                mno_mode=data.get("mno_mode", "single"),
                composition_mode=data.get("composition_mode", "percentile-sum"),
                tn_model=data.get("tn_model", "single-exponential"),
            )
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed scenario document: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def validate(scenario):
    """List of ``(field, message)`` violations; empty when the scenario is valid."""
    out = []
    out += scenario.topology.violations()
    out += scenario.traffic.violations(scenario.topology)
    out += scenario.alpha.violations()
    out += scenario.radio.violations()
    out += scenario.as_profile.violations()
    out += scenario.service.violations()
    if scenario.mno_mode not in MNO_MODES:
        out.append(("mno_mode", f"must be one of {MNO_MODES}"))
    if scenario.composition_mode not in COMPOSITION_MODES:
        out.append(("composition_mode", f"must be one of {COMPOSITION_MODES}"))
    if scenario.tn_model not in ("single-exponential", "hypoexponential"):
        out.append(("tn_model", "must be 'single-exponential' or 'hypoexponential'"))
    return out


def default_paper_scenario(deployment, service=LLOA, lam=2080.0, alpha=0.01, *, check=True, **overrides):
    """Reference evaluation scenario for one deployment.

    ``alpha`` is applied to both directions.  Keyword ``overrides`` replace
    top-level Scenario fields (e.g. ``mno_mode="multi-local"``).
    """
    deployment = DeploymentKind.parse(deployment)
    service = parse_service(service)
    scenario = Scenario(
        deployment=deployment,
        topology=Topology(),
        traffic=TrafficSpec(lambda_gnb_ul=float(lam)),
        alpha=AlphaAllocation(alpha, alpha),
        radio=_default_radio(),
        as_profile=PAPER_AS_PROFILES[deployment],
        service=service,
    )
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
    if check:
        problems = validate(scenario)
        if problems:
            raise ScenarioError("; ".join(f"{f}: {m}" for f, m in problems))
    return scenario


_RADIO_CACHE = []


def _default_radio():
    if not _RADIO_CACHE:
        _RADIO_CACHE.append(RadioLatencyTable.default())
    return _RADIO_CACHE[0]
