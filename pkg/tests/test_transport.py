import dataclasses
import math

import numpy as np
import pytest

from v2xlat.dists import InstabilityError
from v2xlat.scenario import DEPLOYMENTS, default_paper_scenario
from v2xlat.transport import downlink_flow, tn_latency, tn_rates, tn_shift, upf_uplink_rate


def rates_by_name(s):
    return {r.name: r for r in tn_rates(s)}


def test_mec_m1_rates():
    s = default_paper_scenario("mec-m1", lam=2080, alpha=0.01)
    s = s.replace(traffic=dataclasses.replace(s.traffic, packet_bits=2400))
    r = rates_by_name(s)
    assert r["M1/UL"].lam == pytest.approx(12480)
    assert r["M1/UL"].mu == pytest.approx(1.25e6)
    assert r["gNB/UL"].mu == pytest.approx(41666.7, rel=1e-6)


def test_mec_m1_downlink_split():
    s = default_paper_scenario("mec-m1")
    total, children = downlink_flow(s, "M1")
    assert total == pytest.approx(12480)
    assert children == pytest.approx((2080.0,) * 6)


def test_zero_load():
    s = default_paper_scenario("mec-cn", lam=0.0)
    assert all(r.lam == 0 and r.rho == 0 for r in tn_rates(s))


@pytest.mark.parametrize("dep", DEPLOYMENTS[1:])
def test_flow_conservation_with_custom_split(dep):
    s = default_paper_scenario(dep)
    split = {"M1": (0.3, 0.3, 0.1, 0.1, 0.1, 0.1)}
    s = s.replace(traffic=dataclasses.replace(s.traffic, p_split=split, copies=3))
    for node in ("M3", "M2", "M1"):
        try:
            total, children = downlink_flow(s, node)
        except KeyError:
            continue
        assert math.isclose(sum(children), total, rel_tol=1e-12)


def test_shifts_per_deployment():
    expected = {"MEC@gNB": (0.0, 0.4), "MEC@M1": (0.03, 0.8), "MEC@CN": (0.75, 1.6), "Centralized": (0.75, 1.6)}
    for dep in DEPLOYMENTS:
        prop, proc = tn_shift(default_paper_scenario(dep))
        assert (round(prop * 1e3, 12), round(proc * 1e3, 12)) == expected[dep.value]


@pytest.mark.parametrize("dep,alpha,mean,p90,p9999", [
    ("mec-m1", 0.01, 0.881, 0.949, 1.304),
    ("mec-gnb", 0.01, 0.425, 0.458, 0.633),
    ("mec-gnb", 0.001, 0.908, 1.571, 5.083),
    ("mec-cn", 0.1, 2.355, 2.361, 2.396),
])
def test_tn_reference_values(dep, alpha, mean, p90, p9999):
    d = tn_latency(default_paper_scenario(dep, lam=2080, alpha=alpha))
    assert d.mean() * 1e3 == pytest.approx(mean, rel=0.02)
    assert d.percentile(0.90) * 1e3 == pytest.approx(p90, rel=0.02)
    assert d.percentile(0.9999) * 1e3 == pytest.approx(p9999, rel=0.02)


def test_mec_cn_unstable_at_small_alpha():
    with pytest.raises(InstabilityError, match="not sufficient"):
        tn_latency(default_paper_scenario("mec-cn", alpha=0.001))


def test_percentile_from_shift_and_mean_excess():
    d = tn_latency(default_paper_scenario("mec-gnb", alpha=0.01))
    assert d.percentile(0.9) == pytest.approx(d.shift + d.mean_excess * math.log(10.0))


@pytest.mark.parametrize("dep", DEPLOYMENTS)
def test_mean_monotone(dep):
    alphas = np.geomspace(0.002, 0.4, 8)
    means = [tn_latency(default_paper_scenario(dep, lam=1040, alpha=a)).mean() for a in alphas]
    assert all(b < a for a, b in zip(means, means[1:]))
    lams = [520, 1040, 2080, 4160]
    means = [tn_latency(default_paper_scenario(dep, lam=lam, alpha=0.1)).mean() for lam in lams]
    assert all(b > a for a, b in zip(means, means[1:]))


def test_hypoexponential_model_has_same_mean_smaller_tail():
    s = default_paper_scenario("mec-m1", alpha=0.0025)
    single = tn_latency(s)
    hypo = tn_latency(s.replace(tn_model="hypoexponential"))
    assert hypo.mean() == pytest.approx(single.mean(), rel=1e-4)
    assert hypo.percentile(0.9) < single.percentile(0.9)


def test_upf_rate_is_attach_node_aggregate():
    assert upf_uplink_rate(default_paper_scenario("mec-gnb")) == 2080
    assert upf_uplink_rate(default_paper_scenario("mec-cn")) == 1728 * 2080
