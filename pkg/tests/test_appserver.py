import dataclasses

import pytest

from v2xlat.appserver import aggregated_gnbs, as_latency, as_load, backlog_check, min_processors
from v2xlat.dists import Deterministic
from v2xlat.scenario import PAPER_LAMBDAS, AsHardwareProfile, default_paper_scenario


def with_profile(s, **kw):
    return s.replace(as_profile=dataclasses.replace(s.as_profile, **kw))


def test_slot_bound_percentiles():
    d = as_latency(default_paper_scenario("mec-gnb"))
    assert d.mean() == pytest.approx(0.5e-3)
    assert d.percentile(0.90) * 1e3 == pytest.approx(0.6977, rel=0.01)
    assert d.percentile(0.9999) * 1e3 == pytest.approx(0.7499, rel=0.01)


def test_no_traffic_gives_zero_latency():
    s = default_paper_scenario("mec-gnb", lam=0.0)
    assert as_latency(s, "forwarder") == Deterministic(0.0)
    assert as_latency(s) == Deterministic(0.0)


def test_forwarder_mean_from_hardware():
    s = default_paper_scenario("mec-gnb")
    s = s.replace(traffic=dataclasses.replace(s.traffic, packet_bits=2400))
    s = with_profile(s, processors=2, parallel_units=24, frequency=3.6e9)
    assert as_latency(s, "forwarder").mean() == pytest.approx(1.04 * 2400 * 200 / 1.728e11)


def test_forwarder_scaling():
    s = default_paper_scenario("mec-m1")
    base = as_load(s).mean_latency
    assert as_load(s.with_lambda(4160)).mean_latency == pytest.approx(2 * base)
    assert as_load(with_profile(s, processors=8)).mean_latency == pytest.approx(base / 2)
    s2 = s.replace(traffic=dataclasses.replace(s.traffic, packet_bits=2 * s.traffic.packet_bits))
    assert as_load(s2).mean_latency == pytest.approx(2 * base)


def test_exponential_theta_model():
    s = with_profile(default_paper_scenario("mec-gnb"), theta_model="exponential")
    d = as_latency(s)
    assert d.mean() == pytest.approx(0.5e-3)
    assert d.percentile(0.9) > 0.75e-3


@pytest.mark.parametrize("lam", PAPER_LAMBDAS)
def test_gnb_mec_never_backlogged(lam):
    assert not backlog_check(default_paper_scenario("mec-gnb", lam=lam)).backlogged


def test_cn_mec_backlogged_at_high_load():
    status = backlog_check(default_paper_scenario("mec-cn", lam=41600))
    assert status.backlogged
    assert "backlogged" in str(status)


def test_huge_capacity_is_stable():
    s = with_profile(default_paper_scenario("centralized", lam=41600), frequency=1e18)
    assert not backlog_check(s).backlogged


@pytest.mark.parametrize("dep,lam", [("mec-gnb", 2080), ("mec-m1", 41600), ("mec-gnb", 41600), ("mec-m1", 2080)])
def test_min_processors_edge(dep, lam):
    assert min_processors(default_paper_scenario(dep, lam=lam)) == 1


@pytest.mark.parametrize("dep", ["mec-cn", "centralized"])
@pytest.mark.parametrize("lam", [2080, 41600])
def test_min_processors_is_tight(dep, lam):
    s = default_paper_scenario(dep, lam=lam)
    n = min_processors(s)
    assert not backlog_check(with_profile(s, processors=n)).backlogged
    if n > 1:
        assert backlog_check(with_profile(s, processors=n - 1)).backlogged


def test_aggregation_override():
    s = default_paper_scenario("mec-cn")
    assert aggregated_gnbs(s) == 1728
    assert aggregated_gnbs(with_profile(s, aggregated_gnbs=10)) == 10
    assert AsHardwareProfile(aggregated_gnbs=0).violations()
