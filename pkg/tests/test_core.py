import pytest

from v2xlat.core import cn_latency, cn_mean, cn_rates, intermediate_nodes
from v2xlat.dists import InstabilityError
from v2xlat.scenario import DEPLOYMENTS, DeploymentKind, default_paper_scenario


def test_upf_rates():
    assert cn_rates(default_paper_scenario("mec-cn")).lam_ul == 3_594_240
    gnb = cn_rates(default_paper_scenario("mec-gnb"))
    assert gnb.lam_ul == 2080 and gnb.d_cn == 0


def test_intermediate_nodes():
    assert intermediate_nodes(200.0, 100.0) == 1
    assert intermediate_nodes(99.0, 100.0) == 0


def test_centralized_round_trip_mean():
    d = cn_latency(default_paper_scenario("centralized", alpha=0.01))
    assert d.mean() * 1e3 == pytest.approx(2.0006, rel=0.02)
    assert cn_mean(default_paper_scenario("centralized", alpha=0.01)) == pytest.approx(d.mean(), rel=1e-4)


@pytest.mark.parametrize("dep", [d for d in DEPLOYMENTS if d.is_mec])
def test_mec_round_trip_mean(dep):
    assert cn_mean(default_paper_scenario(dep, alpha=0.1)) * 1e3 == pytest.approx(1e-5, rel=0.25)
    assert cn_mean(default_paper_scenario(dep, alpha=0.01)) * 1e3 == pytest.approx(1e-4, rel=0.25)


def test_light_load_floor():
    s = default_paper_scenario("centralized", lam=1e-6, alpha=0.01)
    cn = cn_rates(s)
    # per direction: two UPF transits of 2/mu plus 2/mu per intermediate node
    floor = 2 * s.topology.d_cn / s.topology.v + 2 * (2 * 2 + 2 * cn.S) / cn.mu_ul
    assert cn_mean(s) == pytest.approx(floor, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.002, 0.01, 0.1, 0.4])
def test_propagation_floor(alpha):
    s = default_paper_scenario("centralized", alpha=alpha)
    assert cn_latency(s).mean() >= 2 * s.topology.d_cn / s.topology.v


def test_unstable_upf():
    with pytest.raises(InstabilityError, match="UPF"):
        cn_latency(default_paper_scenario("centralized", alpha=0.001))


def test_percentiles_ordered():
    d = cn_latency(default_paper_scenario(DeploymentKind.MEC_CN, alpha=0.002))
    assert d.mean() <= d.percentile(0.9) * 1.5
    assert d.percentile(0.9) < d.percentile(0.9999)
