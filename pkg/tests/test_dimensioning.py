import pytest

from v2xlat.compose import compose
from v2xlat.dimensioning import (
    ALPHA_MAX,
    alpha_min,
    alpha_min_sweep,
    monotonicity_report,
    result_record,
    stability_bound,
    write_csv,
)
from v2xlat.dists import InstabilityError
from v2xlat.scenario import HLOA, LLOA, PAPER_LAMBDAS, default_paper_scenario


def meets(scenario, alpha):
    b = compose(scenario.with_alpha(alpha))
    return b.verdict() == "meets"


@pytest.mark.parametrize("dep,svc,lam,mno", [
    ("mec-gnb", LLOA, 8320, "single"),
    ("mec-m1", HLOA, 2080, "multi-local"),
    ("mec-cn", LLOA, 2080, "single"),
    ("mec-cn", HLOA, 8320, "multi-local"),
])
def test_boundary_property(dep, svc, lam, mno):
    s = default_paper_scenario(dep, svc, lam, mno_mode=mno)
    r = alpha_min(s)
    assert r.feasible
    assert meets(s, r.alpha_min)
    low = 0.999 * r.alpha_min
    try:
        assert not meets(s, low)
    except InstabilityError:
        pass


def test_stability_binding_reports_node():
    r = alpha_min(default_paper_scenario("mec-cn", LLOA, 2080))
    assert r.binding == "stability(M3/UL)"
    assert r.alpha_min == pytest.approx(r.stability_bound, rel=1e-4)
    assert max(u for _, u in r.utilizations) < 1.0


def test_stability_bound_closed_form():
    s = default_paper_scenario("mec-cn")
    bound, node = stability_bound(s)
    assert node == "M3/UL"
    assert bound == pytest.approx(1728 * 2080 * s.traffic.packet_bits / s.topology.c_cn)


def test_same_alpha_single_and_multi_when_stability_binds():
    s = default_paper_scenario("mec-cn", LLOA, 2080)
    a = alpha_min(s, mno_mode="single").alpha_min
    b = alpha_min(s, mno_mode="multi-local").alpha_min
    assert a == b


@pytest.mark.parametrize("svc,lam", [(HLOA, 10400), (HLOA, 41600), (LLOA, 41600)])
def test_radio_infeasible(svc, lam):
    r = alpha_min(default_paper_scenario("mec-gnb", svc, lam))
    assert not r.feasible and r.binding == "infeasible(radio)"


def test_latency_infeasible_even_at_half():
    r = alpha_min(default_paper_scenario("centralized", LLOA, 2080))
    assert r.binding == "infeasible(latency)" and "0.5" in r.cause


def test_higher_service_needs_more_alpha():
    for lam in (2080, 4160, 8320):
        lo = alpha_min(default_paper_scenario("mec-m1", LLOA, lam)).alpha_min
        hi = alpha_min(default_paper_scenario("mec-m1", HLOA, lam)).alpha_min
        assert hi >= lo


def test_deeper_deployments_need_more_alpha():
    vals = [alpha_min(default_paper_scenario(d, HLOA, 2080)).alpha_min for d in ("mec-gnb", "mec-m1", "mec-cn")]
    assert vals == sorted(vals)


def test_light_load_is_latency_bound_and_tiny():
    s = default_paper_scenario("mec-gnb", LLOA, 1e-3)
    r = alpha_min(s)
    assert r.feasible and r.binding == "latency(L_REQ)"
    assert r.stability_bound < r.alpha_min < 1e-3


def test_sweep_and_monotonicity_report():
    res = alpha_min_sweep(default_paper_scenario("mec-m1"), PAPER_LAMBDAS, ["mec-m1"], ["lloa", "hloa"],
                          ["single", "multi"], jobs=2)
    assert len(res) == 2 * 2 * len(PAPER_LAMBDAS)
    assert monotonicity_report(res) == []
    assert {r.mno_mode for r in res} == {"single", "multi-local"}
    text = write_csv([result_record(r) for r in res])
    assert text.count("\n") == len(res) + 1
    assert "infeasible(radio)" in text


def test_search_stays_below_limit():
    r = alpha_min(default_paper_scenario("mec-cn", HLOA, 8320, mno_mode="multi-local"))
    assert r.alpha_min < ALPHA_MAX
