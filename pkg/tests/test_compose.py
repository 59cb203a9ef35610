import math

import pytest

from v2xlat.compose import (
    LEVELS,
    compose,
    read_csv,
    render_breakdown,
    render_text,
    row_record,
    sweep,
    write_csv,
)
from v2xlat.scenario import DEPLOYMENTS, HLOA, LLOA, PAPER_LAMBDAS, default_paper_scenario


def test_gnb_lloa_single():
    b = compose(default_paper_scenario("mec-gnb", LLOA, 2080, 0.001))
    assert b.service_total("single") * 1e3 == pytest.approx(4.265, abs=0.01)
    assert b.verdict("single") == "meets"


def test_gnb_hloa_multi_violates():
    b = compose(default_paper_scenario("mec-gnb", HLOA, 2080, 0.001, mno_mode="multi-local"))
    assert b.service_total("multi") * 1e3 == pytest.approx(10.096, abs=0.01)
    assert b.verdict() == "violates"


def test_centralized_violates():
    b = compose(default_paper_scenario("centralized", LLOA, 2080, 0.01))
    assert b.service_total("single") * 1e3 == pytest.approx(28.17, rel=0.005)
    assert b.verdict("single") == "violates"
    assert "UPF-AS" in b.components


def test_upf_as_only_for_centralized():
    for dep in DEPLOYMENTS:
        b = compose(default_paper_scenario(dep))
        assert ("UPF-AS" in b.components) == (dep.value == "Centralized")


def test_unstable_cell_is_unsupported():
    b = compose(default_paper_scenario("mec-cn", alpha=0.001))
    assert b.single is None and b.verdict() == "unsupported"
    assert "not sufficient" in b.cause


def test_radio_unsupported():
    b = compose(default_paper_scenario("mec-gnb", HLOA, 20800))
    assert b.verdict() == "unsupported"
    assert not b.components["radio"].supported


def test_percentile_sum_is_exact_and_multi_adds_peering():
    for dep in DEPLOYMENTS:
        for svc in (LLOA, HLOA):
            b = compose(default_paper_scenario(dep, svc, 2080, 0.01))
            parts = [r.triple for n, r in b.components.items() if n != "peering"]
            pp = b.components["peering"].triple
            for lv in LEVELS:
                if b.single.at(lv) is None:
                    # radio rows only carry the service percentile
                    assert any(t.at(lv) is None for t in parts)
                    continue
                assert b.single.at(lv) == pytest.approx(math.fsum(t.at(lv) for t in parts), abs=1e-12)
                assert b.multi.at(lv) - b.single.at(lv) == pytest.approx(pp.at(lv), abs=1e-12)


@pytest.mark.parametrize("dep", DEPLOYMENTS)
@pytest.mark.parametrize("svc", [LLOA, HLOA])
def test_convolution_not_above_percentile_sum(dep, svc):
    s = default_paper_scenario(dep, svc, 2080, 0.01)
    ps = compose(s)
    cv = compose(s.replace(composition_mode="convolution"))
    for mno in ("single", "multi"):
        assert cv.service_total(mno) <= ps.service_total(mno) * (1 + 1e-9)
        assert cv.total(mno).mean == pytest.approx(ps.total(mno).mean, rel=1e-3)


def test_verdict_monotonicity():
    for dep in ("mec-gnb", "mec-m1"):
        grid = [(lam, a) for lam in (1040, 2080, 4160, 8320) for a in (0.0015, 0.002, 0.003, 0.01)]
        verdicts = {(lam, a): compose(default_paper_scenario(dep, HLOA, lam, a)).verdict() for lam, a in grid}
        for (l2, a2), v2 in verdicts.items():
            if v2 != "meets":
                continue
            for (l1, a1), v1 in verdicts.items():
                if l1 <= l2 and a1 >= a2:
                    assert v1 == "meets", (dep, l1, a1, l2, a2)


def test_mean_percentile_disagreement_flagged():
    b = compose(default_paper_scenario("mec-m1", HLOA, 2080, 0.001))
    assert b.verdict("single") == "violates"
    assert b.mean_verdict("single") == "meets"
    assert b.disagreement("single")
    assert "mean-based: meets" in render_breakdown(b)


def test_full_sweep_cardinality_and_order():
    rows = sweep(None, PAPER_LAMBDAS, (0.001, 0.01), DEPLOYMENTS, ("lloa", "hloa"))
    assert len(rows) == 160
    assert [r.lam for r in rows[:10]] == list(PAPER_LAMBDAS)
    assert rows[0].deployment.value == "MEC@gNB" and rows[-1].deployment.value == "Centralized"
    assert all(r.error is None for r in rows)


def test_single_cell_sweep_equals_compose():
    s = default_paper_scenario("mec-m1", HLOA, 4160, 0.003)
    (row,) = sweep(s, [4160], [0.003], ["mec-m1"], ["hloa"])
    b = compose(s)
    assert row.breakdown.single == b.single and row.breakdown.multi == b.multi


def test_parallel_sweep_is_byte_identical():
    args = (None, (2080, 8320, 31200), (0.001, 0.01), DEPLOYMENTS, ("lloa", "hloa"))
    seq = write_csv([row_record(r) for r in sweep(*args, jobs=1)])
    par = write_csv([row_record(r) for r in sweep(*args, jobs=4)])
    assert seq == par


def test_csv_round_trip(tmp_path):
    records = [row_record(r) for r in sweep(None, (2080, 41600), (0.001, 0.01), DEPLOYMENTS, ("lloa", "hloa"))]
    text = write_csv(records)
    path = tmp_path / "sweep.csv"
    path.write_text(text)
    again = read_csv(str(path))
    assert write_csv(again) == text
    assert render_text(again) == render_text(records)


def test_sweep_records_cell_errors():
    rows = sweep(None, [2080], [0.7], ["mec-gnb"], ["lloa"])
    assert rows[0].breakdown is None and "alpha" in rows[0].error
    assert row_record(rows[0])["note"].startswith("error:")


def test_empty_axis_rejected():
    with pytest.raises(ValueError):
        sweep(None, [], [0.01], DEPLOYMENTS, ["lloa"])
