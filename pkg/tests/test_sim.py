import numpy as np
import pytest

from v2xlat.dists import md1_wait_cdf, mm1_sojourn_mean
from v2xlat.scenario import default_paper_scenario
from v2xlat.sim import NodeSpec, SimConfig, deployment_chain, simulate, simulate_deployment


def mm1(lam, mu, n, seed):
    return simulate(SimConfig(seed, n, lam, (NodeSpec("exp", mu),)))


def test_mm1_mean():
    r = mm1(2080, 41667, 1_000_000, 3)
    assert r.mean == pytest.approx(mm1_sojourn_mean(2080, 41667), rel=0.02)


def test_md1_wait_ks():
    r = simulate(SimConfig(5, 1_000_000, 0.8, (NodeSpec("det", 1.0),), record="wait"))
    assert r.ks_distance(lambda t: md1_wait_cdf(0.8, 1.0, t)) < 0.01
    emp = np.mean(r.samples <= 5.0)
    assert emp == pytest.approx(md1_wait_cdf(0.8, 1.0, 5.0), abs=0.005)


def test_no_arrivals():
    r = simulate(SimConfig(0, 1000, 0.0, (NodeSpec("exp", 10.0),)))
    assert r.n == 0 and r.mean is None and r.note == "no arrivals"


def test_reproducible():
    a = mm1(0.5, 1.0, 10_000, 11)
    b = mm1(0.5, 1.0, 10_000, 11)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, mm1(0.5, 1.0, 10_000, 12).samples)


def test_delay_only_chain_is_exact():
    chain = (NodeSpec("det", 0.0, 1e-3), NodeSpec("det", 0.0, 2.5e-4))
    r = simulate(SimConfig(0, 1000, 100.0, chain))
    assert np.all(r.samples == 1e-3 + 2.5e-4)


def test_unstable_flagged():
    r = mm1(1.2, 1.0, 200_000, 1)
    assert r.unstable_by_design and not r.converged
    assert "growing" in r.note


def test_error_shrinks_like_root_n():
    mu, lam = 1.0, 0.5
    exact = mm1_sojourn_mean(lam, mu)
    err = {n: np.sqrt(np.mean([(mm1(lam, mu, n, s).mean - exact) ** 2 for s in range(8)]))
           for n in (100_000, 1_000_000)}
    ratio = err[100_000] / err[1_000_000]
    assert 1.5 < ratio < 6.5  # sqrt(10) expected


def test_warmup_split_halves_agree():
    r = mm1(0.9, 1.0, 400_000, 2)
    half = r.n // 2
    a, b = r.samples[:half].mean(), r.samples[half:].mean()
    assert abs(a - b) / b < 0.1


def test_empirical_cdf_valid(tmp_path):
    r = mm1(0.5, 1.0, 5000, 4)
    F = r.cdf().cdf(np.linspace(0, 30, 300))
    assert np.all(np.diff(F) >= 0) and F[-1] == pytest.approx(1.0)
    path = tmp_path / "s.csv"
    r.to_csv(path)
    assert len(path.read_text().splitlines()) == r.n + 1


def test_bad_config():
    with pytest.raises(ValueError):
        simulate(SimConfig(0, 10, 1.0, (NodeSpec("exp", 2.0),), warmup=10))
    with pytest.raises(ValueError):
        simulate(SimConfig(0, 10, 1.0, (NodeSpec("gamma", 2.0),)))


def test_chain_structure():
    lam, chain = deployment_chain(default_paper_scenario("centralized"))
    names = [n.name for n in chain]
    assert names[0] == "TN fixed"
    assert names.index("UPF1/UL") < names.index("CN/UL") < names.index("UPF2/UL") < names.index("UPF1/DL")
    assert all(n.isolated for n in chain if n.name.startswith("UPF"))


def test_mec_m1_round_trip_mean():
    res = simulate_deployment(default_paper_scenario("mec-m1", lam=2080, alpha=0.01), 400_000, seed=7)
    assert res.sim.mean * 1e3 == pytest.approx(0.881, rel=0.03)
    assert abs(res.deviation()["mean"]) < 0.03


def test_mec_gnb_p90_approximation():
    res = simulate_deployment(default_paper_scenario("mec-gnb", lam=2080, alpha=0.1), 400_000, seed=8)
    assert abs(res.deviation()["p90"]) < 0.05
