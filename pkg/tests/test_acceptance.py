"""End-to-end acceptance checks at full Monte Carlo size.

Each test records one PASS/FAIL line that is printed in the session summary.
Run ``python3 tests/test_acceptance.py`` to execute the suite on its own.
"""
import itertools
import math
import os
import time

import networkx as nx
import numpy as np
import pytest
from conftest import record_criterion

from masrel.agents import Migration, TravelAgent, attempt_migration, choose_next
from masrel.cli import main as cli_main
from masrel.config import ScenarioConfig, with_value
from masrel.estimator import (
    agent_task_reliability,
    episode_lambda,
    mas_reliability,
    monte_carlo,
    node_instantaneous_reliability,
    run_episode,
    service_reliability,
)
from masrel.radio import FailureParams, RadioParams, link_capacity, received_power
from masrel.topology import build_snapshot, from_adjacency

pytestmark = pytest.mark.acceptance

JOBS = os.cpu_count() or 1
Q = 200


def mean_lambda(cfg: ScenarioConfig, seed: int = 0) -> float:
    return monte_carlo(cfg, seed, jobs=JOBS).mean_lambda


def fmt(values) -> str:
    return "[" + ", ".join(f"{v:.3f}" for v in values) + "]"


def test_c1_admission_limit_sweep():
    cfg = ScenarioConfig(q_runs=Q)
    limits = list(range(10, 25, 2))
    start = time.perf_counter()
    means = [mean_lambda(with_value(cfg, "max_fr", v)) for v in limits]
    elapsed = time.perf_counter() - start
    monotone = all(a <= b for a, b in zip(means, means[1:]))
    plateau = all(m >= 0.85 for v, m in zip(limits, means) if v >= 18)
    fast = elapsed < 300.0
    ok = monotone and plateau and fast
    record_criterion(1, ok, f"max_fr {limits} -> {fmt(means)}; non-decreasing={monotone}, "
                            f">=0.85 from 18={plateau}, runtime {elapsed:.0f}s (<300s={fast})")
    assert ok


def test_c2_agent_count_sweep():
    cfg = ScenarioConfig(q_runs=Q, max_fr=15)
    cfg.failure.agent_weibull_scale = math.inf  # no software failure
    counts = [5, 10, 15, 20, 25]
    means = dict(zip(counts, (mean_lambda(with_value(cfg, "m_agents", m)) for m in counts)))
    low = [means[m] for m in counts if m <= 15]
    high_ok = all(means[m] < min(low) for m in (20, 25))

    sanity = with_value(cfg, "lfp", 0.0)
    sanity.mobility.static = True
    sanity.failure.node_weibull_scale = math.inf
    sanity.mobility.area_width = sanity.mobility.area_height = 150.0  # diagonal below radio range
    sanity_vals = [mean_lambda(with_value(sanity, "m_agents", m)) for m in (5, 10, 15)]

    ok = min(low) >= 0.95 and high_ok and all(v == 1.0 for v in sanity_vals)
    record_criterion(2, ok, f"m {counts} -> {fmt(means.values())}; m<=15 >=0.95={min(low) >= 0.95}, "
                            f"m in (20, 25) lower={high_ok}; connected static lfp=0 -> {sanity_vals}")
    assert ok


def test_c3_link_failure_threshold():
    cfg = ScenarioConfig(q_runs=Q)
    levels = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    means = dict(zip(levels, (mean_lambda(with_value(cfg, "lfp", p)) for p in levels)))
    vals = list(means.values())
    monotone = all(a >= b for a, b in zip(vals, vals[1:]))
    ratio = means[0.4] / means[0.2]
    ok = monotone and ratio <= 0.7
    record_criterion(3, ok, f"lfp {levels} -> {fmt(vals)}; non-increasing={monotone}, "
                            f"lambda(0.4)/lambda(0.2)={ratio:.3f} (<=0.7)")
    assert ok


def test_c4_mobility_models_converge():
    spreads, table = {}, {}
    for n in (10, 25, 40):
        cfg = ScenarioConfig(q_runs=Q, n_nodes=n)
        vals = [mean_lambda(with_value(cfg, "mobility.model", m)) for m in ("RWMM", "SRMM", "RPGM")]
        table[n] = vals
        spreads[n] = max(vals) - min(vals)
    ok = spreads[40] <= 0.1
    detail = "; ".join(f"N={n} RWMM/SRMM/RPGM {fmt(v)} spread {spreads[n]:.3f}" for n, v in table.items())
    record_criterion(4, ok, f"{detail} (N=40 spread <=0.1)")
    assert ok


def test_c5_network_size_scalability():
    cfg = ScenarioConfig(q_runs=Q, m_agents=25, max_fr=20)
    small = mean_lambda(with_value(cfg, "n_nodes", 20))
    large = mean_lambda(with_value(cfg, "n_nodes", 45))
    ok = abs(large - small) <= 0.1
    record_criterion(5, ok, f"lambda(N=20)={small:.3f}, lambda(N=45)={large:.3f}, "
                            f"gap {abs(large - small):.3f} (<=0.1)")
    assert ok


def test_c6_reachability_oracle(tmp_path):
    rng = np.random.default_rng(2024)
    checked = mismatches = 0
    for k in range(200):
        n = int(rng.integers(1, 7))
        p = float(rng.uniform(0.1, 0.7))
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
        path = tmp_path / f"g{k}.txt"
        path.write_text("".join(f"{i} {j}\n" for i, j in edges))
        cfg = ScenarioConfig(n_nodes=n, m_agents=int(rng.integers(1, 6)), sp_total=min(2, n),
                             duration=5.0, edge_list=str(path))
        cfg.lfp = 0.0
        cfg.failure.p_t_migration = 1.0
        cfg.failure.agent_weibull_scale = math.inf
        cfg.failure.node_weibull_scale = math.inf
        cfg.mobility.static = True
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(edges)
        res = run_episode(cfg, k)
        for (lam, _), owner in zip(res.lambda_per_agent, res.agent_owners):
            checked += 1
            mismatches += lam != len(nx.node_connected_component(g, owner)) / n
    ok = mismatches == 0
    record_criterion(6, ok, f"200 static instances, {checked} agents, {mismatches} mismatches")
    assert ok


def _reference_next(adj: np.ndarray, loc: int, visited: set, rsn: dict, order):
    n = len(adj)
    options = [w for w in range(n) if adj[loc, w]]
    if not options:
        return None
    pref = order if order is not None else range(n)

    def key(w):
        if w not in visited:
            rule = 1 if sum(adj[w, x] and x in visited for x in range(n)) >= 2 else 2
            return (rule, 0, pref[w])
        rule = 3 if any(adj[w, x] and x not in visited for x in range(n)) else 4
        return (rule, rsn[w], pref[w])

    return min(options, key=key)


def test_c7_routing_oracle():
    rng = np.random.default_rng(77)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 10))
        upper = np.triu(rng.random((n, n)) < rng.uniform(0.15, 0.85), 1)
        snap = from_adjacency(upper | upper.T)
        loc = int(rng.integers(n))
        visited = {loc} | {v for v in range(n) if rng.random() < 0.5}
        rsn = {v: int(rng.integers(0, 5)) for v in visited}
        agent = TravelAgent.create(0, loc, 0)
        agent.visited, agent.rsn = set(visited), dict(rsn)
        if rng.random() < 0.5:  # both id ties and per-agent preference orders
            agent.preference = tuple(rng.permutation(n).tolist())
        expected = _reference_next(snap.adjacency, loc, visited, rsn, agent.preference)
        mismatches += choose_next(agent, snap) != expected
    ok = mismatches == 0
    record_criterion(7, ok, f"1000 random snapshots, {mismatches} mismatches")
    assert ok


def test_c8_formula_examples():
    two_ray = RadioParams(p_t_watts=1, g_t=1, g_r=1, h_t=1.5, h_r=1.5)
    unit = RadioParams(p_t_watts=1, g_t=1, g_r=1, h_t=1, h_r=1, noise_watts=1)
    shannon = RadioParams(noise_watts=1e-9, bandwidth_hz=1e6)
    checks = [
        ("task 20/25", agent_task_reliability(20, 25), 0.8, 1e-12),
        ("all-or-nothing 25/25", agent_task_reliability(25, 25, "all_or_nothing"), 1.0, 1e-12),
        ("all-or-nothing 24/25", agent_task_reliability(24, 25, "all_or_nothing"), 0.0, 1e-12),
        ("task 1/1", agent_task_reliability(1, 1), 1.0, 1e-12),
        ("weighted mean", episode_lambda([(1, 1), (0.5, 0.8)]), 0.7, 1e-12),
        ("single agent", episode_lambda([(0.6, 0.5)]), 0.3, 1e-12),
        ("MAS perfect", mas_reliability([1, 1, 1]), 1.0, 1e-12),
        ("MAS mean", mas_reliability([0.5, 1.0]), 0.75, 1e-12),
        ("MAS empty", mas_reliability([]), 0.0, 1e-12),
        ("node 1/2", node_instantaneous_reliability(1, 2), 0.5, 1e-12),
        ("node 2/2", node_instantaneous_reliability(2, 2), 1.0, 1e-12),
        ("node 0/13", node_instantaneous_reliability(0, 13), 0.0, 1e-12),
        ("service mean", service_reliability([0.5, 1.0]), 0.75, 1e-12),
        ("service constant", service_reliability([0.4] * 9), 0.4, 1e-12),
        ("two-ray 100 m", received_power(100.0, two_ray), 5.0625e-8, 1e-9),
        ("two-ray ratio", received_power(80.0, RadioParams()) / received_power(160.0, RadioParams()),
         16.0, 1e-9),
        ("two-ray unit", received_power(1.0, unit), 1.0, 1e-9),
        ("Shannon snr 3", link_capacity(3e-9, shannon), 2e6, 1e-9),
        ("Shannon snr 1", link_capacity(1e-9, shannon), 1e6, 1e-9),
        ("Shannon zero", link_capacity(0.0, shannon), 0.0, 1e-9),
    ]
    bad = [name for name, got, want, tol in checks if not math.isclose(got, want, rel_tol=tol, abs_tol=0.0)]
    ok = not bad
    record_criterion(8, ok, f"{len(checks) - len(bad)}/{len(checks)} formula examples match"
                            + (f"; failed: {bad}" if bad else ""))
    assert ok


def test_c9_byte_identical_outputs(tmp_path):
    fast = ["--set", "q_runs=12", "--set", "n_nodes=15", "--set", "m_agents=10", "--seed", "42"]
    sweep = tmp_path / "spec.txt"
    sweep.write_text("parameter = lfp\nvalues = 0.1, 0.3\noutput = lfp.csv\n")
    blobs = []
    for idx, jobs in enumerate(("1", "2", "2")):
        run_dir, sweep_dir = tmp_path / f"run{idx}", tmp_path / f"sweep{idx}"
        assert cli_main(["run", *fast, "--jobs", jobs, "--out", str(run_dir)]) == 0
        assert cli_main(["sweep", *fast, "--jobs", jobs, "--sweep", str(sweep),
                         "--out", str(sweep_dir)]) == 0
        blobs.append(tuple(p.read_bytes() for p in (run_dir / "report.csv", run_dir / "episodes.csv",
                                                    sweep_dir / "lfp.csv", sweep_dir / "lfp.svg")))
    ok = blobs[0] == blobs[1] == blobs[2]
    record_criterion(9, ok, "run and sweep outputs byte-identical across repeats and --jobs 1/2")
    assert ok


def test_c10_empirical_rates():
    trials = 100_000
    rng = np.random.default_rng(10)
    fp = FailureParams(p_t_migration=0.9)
    snap = from_adjacency(np.array([[False, True], [True, False]]))
    moved = 0
    for _ in range(trials):
        agent = TravelAgent.create(0, 0, 0)
        moved += attempt_migration(agent, 1, snap, fp, rng, step=1) is Migration.MOVED
    migration_rate = moved / trials

    pos = np.array([[0.0, 0.0], [20.0, 0.0]])
    link_fp = FailureParams(lfp=0.2, link_revival_rate=1.0)
    prev = build_snapshot(pos, RadioParams(), FailureParams(lfp=0.0), None, rng)
    ups = fails = 0
    while ups < trials:
        cur = build_snapshot(pos, RadioParams(), link_fp, prev, rng)
        if prev.adjacency[0, 1]:
            ups += 1
            fails += not cur.adjacency[0, 1]
        prev = cur
    failure_rate = fails / trials
    ok = abs(migration_rate - 0.9) <= 0.01 and abs(failure_rate - 0.2) <= 0.01
    record_criterion(10, ok, f"migration {migration_rate:.4f} vs p_t 0.9, "
                             f"link failure {failure_rate:.4f} vs lfp 0.2 (+-0.01)")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
