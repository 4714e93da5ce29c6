"""Episode simulation and Monte Carlo aggregation of agent-system reliability."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, TextIO

import numpy as np

from . import mobility
from .agents import (
    Admission,
    Migration,
    NodeServiceLedger,
    TravelAgent,
    attempt_migration,
    choose_next,
    exchange,
    record_visit,
    sa_admit,
    sa_spawn,
)
from .config import ReliabilityMode, ScenarioConfig, TieBreak
from .radio import sample_agent_reliability, sample_node_lifetime
from .topology import TopologySnapshot, build_snapshot, cluster_members, dump_edges


def agent_task_reliability(n: int, n_total: int,
                           mode: ReliabilityMode | str = ReliabilityMode.FRACTIONAL) -> float:
    """Share of the task done by an agent that visited ``n`` of ``n_total`` nodes."""
    if n_total < 1:
        raise ValueError("node count must be >= 1")
    if not 0 <= n <= n_total:
        raise ValueError(f"visited count {n} outside [0, {n_total}]")
    if ReliabilityMode(mode) is ReliabilityMode.ALL_OR_NOTHING:
        return 1.0 if n == n_total else 0.0
    return n / n_total


def episode_lambda(results: Sequence[tuple[float, float]]) -> float:
    """Mean of task reliability weighted by software reliability, over k agents."""
    if not results:
        raise ValueError("no agents")
    return math.fsum(lam * r for lam, r in results) / len(results)


def mas_reliability(agent_reliabilities: Sequence[float], m_t: int | None = None) -> float:
    """Mean reliability of the agents present; an empty system scores 0."""
    m_t = len(agent_reliabilities) if m_t is None else m_t
    if m_t == 0:
        return 0.0
    return math.fsum(agent_reliabilities) / m_t


def node_instantaneous_reliability(known: int, sp_total: int) -> float:
    if sp_total == 0:
        raise ValueError("no providers configured")
    if not 0 <= known <= sp_total:
        raise ValueError(f"known providers {known} outside [0, {sp_total}]")
    return known / sp_total


def service_reliability(series: Sequence[float]) -> float:
    """Time average of a node's instantaneous discovery reliability."""
    if len(series) == 0:
        raise ValueError("empty series")
    return math.fsum(series) / len(series)


@dataclass
class EpisodeResult:
    lambda_per_agent: list[tuple[float, float]]
    lambda_t: float
    r_mas_series: list[float]
    node_r_series: np.ndarray  # (step_count, n_nodes); empty columns when sp_total == 0
    r_service_per_node: list[float]
    m_series: list[int]
    step_count: int
    n_killed: int = 0
    n_spawned: int = 0
    observer: int = 0
    agent_owners: list[int] = field(default_factory=list)  # aligned with lambda_per_agent

    @property
    def r_service_observer(self) -> float:
        if not self.r_service_per_node:
            return math.nan
        return self.r_service_per_node[self.observer]

    @property
    def final_m(self) -> int:
        return self.m_series[-1]

    def summary(self) -> "EpisodeSummary":
        return EpisodeSummary(self.lambda_t, self.r_service_observer, self.final_m,
                              self.step_count, self.n_killed, self.n_spawned)


@dataclass(frozen=True)
class EpisodeSummary:
    lambda_t: float
    r_service: float
    final_m: int
    step_count: int
    n_killed: int
    n_spawned: int


@dataclass
class ReliabilityReport:
    mean_lambda: float
    std_lambda: float
    per_episode: list[EpisodeSummary]
    q: int
    config_echo: ScenarioConfig
    mean_r_service: float = math.nan
    mean_final_m: float = math.nan
    extra: dict = field(default_factory=dict)


def _streams(seed: int) -> dict[str, np.random.Generator]:
    # independent substreams keep e.g. trajectories identical across an lfp sweep
    names = ("placement", "mobility", "links", "migration", "routing")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(s) for name, s in zip(names, children)}


def read_edge_list(path: str | Path, n: int) -> np.ndarray:
    """Fixed in-range relation from ``i j`` lines (``#`` comments allowed)."""
    adj = np.zeros((n, n), dtype=bool)
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        i, j = (int(t) for t in line.split()[:2])
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"{path}:{lineno}: bad edge {i} {j}")
        adj[i, j] = adj[j, i] = True
    return adj


def run_episode(cfg: ScenarioConfig, seed: int, *,
                snapshot_out: TextIO | None = None,
                on_step: Callable[[TopologySnapshot, list[TravelAgent]], None] | None = None,
                ) -> EpisodeResult:
    """Simulate one episode of agents roaming the changing network."""
    cfg.validate()
    rng = _streams(seed)
    n = cfg.n_nodes
    mp = cfg.resolved_mobility()
    fp = cfg.resolved_failure()
    dt = mp.delta_t
    mode = cfg.reliability_mode
    fixed = read_edge_list(cfg.edge_list, n) if cfg.edge_list else None

    place = rng["placement"]
    providers = set(place.choice(n, size=cfg.sp_total, replace=False).tolist())
    owners = place.integers(0, n, size=cfg.m_agents).tolist()
    lifetimes = np.asarray(sample_node_lifetime(fp, place, size=n), dtype=float)
    r_i = sample_agent_reliability(fp, cfg.duration_s)

    def preference() -> tuple[int, ...] | None:
        if cfg.tie_break is TieBreak.LOWEST_ID:
            return None
        return tuple(rng["routing"].permutation(n).tolist())

    nodes = mobility.init_kinematics(n, mp, rng["mobility"])
    ledgers = [NodeServiceLedger(v, is_provider=v in providers) for v in range(n)]
    agents: list[TravelAgent] = []
    for owner in owners:
        a = TravelAgent.create(len(agents), owner, 0, r_i=r_i, max_retries=cfg.max_retries,
                               preference=preference())
        exchange(a, ledgers[owner])
        agents.append(a)

    r_mas: list[float] = []
    m_series: list[int] = []
    node_r: list[list[float]] = []
    n_killed = n_spawned = 0
    snap: TopologySnapshot | None = None

    def task(a: TravelAgent) -> float:
        return agent_task_reliability(len(a.visited), n, mode)

    def finish(a: TravelAgent, step: int) -> None:
        nonlocal n_spawned
        a.finished = True
        a.end_step = step
        home = ledgers[a.owner]
        home.known_providers |= a.sp_collected
        if not cfg.spawn:
            return
        present = sum(1 for b in agents if b.alive)
        if len(home.known_providers) >= cfg.sp_total or present >= cfg.m_agents:
            return
        child = sa_spawn(home, cfg.sp_total, present, step, agent_id=len(agents),
                         r_i=r_i, max_m=cfg.m_agents, max_retries=cfg.max_retries,
                         preference=preference())
        if child is not None:
            agents.append(child)
            n_spawned += 1

    for step in range(cfg.max_steps):
        if step > 0:
            nodes = mobility.step_all(nodes, mp, rng["mobility"])
        positions = np.array([(k.x, k.y) for k in nodes])
        operational = lifetimes > step * dt
        snap = build_snapshot(positions, cfg.radio, fp, snap, rng["links"],
                              operational=operational, step=step, dt=dt, fixed_edges=fixed)
        if snapshot_out is not None:
            dump_edges(snap, snapshot_out)
        for ledger in ledgers:
            ledger.open_window(step, cfg.fr_window)
        members = cluster_members(snap)
        cluster_of = snap.cluster_id.tolist()

        for a in list(agents):
            if not a.active:
                continue
            if a.waiting:
                a.waiting = False
                continue
            if members[cluster_of[a.location]] <= a.visited:
                a.stalled += 1
                if a.stalled > cfg.patience:
                    finish(a, step)
                continue
            a.stalled = 0
            target = choose_next(a, snap)
            if target is None:
                continue
            if attempt_migration(a, target, snap, fp, rng["migration"], step) is not Migration.MOVED:
                continue
            ledger = ledgers[target]
            record_visit(a, ledger, step)
            if sa_admit(ledger, a, cfg.max_fr) is Admission.KILL:
                a.end_step = step
                n_killed += 1
            elif len(a.visited) == n:
                finish(a, step)

        if on_step is not None:
            on_step(snap, agents)
        present = [a for a in agents if a.alive]
        m_series.append(len(present))
        r_mas.append(mas_reliability([task(a) * a.r_i for a in present]))
        if cfg.sp_total:
            node_r.append([len(led.known_providers) / cfg.sp_total for led in ledgers])
        if not any(a.active for a in agents):
            break

    for a in agents:
        if a.end_step is None:
            a.end_step = len(m_series) - 1
    counted = [a for a in agents if a.alive or cfg.include_killed]
    per_agent = [(task(a), a.r_i) for a in counted]
    lam = episode_lambda(per_agent) if per_agent else 0.0
    node_arr = np.asarray(node_r, dtype=float).reshape(len(m_series), n if cfg.sp_total else 0)
    r_service = [service_reliability(node_arr[:, v]) for v in range(node_arr.shape[1])]
    return EpisodeResult(
        lambda_per_agent=per_agent,
        lambda_t=lam,
        r_mas_series=r_mas,
        node_r_series=node_arr,
        r_service_per_node=r_service,
        m_series=m_series,
        step_count=len(m_series),
        n_killed=n_killed,
        n_spawned=n_spawned,
        observer=cfg.observer,
        agent_owners=[a.owner for a in counted],
    )


def _episode_summary(args: tuple[ScenarioConfig, int]) -> EpisodeSummary:
    cfg, seed = args
    return run_episode(cfg, seed).summary()


def run_episodes(cfg: ScenarioConfig, seeds: Sequence[int], jobs: int = 1) -> list[EpisodeSummary]:
    """Run episodes, in parallel when ``jobs > 1``; results keep seed order."""
    work = [(cfg, s) for s in seeds]
    if jobs <= 1 or len(work) <= 1:
        return [_episode_summary(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_episode_summary, work, chunksize=max(1, len(work) // (4 * jobs))))


def monte_carlo(cfg: ScenarioConfig, base_seed: int | None = None, jobs: int = 1) -> ReliabilityReport:
    """Average episode reliability over ``cfg.q_runs`` episodes seeded ``base_seed + q``."""
    cfg.validate()
    base = cfg.seed if base_seed is None else base_seed
    summaries = run_episodes(cfg, [base + q for q in range(cfg.q_runs)], jobs)
    lams = np.array([s.lambda_t for s in summaries])
    std = float(lams.std(ddof=1)) if len(lams) > 1 else 0.0
    services = [s.r_service for s in summaries]
    return ReliabilityReport(
        mean_lambda=math.fsum(lams) / len(lams),
        std_lambda=std,
        per_episode=summaries,
        q=len(summaries),
        config_echo=cfg,
        mean_r_service=math.fsum(services) / len(services),
        mean_final_m=math.fsum(s.final_m for s in summaries) / len(summaries),
    )
