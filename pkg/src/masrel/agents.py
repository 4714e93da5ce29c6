"""Travel agents (TAs) and the per-node stationary agent (SA) policies."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .radio import FailureParams
from .topology import TopologySnapshot


class StaleRouteError(ValueError):
    pass


class Migration(enum.Enum):
    MOVED = "moved"
    BLOCKED = "blocked"


class Admission(enum.Enum):
    ADMIT = "admit"
    KILL = "kill"


@dataclass
class TravelAgent:
    id: int
    owner: int
    location: int
    visited: set[int] = field(default_factory=set)
    # node -> step of this agent's most recent visit (its RSN)
    rsn: dict[int, int] = field(default_factory=dict)
    sp_collected: set[int] = field(default_factory=set)
    r_i: float = 1.0
    alive: bool = True
    retries_remaining: int = 3
    max_retries: int = 3
    retry_target: int | None = None
    waiting: bool = False
    finished: bool = False
    stalled: int = 0
    end_step: int | None = None
    spawned: bool = False
    # node -> tie-break rank; None ranks nodes by id
    preference: tuple[int, ...] | None = None

    @classmethod
    def create(cls, agent_id: int, owner: int, step: int, r_i: float = 1.0,
               max_retries: int = 3, spawned: bool = False,
               preference: tuple[int, ...] | None = None) -> "TravelAgent":
        return cls(id=agent_id, owner=owner, location=owner, visited={owner},
                   rsn={owner: step}, r_i=r_i, retries_remaining=max_retries,
                   max_retries=max_retries, spawned=spawned, preference=preference)

    @property
    def active(self) -> bool:
        return self.alive and not self.finished

    def rank(self, node: int) -> int:
        return node if self.preference is None else self.preference[node]


@dataclass
class NodeServiceLedger:
    node: int
    is_provider: bool = False
    known_providers: set[int] = field(default_factory=set)
    incoming_count: int = 0
    arrivals: deque = field(default_factory=deque)

    def __post_init__(self) -> None:
        if self.is_provider:
            self.known_providers.add(self.node)

    def open_window(self, step: int, window: int = 1) -> None:
        """Forget arrivals older than ``window`` steps (window 1 resets every step)."""
        while self.arrivals and self.arrivals[0] <= step - window:
            self.arrivals.popleft()
        self.incoming_count = len(self.arrivals)


def choose_next(a: TravelAgent, s: TopologySnapshot) -> int | None:
    """Pick the agent's next hop among the current neighbours of its location.

    Rules, first match wins:
      1. unvisited neighbour adjacent to at least two visited nodes;
      2. any unvisited neighbour;
      3. visited neighbour that itself has an unvisited neighbour (lowest RSN);
      4. neighbour with the lowest RSN.
    Remaining ties go to the lowest ``a.rank``, which is the node id unless the
    agent carries its own preference order. Returns None when the location has
    no neighbours.
    """
    nbrs = s.nbrs[a.location] if s.nbrs else tuple(np.flatnonzero(s.adjacency[a.location]))
    if not nbrs:
        return None
    visited = a.visited
    unvisited = [w for w in nbrs if w not in visited]
    if unvisited:
        if len(visited) >= 2:
            common = [w for w in unvisited
                      if sum(1 for x in s.nbrs[w] if x in visited) >= 2]
            if common:
                return min(common, key=a.rank)
        return min(unvisited, key=a.rank)

    frontier = [w for w in nbrs if any(x not in visited for x in s.nbrs[w])]
    pool = frontier or nbrs
    return min(pool, key=lambda w: (a.rsn.get(w, -1), a.rank(w)))


def attempt_migration(a: TravelAgent, target: int, s: TopologySnapshot, fp: FailureParams,
                      rng: np.random.Generator, step: int) -> Migration:
    """Try one hop. Succeeds with probability ``p_t_migration``.

    A blocked agent stays put and spends one retry on this target; once the
    budget is gone it sits out the next step and the budget is restored.
    """
    if not s.adjacency[a.location, target]:
        raise StaleRouteError(f"stale route: {target} is not adjacent to {a.location}")
    if target != a.retry_target:
        a.retry_target = target
        a.retries_remaining = a.max_retries
    if rng.random() < fp.p_t_migration:
        a.location = target
        a.visited.add(target)
        a.rsn[target] = step
        a.retries_remaining = a.max_retries
        a.retry_target = None
        return Migration.MOVED
    a.retries_remaining -= 1
    if a.retries_remaining <= 0:
        a.waiting = True
        a.retries_remaining = a.max_retries
    return Migration.BLOCKED


def exchange(a: TravelAgent, ledger: NodeServiceLedger) -> None:
    if ledger.is_provider:
        a.sp_collected.add(ledger.node)
    a.sp_collected |= ledger.known_providers
    ledger.known_providers |= a.sp_collected


def record_visit(a: TravelAgent, ledger: NodeServiceLedger, step: int) -> None:
    """Swap service knowledge with the host node and count the arrival."""
    if a.location != ledger.node:
        raise ValueError(f"agent {a.id} is at {a.location}, not {ledger.node}")
    exchange(a, ledger)
    ledger.arrivals.append(step)
    ledger.incoming_count += 1


def sa_admit(ledger: NodeServiceLedger, a: TravelAgent, max_fr: int) -> Admission:
    """Kill the arriving agent if the node's incoming frequency exceeds ``max_fr``."""
    if ledger.incoming_count > max_fr:
        a.alive = False
        return Admission.KILL
    return Admission.ADMIT


def sa_spawn(ledger: NodeServiceLedger, sp_total: int, current_m: int, step: int, *,
             agent_id: int, r_i: float = 1.0, max_m: int | None = None,
             max_retries: int = 3, preference: tuple[int, ...] | None = None,
             ) -> TravelAgent | None:
    """Create a fresh TA at this node while its provider knowledge is incomplete."""
    if len(ledger.known_providers) >= sp_total:
        return None
    if max_m is not None and current_m >= max_m:
        return None
    agent = TravelAgent.create(agent_id, ledger.node, step, r_i=r_i,
                               max_retries=max_retries, spawned=True, preference=preference)
    exchange(agent, ledger)
    return agent
