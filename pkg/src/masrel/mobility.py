"""Node mobility: random waypoint, smooth random, and reference point group models.

Every step function is pure: it takes a :class:`Kinematics`, the shared
:class:`MobilityParams` and a ``numpy.random.Generator`` and returns a new
:class:`Kinematics`. Positions are kept inside the rectangular area by
mirror reflection (:func:`apply_boundary`).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


class Model(str, enum.Enum):
    RWMM = "RWMM"
    SRMM = "SRMM"
    RPGM = "RPGM"


@dataclass
class MobilityParams:
    model: Model = Model.SRMM
    v_max: float = 5.0
    pause_time: float = 30.0
    a_max: float = 1.0
    sdr: float = 0.2
    adr: float = 0.2
    phi_max: float = math.pi
    # node id -> leader id; leaders are absent (RPGM only, filled by default_groups)
    group_map: dict[int, int] = field(default_factory=dict)
    # 450 m square keeps 25 nodes with a ~300 m radio range mostly connected
    area_width: float = 450.0
    area_height: float = 450.0
    delta_t: float = 1.0
    # mean interval between SRMM target-speed epochs
    srmm_epoch_mean: float = 60.0
    # freeze all nodes in place (fixed-topology scenarios)
    static: bool = False

    def __post_init__(self) -> None:
        self.model = Model(self.model)

    def validate(self, n_nodes: int | None = None) -> None:
        self.model = Model(self.model)
        if not (0.0 < self.sdr < 1.0 and 0.0 < self.adr < 1.0):
            raise ValueError("sdr and adr must lie strictly between 0 and 1")
        for name in ("v_max", "delta_t", "area_width", "area_height"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("pause_time", "a_max", "phi_max", "srmm_epoch_mean"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for node, leader in self.group_map.items():
            if node == leader:
                raise ValueError(f"node {node} cannot follow itself")
            if leader in self.group_map:
                raise ValueError(f"leader {leader} of node {node} is itself a follower")
            if n_nodes is not None and not (0 <= node < n_nodes and 0 <= leader < n_nodes):
                raise ValueError(f"group_map entry {node}->{leader} out of range")


@dataclass(frozen=True)
class Kinematics:
    x: float
    y: float
    v: float = 0.0
    phi: float = 0.0
    a: float = 0.0
    waypoint: tuple[float, float] | None = None
    pause_remaining: float = 0.0
    # SRMM target-speed process state
    target_v: float | None = None
    epoch_remaining: float = math.inf


def default_groups(n_nodes: int, group_size: int = 5) -> dict[int, int]:
    """One leader per ``group_size`` nodes; followers are dealt round-robin."""
    n_leaders = max(1, math.ceil(n_nodes / group_size))
    return {i: i % n_leaders for i in range(n_leaders, n_nodes)}


def _reflect(value: float, upper: float) -> tuple[float, bool]:
    """Mirror ``value`` into [0, upper]; report whether the direction flipped."""
    period = 2.0 * upper
    value = math.fmod(value, period)
    if value < 0:
        value += period
    if value > upper:
        return period - value, True
    return value, False


def apply_boundary(x: float, y: float, phi: float, p: MobilityParams) -> tuple[float, float, float]:
    """Reflect an out-of-area position about the violated edge.

    A flip in x maps the heading to ``pi - phi``; a flip in y maps it to ``-phi``.
    """
    flipped_x = flipped_y = False
    if not 0.0 <= x <= p.area_width:
        x, flipped_x = _reflect(x, p.area_width)
    if not 0.0 <= y <= p.area_height:
        y, flipped_y = _reflect(y, p.area_height)
    if flipped_x:
        phi = math.pi - phi
    if flipped_y:
        phi = -phi
    if flipped_x or flipped_y:
        phi = math.atan2(math.sin(phi), math.cos(phi))
    return x, y, phi


def _advance(k: Kinematics, v: float, phi: float, a: float, dt: float) -> tuple[float, float]:
    c, s = math.cos(phi), math.sin(phi)
    travel = dt * v + 0.5 * a * dt * dt
    return k.x + travel * c, k.y + travel * s


def _draw_waypoint(k: Kinematics, p: MobilityParams, rng: np.random.Generator) -> Kinematics:
    wx = float(rng.uniform(0.0, p.area_width))
    wy = float(rng.uniform(0.0, p.area_height))
    # (0.1 v_max, v_max] avoids the slow-node stagnation of plain RWMM
    v = float(p.v_max - rng.uniform(0.0, 0.9 * p.v_max))
    phi = math.atan2(wy - k.y, wx - k.x)
    return replace(k, waypoint=(wx, wy), v=v, phi=phi, pause_remaining=0.0, a=0.0)


def step_rwmm(k: Kinematics, p: MobilityParams, rng: np.random.Generator) -> Kinematics:
    """Random waypoint step.

    Without a waypoint the node drifts along its heading at constant speed.
    """
    dt = p.delta_t
    if k.pause_remaining > 0:
        remaining = k.pause_remaining - dt
        if remaining > 0:
            return replace(k, pause_remaining=remaining, v=0.0)
        return _draw_waypoint(replace(k, pause_remaining=0.0), p, rng)

    if k.waypoint is None:
        x, y = _advance(k, k.v, k.phi, 0.0, dt)
        x, y, phi = apply_boundary(x, y, k.phi, p)
        return replace(k, x=x, y=y, phi=phi, a=0.0)

    wx, wy = k.waypoint
    dist = math.hypot(wx - k.x, wy - k.y)
    if dist <= k.v * dt:
        if p.pause_time > 0:
            return replace(k, x=wx, y=wy, v=0.0, waypoint=None, pause_remaining=p.pause_time)
        return _draw_waypoint(replace(k, x=wx, y=wy), p, rng)
    phi = math.atan2(wy - k.y, wx - k.x)
    x, y = _advance(k, k.v, phi, 0.0, dt)
    x, y, phi = apply_boundary(x, y, phi, p)
    return replace(k, x=x, y=y, phi=phi, a=0.0)


def step_srmm(k: Kinematics, p: MobilityParams, rng: np.random.Generator) -> Kinematics:
    """Smooth random mobility step with constant acceleration over the step.

    Speed changes are bounded by ``a_max * delta_t``: a new target speed is
    drawn at exponentially spaced epochs and approached at a random
    acceleration, which is zeroed once the target is reached.
    """
    dt = p.delta_t
    x, y = _advance(k, k.v, k.phi, k.a, dt)
    x, y, phi = apply_boundary(x, y, k.phi, p)

    v = min(max(k.v + k.a * dt, 0.0), p.v_max)
    a = k.a
    target = k.target_v
    if target is not None and (a > 0 and v >= target or a < 0 and v <= target or a == 0):
        # target lies between old and new speed, so the jump stays within |a| dt
        v, a, target = target, 0.0, None
    elif v == 0.0 or v == p.v_max:
        a = 0.0

    epoch = k.epoch_remaining - dt
    if epoch <= 0:
        target = float(rng.uniform(0.0, p.v_max))
        mag = float(p.a_max - rng.uniform(0.0, p.a_max))
        a = math.copysign(mag, target - v) if target != v else 0.0
        if a == 0.0:
            target = None
        phi = float(rng.uniform(-math.pi, math.pi))
        epoch = float(rng.exponential(p.srmm_epoch_mean)) if p.srmm_epoch_mean > 0 else math.inf
    return replace(k, x=x, y=y, v=v, phi=phi, a=a, target_v=target, epoch_remaining=epoch)


def step_rpgm(k: Kinematics, leader: Kinematics, p: MobilityParams, rng: np.random.Generator) -> Kinematics:
    """Group-follower step: deviate from the (already advanced) leader's velocity."""
    u1, u2 = rng.uniform(-1.0, 1.0, size=2)
    v = max(leader.v + float(u1) * p.sdr * p.v_max, 0.0)
    phi = leader.phi + float(u2) * p.adr * p.phi_max
    x, y = _advance(k, v, phi, 0.0, p.delta_t)
    x, y, phi = apply_boundary(x, y, phi, p)
    return replace(k, x=x, y=y, v=v, phi=phi, a=0.0)


def init_kinematics(n_nodes: int, p: MobilityParams, rng: np.random.Generator) -> list[Kinematics]:
    """Uniform initial placement; followers start near their leader."""
    nodes: list[Kinematics] = []
    for _ in range(n_nodes):
        x = float(rng.uniform(0.0, p.area_width))
        y = float(rng.uniform(0.0, p.area_height))
        nodes.append(Kinematics(x=x, y=y))
    if p.static:
        return nodes

    out: list[Kinematics] = []
    for i, k in enumerate(nodes):
        if p.model == Model.RPGM and i in p.group_map:
            lead = nodes[p.group_map[i]]
            r = float(rng.uniform(0.0, 0.1 * min(p.area_width, p.area_height)))
            ang = float(rng.uniform(-math.pi, math.pi))
            x, y, _ = apply_boundary(lead.x + r * math.cos(ang), lead.y + r * math.sin(ang), 0.0, p)
            out.append(Kinematics(x=x, y=y))
        elif p.model == Model.SRMM:
            epoch = float(rng.exponential(p.srmm_epoch_mean)) if p.srmm_epoch_mean > 0 else math.inf
            out.append(Kinematics(
                x=k.x, y=k.y,
                v=float(rng.uniform(0.0, p.v_max)),
                phi=float(rng.uniform(-math.pi, math.pi)),
                epoch_remaining=epoch,
            ))
        else:
            out.append(_draw_waypoint(k, p, rng))
    return out


def step_all(nodes: list[Kinematics], p: MobilityParams, rng: np.random.Generator) -> list[Kinematics]:
    """Advance every node one step. RPGM leaders move first (by RWMM)."""
    if p.static:
        return nodes
    if p.model == Model.RWMM:
        return [step_rwmm(k, p, rng) for k in nodes]
    if p.model == Model.SRMM:
        return [step_srmm(k, p, rng) for k in nodes]

    out = list(nodes)
    for i, k in enumerate(nodes):
        if i not in p.group_map:
            out[i] = step_rwmm(k, p, rng)
    for i, k in enumerate(nodes):
        if i in p.group_map:
            out[i] = step_rpgm(k, out[p.group_map[i]], p, rng)
    return out
