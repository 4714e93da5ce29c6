"""Radio link model and failure sampling.

Received power follows the far-field two-ray ground approximation and is
turned into capacity with Shannon's formula. A link is usable when its
capacity clears a threshold and the transient up/down process allows it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class CoincidentNodesError(ValueError):
    pass


@dataclass
class RadioParams:
    p_t_watts: float = 0.1
    g_t: float = 1.0
    g_r: float = 1.0
    h_t: float = 1.5
    h_r: float = 1.5
    noise_watts: float = 1e-12
    bandwidth_hz: float = 1e6
    # 6 Mbit/s puts the cutoff distance just under 300 m with the defaults above
    capacity_threshold_bps: float = 6e6

    def validate(self) -> None:
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"radio.{name} must be > 0")


@dataclass
class FailureParams:
    lfp: float = 0.2
    link_revival_rate: float = 0.05
    node_weibull_shape: float = 1.5
    node_weibull_scale: float | None = None
    agent_weibull_shape: float = 1.0
    agent_weibull_scale: float | None = None
    p_t_migration: float = 0.9

    def validate(self) -> None:
        if not 0.0 <= self.lfp <= 1.0:
            raise ValueError("lfp must be in [0, 1]")
        if not 0.0 <= self.p_t_migration <= 1.0:
            raise ValueError("p_t_migration must be in [0, 1]")
        if self.link_revival_rate < 0:
            raise ValueError("link_revival_rate must be >= 0")
        for name in ("node_weibull_shape", "node_weibull_scale",
                     "agent_weibull_shape", "agent_weibull_scale"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0")


def received_power(d: float, rp: RadioParams) -> float:
    """Two-ray ground received power in watts at distance ``d`` metres."""
    if d <= 0:
        raise CoincidentNodesError("coincident nodes")
    return rp.p_t_watts * rp.g_t * rp.g_r * (rp.h_t * rp.h_r) ** 2 / d**4


def link_capacity(p_r: float, rp: RadioParams) -> float:
    """Shannon capacity in bit/s; zero received power means a failed link."""
    if p_r <= 0:
        return 0.0
    return rp.bandwidth_hz * math.log2(1.0 + p_r / rp.noise_watts)


def cutoff_distance(rp: RadioParams) -> float:
    """Largest distance at which capacity still meets the threshold."""
    snr = 2.0 ** (rp.capacity_threshold_bps / rp.bandwidth_hz) - 1.0
    p_min = snr * rp.noise_watts
    return (rp.p_t_watts * rp.g_t * rp.g_r * (rp.h_t * rp.h_r) ** 2 / p_min) ** 0.25


def capacity_matrix(dist: np.ndarray, rp: RadioParams) -> np.ndarray:
    """Vectorised capacity for a distance array; zero distance counts as infinite capacity."""
    with np.errstate(divide="ignore"):
        p_r = rp.p_t_watts * rp.g_t * rp.g_r * (rp.h_t * rp.h_r) ** 2 / dist**4
    return rp.bandwidth_hz * np.log2(1.0 + p_r / rp.noise_watts)


def revival_probability(fp: FailureParams, dt: float) -> float:
    return 1.0 - math.exp(-fp.link_revival_rate * dt)


def link_up(d: float, rp: RadioParams, fp: FailureParams, prev_up: bool,
            rng: np.random.Generator, dt: float = 1.0) -> bool:
    """One step of a single link's state.

    Out of range is always down. In range, an up link fails with probability
    ``lfp``. A transiently failed link revives with ``1 - exp(-rate dt)`` and
    must then also survive the step's failure draw.
    """
    try:
        cap = link_capacity(received_power(d, rp), rp)
    except CoincidentNodesError:
        cap = math.inf
    u = rng.random()
    if cap < rp.capacity_threshold_bps:
        return False
    if prev_up:
        return bool(u >= fp.lfp)
    return bool(u < revival_probability(fp, dt) * (1.0 - fp.lfp))


def weibull_survival(t: float, shape: float, scale: float) -> float:
    if math.isinf(scale):
        return 1.0
    return math.exp(-((t / scale) ** shape))


def sample_node_lifetime(fp: FailureParams, rng: np.random.Generator, size: int | None = None):
    scale = fp.node_weibull_scale
    if scale is None or math.isinf(scale):
        return math.inf if size is None else np.full(size, math.inf)
    return scale * rng.weibull(fp.node_weibull_shape, size=size)


def sample_node_operational(t: float, fp: FailureParams, rng: np.random.Generator) -> bool:
    """Draw a Weibull lifetime; the node is operational at ``t`` iff it outlives ``t``."""
    return bool(sample_node_lifetime(fp, rng) > t)


def sample_agent_reliability(fp: FailureParams, duration: float,
                             rng: np.random.Generator | None = None) -> float:
    """Software reliability of one agent over an episode of ``duration`` seconds.

    This is the Weibull survival probability, so it is deterministic given the
    parameters. ``rng`` is accepted so call sites stay uniform.
    """
    scale = fp.agent_weibull_scale
    if scale is None:
        return 1.0
    return weibull_survival(duration, fp.agent_weibull_shape, scale)
