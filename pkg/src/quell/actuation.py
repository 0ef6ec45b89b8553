"""Resource-share arithmetic: throttling, restoration, and fair-share modeling.

Shares are fractions of a process's attach-time resource allotment, one
per controlled resource (cpu, memory, network, filesystem). The actuator
moves targeted shares in response to threat-index deltas:

* a positive delta lowers each targeted share, stopping at a per-resource
  floor so the process is starved but never wedged;
* a negative delta restores shares toward 1.0;
* a zero delta leaves shares untouched.

Two modes are supported. Additive moves shares by ``throttle_step`` per
unit of delta. Multiplicative scales them by ``(1 - throttle_step)`` per
unit (and ``(1 + throttle_step)`` on restore), which deliberately does
not invert: throttle-then-restore lands below the starting point.

``cfs_timeslice`` and ``weight_for_threat`` model how the share fraction
maps onto a proportional-share scheduler: a process's slice of every
scheduling period is its weight over the sum of weights, so scaling the
weight scales the slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

__all__ = [
    "RESOURCES",
    "ResourceShares",
    "DEFAULT_SHARES",
    "ActuationMode",
    "ActuatorPolicy",
    "SchedulerModel",
    "actuate",
    "actuate_reset",
    "cfs_timeslice",
    "weight_for_threat",
]

RESOURCES = ("cpu", "memory", "network", "filesystem")


@dataclass(frozen=True)
class ResourceShares:
    """Fraction of the attach-time allotment per resource, each in (0, 1]."""

    cpu: float = 1.0
    memory: float = 1.0
    network: float = 1.0
    filesystem: float = 1.0

    def __post_init__(self) -> None:
        for name in RESOURCES:
            value = getattr(self, name)
            if not math.isfinite(value) or not 0.0 < value <= 1.0:
                raise ValueError(f"{name} share must lie in (0, 1], got {value!r}")

    def get(self, resource: str) -> float:
        if resource not in RESOURCES:
            raise ValueError(f"unknown resource {resource!r}")
        return getattr(self, resource)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in RESOURCES}


DEFAULT_SHARES = ResourceShares()


class ActuationMode(Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class ActuatorPolicy:
    """How threat-index deltas translate into share movements.

    ``throttle_step`` is the per-unit-of-delta movement: an absolute
    decrement in additive mode, a fall fraction in multiplicative mode.
    Floors keep each resource usable; the memory floor defaults high
    because collapsing memory tends to kill rather than slow a process.
    """

    throttle_step: float = 0.1
    mode: ActuationMode = ActuationMode.ADDITIVE
    targets: tuple[str, ...] = ("cpu",)
    floor_cpu: float = 0.01
    floor_memory: float = 0.9
    floor_network: float = 1e-6
    floor_filesystem: float = 0.01

    def __post_init__(self) -> None:
        if not math.isfinite(self.throttle_step) or not 0.0 < self.throttle_step < 1.0:
            raise ValueError(f"throttle_step must lie in (0, 1), got {self.throttle_step!r}")
        if not self.targets:
            raise ValueError("at least one target resource is required")
        unknown = [t for t in self.targets if t not in RESOURCES]
        if unknown:
            raise ValueError(f"unknown target resources: {unknown}")
        # Normalize to canonical order with duplicates dropped.
        seen = set(self.targets)
        object.__setattr__(self, "targets", tuple(r for r in RESOURCES if r in seen))
        for name in RESOURCES:
            floor = getattr(self, f"floor_{name}")
            if not math.isfinite(floor) or not 0.0 < floor < 1.0:
                raise ValueError(f"floor_{name} must lie in (0, 1), got {floor!r}")

    def floor(self, resource: str) -> float:
        if resource not in RESOURCES:
            raise ValueError(f"unknown resource {resource!r}")
        return getattr(self, f"floor_{resource}")


def _move(share: float, delta: float, policy: ActuatorPolicy, floor: float) -> float:
    if delta > 0.0:
        if policy.mode is ActuationMode.ADDITIVE:
            moved = share - policy.throttle_step * delta
        else:
            moved = share * (1.0 - policy.throttle_step) ** delta
        return max(floor, moved)
    rise = -delta
    if policy.mode is ActuationMode.ADDITIVE:
        moved = share + policy.throttle_step * rise
    else:
        moved = share * (1.0 + policy.throttle_step) ** rise
    return min(1.0, moved)


def actuate(shares: ResourceShares, threat_delta: float, policy: ActuatorPolicy) -> ResourceShares:
    """Move every targeted share by one threat-index delta.

    Zero delta is an exact identity. Untargeted resources are never
    touched. Targeted shares must already sit at or above their policy
    floor; results stay within [floor, 1.0].
    """
    if not math.isfinite(threat_delta):
        raise ValueError(f"threat delta must be finite, got {threat_delta!r}")
    if threat_delta == 0.0:
        return shares
    values = shares.as_dict()
    for resource in policy.targets:
        current = values[resource]
        floor = policy.floor(resource)
        if current < floor:
            raise ValueError(
                f"{resource} share {current!r} is below the policy floor {floor!r}"
            )
        values[resource] = _move(current, threat_delta, policy, floor)
    return ResourceShares(**values)


def actuate_reset(shares: ResourceShares, policy: ActuatorPolicy) -> ResourceShares:
    """Restore every resource to the full attach-time allotment."""
    del shares, policy  # the restored state is absolute
    return DEFAULT_SHARES


@dataclass(frozen=True)
class SchedulerModel:
    """Proportional-share scheduling period: per-process weights and the
    period length every runnable process shares."""

    target_latency_ms: float
    weights: Mapping[str, float]

    def __post_init__(self) -> None:
        if not math.isfinite(self.target_latency_ms) or self.target_latency_ms <= 0.0:
            raise ValueError("target latency must be positive")
        object.__setattr__(self, "weights", dict(self.weights))
        for name, weight in self.weights.items():
            if not math.isfinite(weight) or weight <= 0.0:
                raise ValueError(f"weight for {name!r} must be positive, got {weight!r}")


def cfs_timeslice(model: SchedulerModel) -> dict[str, float]:
    """Split one scheduling period across processes by relative weight.

    The returned slices sum to the period length (up to rounding).
    """
    if not model.weights:
        raise ValueError("at least one process is required")
    total = sum(model.weights.values())
    return {
        name: model.target_latency_ms * weight / total
        for name, weight in model.weights.items()
    }


def weight_for_threat(
    default_weight: float,
    threat_deltas: Iterable[float],
    throttle_step: float = 0.1,
    weight_floor: float = 1e-6,
) -> float:
    """Scheduler weight after a sequence of threat-index deltas.

    Folds the multiplicative actuator over the deltas starting from the
    full relative weight, respecting the weight floor, then scales the
    default weight by the result. An empty sequence returns the default
    unchanged.
    """
    if not math.isfinite(default_weight) or default_weight <= 0.0:
        raise ValueError(f"default weight must be positive, got {default_weight!r}")
    policy = ActuatorPolicy(
        throttle_step=throttle_step,
        mode=ActuationMode.MULTIPLICATIVE,
        targets=("cpu",),
        floor_cpu=weight_floor,
    )
    shares = DEFAULT_SHARES
    for delta in threat_deltas:
        shares = actuate(shares, delta, policy)
    return default_weight * shares.cpu
