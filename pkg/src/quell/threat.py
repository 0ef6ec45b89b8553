"""Per-process threat ledger and its lifecycle state machine.

Each supervised process carries a ledger of three bounded scores:

* penalty        grows on every malicious verdict
* compensation   grows on every benign verdict while the process is suspect
* threat index   running balance: penalties add to it, compensations
                 subtract from it

All three scores are clamped to [0, 100]. The threat index drives the
actuator: its per-epoch delta decides how hard the process is throttled
or how much of its resources are given back.

The lifecycle state tracks where the process sits in the response
pipeline:

    normal       threat index is zero; no restrictions warranted
    suspicious   threat index is positive; resources are being throttled
    terminable   the detector has used up its measurement budget; the
                 next verdicts decide between restore and terminate
    terminated   absorbing; the process is gone

Within the budget-filling phase, ``step_epoch`` consumes one verdict per
epoch. Once the measurement count reaches the budget the ledger enters
the terminable state and ``resolve_terminable`` takes over: a benign
verdict keeps the process alive (the caller restores its resources), a
malicious one terminates it. A process that exits on its own is recorded
through ``mark_completed`` with a distinct exit reason.

The ledger is a frozen value type. Stepping returns a new ledger, so
values can be shared across threads or processes without locks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

__all__ = [
    "SCORE_CEILING",
    "Verdict",
    "LifecycleState",
    "GrowthFamily",
    "AssessmentPolicy",
    "ThreatLedger",
    "clamp",
    "assess_penalty",
    "assess_compensation",
    "step_epoch",
    "resolve_terminable",
    "mark_completed",
]

# Upper bound shared by penalty, compensation, and threat index.
SCORE_CEILING = 100.0

# Exit reasons recorded when a ledger reaches the terminated state.
EXIT_BY_DETECTOR = "detector"
EXIT_COMPLETED = "completed"


class Verdict(Enum):
    """Per-epoch detector output for one process."""

    MALICIOUS = "malicious"
    BENIGN = "benign"


class LifecycleState(Enum):
    NORMAL = "normal"
    SUSPICIOUS = "suspicious"
    TERMINABLE = "terminable"
    TERMINATED = "terminated"


class GrowthFamily(Enum):
    INCREMENTAL = "incremental"
    LINEAR = "linear"
    EXPONENTIAL = "exponential"


def clamp(value: float) -> float:
    """Clamp a finite score into [0, 100].

    Non-finite input is a contract violation, not a saturating case:
    every producer of scores in this module is bounded, so NaN or
    infinity means the caller fed garbage in.
    """
    if not math.isfinite(value):
        raise ValueError(f"score must be finite, got {value!r}")
    return max(0.0, min(float(value), SCORE_CEILING))


@dataclass(frozen=True)
class AssessmentPolicy:
    """How a penalty or compensation score grows on each matching verdict.

    Three families are supported:

    * incremental:  x -> x + 1
    * linear:       x -> a*x + b      with a >= 1 and b >= 0
    * exponential:  x -> (2**epoch)*x + 1, epoch being the current epoch
                    index (numbering starts at 0)

    Results are clamped by the assess functions, not here.
    """

    family: GrowthFamily = GrowthFamily.INCREMENTAL
    linear_a: float = 1.0
    linear_b: float = 1.0

    def __post_init__(self) -> None:
        if self.family is GrowthFamily.LINEAR:
            if not (math.isfinite(self.linear_a) and math.isfinite(self.linear_b)):
                raise ValueError("linear growth constants must be finite")
            if self.linear_a < 1.0 or self.linear_b < 0.0:
                raise ValueError("linear growth requires a >= 1 and b >= 0")

    @classmethod
    def incremental(cls) -> "AssessmentPolicy":
        return cls(GrowthFamily.INCREMENTAL)

    @classmethod
    def linear(cls, a: float, b: float) -> "AssessmentPolicy":
        return cls(GrowthFamily.LINEAR, linear_a=a, linear_b=b)

    @classmethod
    def exponential(cls) -> "AssessmentPolicy":
        return cls(GrowthFamily.EXPONENTIAL)

    def grow(self, previous: float, epoch: int) -> float:
        """Raw growth before clamping."""
        if self.family is GrowthFamily.INCREMENTAL:
            return previous + 1.0
        if self.family is GrowthFamily.LINEAR:
            return self.linear_a * previous + self.linear_b
        try:
            scaled = math.ldexp(previous, epoch)
        except OverflowError:
            # 2**epoch * previous is far beyond the clamp already.
            return SCORE_CEILING
        return scaled + 1.0


def _check_score(value: float, name: str) -> None:
    if not math.isfinite(value) or not 0.0 <= value <= SCORE_CEILING:
        raise ValueError(f"{name} must lie in [0, {SCORE_CEILING:g}], got {value!r}")


def _check_epoch(epoch: int) -> None:
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")


def assess_penalty(policy: AssessmentPolicy, prev_penalty: float, epoch: int) -> float:
    """Grow a penalty score by one assessment step and clamp the result.

    The result never falls below ``prev_penalty``: all growth families
    are non-decreasing and the previous value was already within bounds.
    """
    _check_score(prev_penalty, "prev_penalty")
    _check_epoch(epoch)
    return clamp(policy.grow(prev_penalty, epoch))


def assess_compensation(policy: AssessmentPolicy, prev_compensation: float, epoch: int) -> float:
    """Grow a compensation score by one assessment step and clamp the result."""
    _check_score(prev_compensation, "prev_compensation")
    _check_epoch(epoch)
    return clamp(policy.grow(prev_compensation, epoch))


@dataclass(frozen=True)
class ThreatLedger:
    """Scoring state for one supervised process.

    ``epoch`` counts consumed verdicts; ``measurements`` counts detector
    measurements toward the budget. They coincide under the default one
    measurement per epoch but may diverge when a scenario samples more.
    """

    penalty: float = 0.0
    compensation: float = 0.0
    threat_index: float = 0.0
    state: LifecycleState = LifecycleState.NORMAL
    epoch: int = 0
    measurements: int = 0
    exit_reason: str | None = None

    def __post_init__(self) -> None:
        _check_score(self.penalty, "penalty")
        _check_score(self.compensation, "compensation")
        _check_score(self.threat_index, "threat_index")
        if self.epoch < 0 or self.measurements < 0:
            raise ValueError("epoch and measurements must be non-negative")


def step_epoch(
    ledger: ThreatLedger,
    verdict: Verdict,
    penalty_policy: AssessmentPolicy,
    compensation_policy: AssessmentPolicy,
    measurement_budget: int,
    new_measurements: int = 1,
) -> tuple[ThreatLedger, float]:
    """Consume one verdict during the budget-filling phase.

    Returns the stepped ledger and the threat-index delta for the epoch
    (post-clamp minus pre-step), which is what the actuator consumes.

    Semantics, in order:

    * a malicious verdict always (re)marks the process suspicious, grows
      the penalty, and adds the grown penalty to the threat index;
    * a benign verdict grows the compensation and subtracts it only when
      the process is currently suspicious; in the normal state it is a
      no-op on the scores;
    * the threat index is clamped to [0, 100]; if it lands on zero the
      process returns to the normal state;
    * if the measurement count reaches the budget, the ledger enters the
      terminable state regardless of the verdict.

    Penalty and compensation are never reset by recovery; only clamping
    bounds them.
    """
    if ledger.state not in (LifecycleState.NORMAL, LifecycleState.SUSPICIOUS):
        raise ValueError(f"cannot step a ledger in state {ledger.state.value!r}")
    if measurement_budget < 1:
        raise ValueError(f"measurement budget must be >= 1, got {measurement_budget}")
    if ledger.measurements >= measurement_budget:
        raise ValueError("measurement budget already exhausted")
    if new_measurements < 1:
        raise ValueError(f"new_measurements must be >= 1, got {new_measurements}")

    epoch = ledger.epoch + 1
    measurements = ledger.measurements + new_measurements
    penalty = ledger.penalty
    compensation = ledger.compensation
    state = ledger.state

    if verdict is Verdict.MALICIOUS:
        state = LifecycleState.SUSPICIOUS
        penalty = assess_penalty(penalty_policy, penalty, epoch)
        raw_threat = ledger.threat_index + penalty
    elif state is LifecycleState.SUSPICIOUS:
        compensation = assess_compensation(compensation_policy, compensation, epoch)
        raw_threat = ledger.threat_index - compensation
    else:
        raw_threat = ledger.threat_index

    threat_index = clamp(raw_threat)
    if threat_index == 0.0:
        state = LifecycleState.NORMAL
    if measurements >= measurement_budget:
        state = LifecycleState.TERMINABLE

    stepped = ThreatLedger(
        penalty=penalty,
        compensation=compensation,
        threat_index=threat_index,
        state=state,
        epoch=epoch,
        measurements=measurements,
    )
    return stepped, threat_index - ledger.threat_index


def resolve_terminable(ledger: ThreatLedger, verdict: Verdict) -> ThreatLedger:
    """Consume one verdict after the measurement budget has filled.

    Benign keeps the process alive in the terminable state; the caller
    is expected to restore its resources. Malicious terminates it.
    Scores and measurements are left untouched; only the epoch advances.
    """
    if ledger.state is not LifecycleState.TERMINABLE:
        raise ValueError(f"cannot resolve a ledger in state {ledger.state.value!r}")
    epoch = ledger.epoch + 1
    if verdict is Verdict.MALICIOUS:
        return replace(
            ledger, epoch=epoch, state=LifecycleState.TERMINATED, exit_reason=EXIT_BY_DETECTOR
        )
    return replace(ledger, epoch=epoch)


def mark_completed(ledger: ThreatLedger) -> ThreatLedger:
    """Record that the process exited on its own.

    Valid from any live state; the terminated state is absorbing.
    """
    if ledger.state is LifecycleState.TERMINATED:
        raise ValueError("terminated is absorbing")
    return replace(ledger, state=LifecycleState.TERMINATED, exit_reason=EXIT_COMPLETED)
