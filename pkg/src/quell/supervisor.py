"""Epoch loop that drives a host adapter from detector verdicts.

Each epoch: fetch the verdict, step the threat ledger, actuate, and push
the new shares to the adapter only when they changed, so the adapter
sees exactly one apply call per share-changing epoch and none otherwise.
A terminable ledger is resolved instead: benign restores the defaults,
malicious terminates the process. A process that disappears on its own
is recorded as completed and left alone.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

from .actuation import DEFAULT_SHARES, ResourceShares, actuate, actuate_reset
from .detectors import next_verdict
from .hostadapter import HostAdapter, ProcessHandle
from .simulation import Scenario
from .threat import (
    LifecycleState,
    ThreatLedger,
    mark_completed,
    resolve_terminable,
    step_epoch,
)

__all__ = ["SupervisionReport", "supervise", "SUPERVISION_CSV_HEADER"]

SUPERVISION_CSV_HEADER = ("process", "final_state", "epochs_run", "exit_reason", "cpu", "mem", "net", "fs")

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SupervisionReport:
    process_id: str
    final_state: str
    epochs_run: int
    exit_reason: str | None
    shares: ResourceShares

    def csv_row(self) -> tuple[str, ...]:
        return (
            self.process_id,
            self.final_state,
            str(self.epochs_run),
            self.exit_reason or "",
            f"{self.shares.cpu:.6f}",
            f"{self.shares.memory:.6f}",
            f"{self.shares.network:.6f}",
            f"{self.shares.filesystem:.6f}",
        )


@dataclass
class _Supervised:
    spec_index: int
    handle: ProcessHandle
    ledger: ThreatLedger
    shares: ResourceShares
    epochs_run: int = 0
    done: bool = False


def supervise(
    scenario: Scenario,
    adapter: HostAdapter,
    *,
    handles: dict[str, ProcessHandle] | None = None,
    pace_seconds: float = 0.0,
    stop: threading.Event | None = None,
) -> tuple[SupervisionReport, ...]:
    """Run the scenario's policies against live processes.

    ``handles`` maps process ids to pre-attached handles; without it the
    adapter must offer ``spawn`` (the fake adapter does). ``pace_seconds``
    sleeps between epochs for real processes; leave it at 0.0 for fakes.
    ``stop`` allows a signal handler to end the loop cleanly.
    """
    supervised: dict[str, _Supervised] = {}
    for index, spec in enumerate(scenario.processes):
        if handles is not None and spec.process_id in handles:
            handle = handles[spec.process_id]
        else:
            handle = adapter.spawn(spec.process_id)  # type: ignore[attr-defined]
        supervised[spec.process_id] = _Supervised(
            spec_index=index, handle=handle, ledger=ThreatLedger(), shares=DEFAULT_SHARES
        )

    for epoch in range(1, scenario.epochs):
        if stop is not None and stop.is_set():
            logger.info("stop requested at epoch %d", epoch)
            break
        live = [(pid, s) for pid, s in supervised.items() if not s.done]
        if not live:
            break
        for process_id, state in live:
            spec = scenario.processes[state.spec_index]
            state.epochs_run = epoch
            if not adapter.poll(state.handle):
                state.ledger = mark_completed(state.ledger)
                state.done = True
                logger.info("%s exited on its own at epoch %d", process_id, epoch)
                continue
            verdict = next_verdict(spec.source, epoch)
            if state.ledger.state in (LifecycleState.NORMAL, LifecycleState.SUSPICIOUS):
                state.ledger, delta = step_epoch(
                    state.ledger,
                    verdict,
                    scenario.penalty_policy,
                    scenario.compensation_policy,
                    scenario.measurement_budget,
                    scenario.measurements_per_epoch,
                )
                new_shares = actuate(state.shares, delta, scenario.actuator)
                _apply_if_changed(adapter, state, new_shares)
            else:
                state.ledger = resolve_terminable(state.ledger, verdict)
                if state.ledger.state is LifecycleState.TERMINATED:
                    adapter.terminate(state.handle)
                    state.done = True
                else:
                    _apply_if_changed(adapter, state, actuate_reset(state.shares, scenario.actuator))
        if pace_seconds > 0:
            time.sleep(pace_seconds)

    reports = []
    for process_id in sorted(supervised):
        state = supervised[process_id]
        reports.append(
            SupervisionReport(
                process_id=process_id,
                final_state=state.ledger.state.value,
                epochs_run=state.epochs_run,
                exit_reason=state.ledger.exit_reason,
                shares=state.shares,
            )
        )
    return tuple(reports)


def _apply_if_changed(adapter: HostAdapter, state: _Supervised, new_shares: ResourceShares) -> None:
    """Push shares to the adapter only when they changed."""
    if new_shares == state.shares:
        return
    ack = adapter.apply_shares(state.handle, new_shares)
    if ack.unsupported:
        logger.warning(
            "%s: resources not limitable on this host: %s",
            state.handle.ident,
            ", ".join(ack.unsupported),
        )
    state.shares = new_shares
