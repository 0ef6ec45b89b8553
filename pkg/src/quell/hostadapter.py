"""Host process control behind one small surface.

An adapter exposes five calls: ``poll`` (is the process still there),
``apply_shares`` (set resource limits to shares of the attach-time
defaults), ``terminate``, ``pause``, and ``resume``. Handle validity is
checked before every call; acting on a process that is gone raises
``StaleHandleError``, except ``terminate``, which acknowledges as a
no-op.

``FakeHostAdapter`` is fully scripted and is what every test drives. It
keeps an append-only call log (exportable as CSV), flags redundant calls
(idempotence is observable), and accounts run versus paused time against
a fake clock so duty-cycle behavior can be checked without sleeping.

``LinuxSignalAdapter`` is a thin real implementation for one platform:
pause/resume/terminate map to SIGSTOP/SIGCONT/SIGKILL, and a CPU share
below 1.0 is enforced by a duty-cycle thread that stops and continues
the process over a fixed period. Memory, network, and filesystem limits
are reported unsupported per-resource; supported resources still apply.
"""

from __future__ import annotations

import csv
import io
import os
import signal
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .actuation import DEFAULT_SHARES, RESOURCES, ResourceShares

__all__ = [
    "StaleHandleError",
    "ProcessHandle",
    "Ack",
    "CallRecord",
    "FakeClock",
    "FakeHostAdapter",
    "LinuxSignalAdapter",
    "HostAdapter",
    "CALLS_CSV_HEADER",
    "format_shares",
]

CALLS_CSV_HEADER = ("seq", "handle", "call", "args")

_SHORT = {"cpu": "cpu", "memory": "mem", "network": "net", "filesystem": "fs"}


class StaleHandleError(Exception):
    """The handle's process already exited."""


@dataclass(frozen=True)
class ProcessHandle:
    """Opaque reference to one controlled process plus its attach-time
    default allotment (shares are fractions of these defaults)."""

    ident: str
    default_shares: ResourceShares = DEFAULT_SHARES


@dataclass(frozen=True)
class Ack:
    """Acknowledgment for one adapter call.

    ``noop`` marks idempotent repeats (pausing a paused process,
    terminating an exited one, re-applying current shares).
    ``unsupported`` lists resources this host cannot limit; the rest
    were still applied.
    """

    call: str
    noop: bool = False
    applied: tuple[str, ...] = ()
    unsupported: tuple[str, ...] = ()


class HostAdapter(Protocol):
    def poll(self, handle: ProcessHandle) -> bool: ...

    def apply_shares(self, handle: ProcessHandle, shares: ResourceShares) -> Ack: ...

    def terminate(self, handle: ProcessHandle) -> Ack: ...

    def pause(self, handle: ProcessHandle) -> Ack: ...

    def resume(self, handle: ProcessHandle) -> Ack: ...


def format_shares(shares: ResourceShares) -> str:
    """Deterministic single-field rendering used in call logs."""
    return ";".join(f"{_SHORT[name]}={shares.get(name):.6f}" for name in RESOURCES)


class FakeClock:
    """Manually advanced milliseconds counter."""

    def __init__(self, now_ms: float = 0.0) -> None:
        self.now_ms = now_ms

    def advance(self, ms: float) -> None:
        if ms < 0:
            raise ValueError("the clock only moves forward")
        self.now_ms += ms


@dataclass
class CallRecord:
    seq: int
    handle: str
    call: str
    args: str
    redundant: bool = False

    def csv_row(self) -> tuple[str, ...]:
        return (str(self.seq), self.handle, self.call, self.args)


@dataclass
class _FakeProcess:
    handle: ProcessHandle
    shares: ResourceShares
    alive: bool = True
    paused: bool = False
    run_ms: float = 0.0
    paused_ms: float = 0.0
    last_sync_ms: float = 0.0


class FakeHostAdapter:
    """Scripted in-memory host: every call is recorded, nothing sleeps.

    ``unsupported`` simulates a host that cannot limit some resources;
    those components of an apply are skipped and reported while the rest
    apply. Run/paused time is accounted against the fake clock, so the
    effective CPU share of a duty-cycled process is observable.
    """

    def __init__(
        self,
        clock: FakeClock | None = None,
        unsupported: tuple[str, ...] = (),
    ) -> None:
        unknown = [r for r in unsupported if r not in RESOURCES]
        if unknown:
            raise ValueError(f"unknown resources: {unknown}")
        self.clock = clock if clock is not None else FakeClock()
        self.unsupported = tuple(r for r in RESOURCES if r in set(unsupported))
        self.calls: list[CallRecord] = []
        self._processes: dict[str, _FakeProcess] = {}

    # -- scripting surface -------------------------------------------------

    def spawn(
        self, ident: str, default_shares: ResourceShares = DEFAULT_SHARES
    ) -> ProcessHandle:
        if ident in self._processes:
            raise ValueError(f"process {ident!r} already exists")
        handle = ProcessHandle(ident=ident, default_shares=default_shares)
        self._processes[ident] = _FakeProcess(
            handle=handle, shares=default_shares, last_sync_ms=self.clock.now_ms
        )
        self._log(ident, "attach", format_shares(default_shares))
        return handle

    def script_natural_exit(self, handle: ProcessHandle) -> None:
        """Mark the process as having exited on its own."""
        proc = self._lookup(handle)
        self._sync(proc)
        proc.alive = False

    # -- adapter surface ----------------------------------------------------

    def poll(self, handle: ProcessHandle) -> bool:
        return self._lookup(handle).alive

    def apply_shares(self, handle: ProcessHandle, shares: ResourceShares) -> Ack:
        proc = self._live(handle)
        redundant = shares == proc.shares
        self._log(handle.ident, "apply_shares", format_shares(shares), redundant=redundant)
        if redundant:
            return Ack(call="apply_shares", noop=True, applied=(), unsupported=self.unsupported)
        applied = tuple(r for r in RESOURCES if r not in self.unsupported)
        merged = {
            name: (shares.get(name) if name in applied else proc.shares.get(name))
            for name in RESOURCES
        }
        proc.shares = ResourceShares(**merged)
        return Ack(call="apply_shares", applied=applied, unsupported=self.unsupported)

    def terminate(self, handle: ProcessHandle) -> Ack:
        proc = self._lookup(handle)
        if not proc.alive:
            return Ack(call="terminate", noop=True)
        self._sync(proc)
        proc.alive = False
        self._log(handle.ident, "terminate", "")
        return Ack(call="terminate")

    def pause(self, handle: ProcessHandle) -> Ack:
        proc = self._live(handle)
        self._sync(proc)
        noop = proc.paused
        proc.paused = True
        self._log(handle.ident, "pause", "", redundant=noop)
        return Ack(call="pause", noop=noop)

    def resume(self, handle: ProcessHandle) -> Ack:
        proc = self._live(handle)
        self._sync(proc)
        noop = not proc.paused
        proc.paused = False
        self._log(handle.ident, "resume", "", redundant=noop)
        return Ack(call="resume", noop=noop)

    # -- accounting and export ----------------------------------------------

    def applied_shares(self, handle: ProcessHandle) -> ResourceShares:
        return self._lookup(handle).shares

    def effective_cpu_share(self, handle: ProcessHandle) -> float:
        """Run time over total time, as accounted on the fake clock."""
        proc = self._lookup(handle)
        self._sync(proc)
        total = proc.run_ms + proc.paused_ms
        if total <= 0.0:
            raise ValueError("no time has passed for this process")
        return proc.run_ms / total

    def export_calls_csv(self, destination: str | Path | io.TextIOBase) -> None:
        if isinstance(destination, (str, Path)):
            with Path(destination).open("w", encoding="utf-8", newline="") as handle:
                self.export_calls_csv(handle)
            return
        writer = csv.writer(destination, lineterminator="\n")
        writer.writerow(CALLS_CSV_HEADER)
        for record in self.calls:
            writer.writerow(record.csv_row())

    # -- internals ------------------------------------------------------------

    def _log(self, ident: str, call: str, args: str, redundant: bool = False) -> None:
        self.calls.append(
            CallRecord(seq=len(self.calls), handle=ident, call=call, args=args, redundant=redundant)
        )

    def _lookup(self, handle: ProcessHandle) -> _FakeProcess:
        proc = self._processes.get(handle.ident)
        if proc is None:
            raise StaleHandleError(f"unknown handle {handle.ident!r}")
        return proc

    def _live(self, handle: ProcessHandle) -> _FakeProcess:
        proc = self._lookup(handle)
        if not proc.alive:
            raise StaleHandleError(f"process {handle.ident!r} already exited")
        return proc

    def _sync(self, proc: _FakeProcess) -> None:
        if not proc.alive:
            return
        elapsed = self.clock.now_ms - proc.last_sync_ms
        if elapsed > 0:
            if proc.paused:
                proc.paused_ms += elapsed
            else:
                proc.run_ms += elapsed
        proc.last_sync_ms = self.clock.now_ms


class _DutyCycler(threading.Thread):
    """Stops and continues one pid so it runs a fraction of each period."""

    def __init__(self, pid: int, period_ms: float) -> None:
        super().__init__(daemon=True)
        self.pid = pid
        self.period_ms = period_ms
        self.fraction = 1.0
        self.stop_event = threading.Event()

    def run(self) -> None:  # pragma: no cover - timing loop
        try:
            while not self.stop_event.is_set():
                fraction = self.fraction
                run_s = self.period_ms * fraction / 1000.0
                stop_s = self.period_ms * (1.0 - fraction) / 1000.0
                os.kill(self.pid, signal.SIGCONT)
                if self.stop_event.wait(run_s):
                    break
                if stop_s > 0:
                    os.kill(self.pid, signal.SIGSTOP)
                    if self.stop_event.wait(stop_s):
                        break
        except ProcessLookupError:
            return
        finally:
            try:
                os.kill(self.pid, signal.SIGCONT)
            except ProcessLookupError:
                pass


class LinuxSignalAdapter:
    """Signal-driven control of real local processes (Linux only).

    CPU is the one resource this adapter can limit, via duty-cycling;
    the other resources are acknowledged as unsupported. Intended for
    supervising a single pid from the command line, not for fleets.
    """

    PERIOD_MS = 100.0

    def __init__(self) -> None:
        self._cyclers: dict[str, _DutyCycler] = {}
        self._shares: dict[str, ResourceShares] = {}

    def attach(self, pid: int) -> ProcessHandle:
        if not self._pid_exists(pid):
            raise StaleHandleError(f"no such process: {pid}")
        handle = ProcessHandle(ident=str(pid))
        self._shares[handle.ident] = DEFAULT_SHARES
        return handle

    def poll(self, handle: ProcessHandle) -> bool:
        return self._pid_exists(int(handle.ident))

    def apply_shares(self, handle: ProcessHandle, shares: ResourceShares) -> Ack:
        pid = self._require_alive(handle)
        if shares == self._shares.get(handle.ident):
            return Ack(call="apply_shares", noop=True, unsupported=self._unsupported())
        if shares.cpu >= 1.0:
            self._stop_cycler(handle.ident)
        else:
            cycler = self._cyclers.get(handle.ident)
            if cycler is None or not cycler.is_alive():
                cycler = _DutyCycler(pid, self.PERIOD_MS)
                cycler.fraction = shares.cpu
                self._cyclers[handle.ident] = cycler
                cycler.start()
            else:
                cycler.fraction = shares.cpu
        self._shares[handle.ident] = shares
        return Ack(call="apply_shares", applied=("cpu",), unsupported=self._unsupported())

    def terminate(self, handle: ProcessHandle) -> Ack:
        self._stop_cycler(handle.ident)
        try:
            os.kill(int(handle.ident), signal.SIGKILL)
        except ProcessLookupError:
            return Ack(call="terminate", noop=True)
        return Ack(call="terminate")

    def pause(self, handle: ProcessHandle) -> Ack:
        self._signal(handle, signal.SIGSTOP)
        return Ack(call="pause")

    def resume(self, handle: ProcessHandle) -> Ack:
        self._signal(handle, signal.SIGCONT)
        return Ack(call="resume")

    def close(self) -> None:
        for ident in list(self._cyclers):
            self._stop_cycler(ident)

    def _unsupported(self) -> tuple[str, ...]:
        return ("memory", "network", "filesystem")

    def _signal(self, handle: ProcessHandle, signo: int) -> None:
        try:
            os.kill(int(handle.ident), signo)
        except ProcessLookupError:
            raise StaleHandleError(f"process {handle.ident} already exited") from None

    def _require_alive(self, handle: ProcessHandle) -> int:
        pid = int(handle.ident)
        if not self._pid_exists(pid):
            raise StaleHandleError(f"process {pid} already exited")
        return pid

    def _stop_cycler(self, ident: str) -> None:
        cycler = self._cyclers.pop(ident, None)
        if cycler is not None:
            cycler.stop_event.set()
            cycler.join(timeout=1.0)

    @staticmethod
    def _pid_exists(pid: int) -> bool:
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return False
        except PermissionError:
            return True
        return True
