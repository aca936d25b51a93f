"""Standalone control engine: one running job at a time."""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

from datar.engines.api import Engine, EngineKind, TaskSpec
from datar.errors import Busy, InvalidParams, UnknownToken


def _flag(raw: str, name: str) -> bool:
    if raw in ("true", "yes", "1"):
        return True
    if raw in ("false", "no", "0"):
        return False
    raise InvalidParams(f"{name} must be true or false, got {raw!r}")


@dataclass(frozen=True)
class JobToken:
    id: int
    job: str


class Standalone(Engine):
    name = "standalone"
    kind = EngineKind.CONTROL
    accepts = frozenset({"blocking", "timeout"})

    def __init__(self, params=None):
        super().__init__(params)
        self.blocking = _flag(self.params.get("blocking", "true"), "blocking")
        self.timeout = float(self.params["timeout"]) if "timeout" in self.params else None
        self._ids = itertools.count(1)
        self._cond = threading.Condition()
        self._running: JobToken | None = None

    def admit(self, job: str = "job", blocking: bool | None = None, timeout: float | None = None) -> JobToken:
        blocking = self.blocking if blocking is None else blocking
        timeout = self.timeout if timeout is None else timeout
        with self._cond:
            if self._running is not None:
                if not blocking:
                    raise Busy(f"job {self._running.id} ({self._running.job}) is running")
                if not self._cond.wait_for(lambda: self._running is None, timeout):
                    raise Busy(f"timed out waiting for job {self._running.id} ({self._running.job})")
            self._running = JobToken(next(self._ids), job)
            return self._running

    def release(self, token: JobToken) -> None:
        with self._cond:
            if self._running is None or token != self._running:
                raise UnknownToken(token)
            self._running = None
            self._cond.notify_all()

    @property
    def running(self) -> JobToken | None:
        return self._running

    def _admit_task(self, ctx, data, params):
        blocking = _flag(params["blocking"], "blocking") if "blocking" in params else None
        ctx.token = self.admit(ctx.job, blocking=blocking)
        return None

    def tasks(self):
        return {"admit": TaskSpec(self._admit_task, frozenset({"blocking"}))}
