"""Job pipelines: pipes of tasks executed in order over a configuration chain."""

from __future__ import annotations

import datetime as _dt
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import psutil

from datar.bigdata import BigData
from datar.engines.api import ConfChain, EngineKind, TaskSpec
from datar.errors import (
    DuplicatePipeKind,
    EmptyPipeline,
    OrderViolation,
    PipelineError,
    StageError,
)

# relative order of the data-carrying pipes; a control pipe, if any, goes first
_DATA_ORDER = (EngineKind.INPUT, EngineKind.STORAGE, EngineKind.COMPUTATION, EngineKind.OUTPUT)


@dataclass(frozen=True)
class Task:
    name: str
    kind: EngineKind
    params: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", EngineKind(self.kind))
        object.__setattr__(self, "params", {str(k): str(v) for k, v in self.params.items()})


@dataclass(frozen=True)
class Pipe:
    kind: EngineKind
    tasks: tuple[Task, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", EngineKind(self.kind))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.tasks:
            raise EmptyPipeline(f"{self.kind} pipe has no tasks")
        for t in self.tasks:
            if t.kind is not self.kind:
                raise PipelineError(f"task {t.name!r} is a {t.kind} task inside a {self.kind} pipe")

    @classmethod
    def of(cls, kind: EngineKind, *tasks: str | tuple[str, Mapping]) -> "Pipe":
        """``Pipe.of(EngineKind.COMPUTATION, ("kmeans", {"k": 3}))``"""
        built = []
        for t in tasks:
            name, params = (t, {}) if isinstance(t, str) else t
            built.append(Task(name, kind, params))
        return cls(EngineKind(kind), tuple(built))


@dataclass(frozen=True)
class JobPipeline:
    name: str
    pipes: tuple[Pipe, ...]

    @property
    def kinds(self) -> list[EngineKind]:
        return [p.kind for p in self.pipes]


def connect(pipes: Sequence[Pipe], name: str = "job") -> JobPipeline:
    pipes = tuple(pipes)
    if not pipes:
        raise EmptyPipeline("a pipeline needs at least one pipe")
    kinds = [p.kind for p in pipes]
    dupes = sorted({str(k) for k in kinds if kinds.count(k) > 1})
    if dupes:
        raise DuplicatePipeKind(f"more than one pipe of kind {', '.join(dupes)}")
    if EngineKind.CONTROL in kinds and kinds[0] is not EngineKind.CONTROL:
        raise OrderViolation("the control pipe must come first")
    data = [k for k in kinds if k is not EngineKind.CONTROL]
    if data != sorted(data, key=_DATA_ORDER.index):
        raise OrderViolation(
            f"pipes out of order: {' -> '.join(map(str, data))} "
            f"(expected Input before Storage before Computation before Output)"
        )
    return JobPipeline(name, pipes)


# -- instrumentation -----------------------------------------------------------


@lru_cache(maxsize=1)
def _process() -> psutil.Process:
    return psutil.Process()


def sample_memory() -> float:
    """Memory in use by this process, in MB (resident set size)."""
    return _process().memory_info().rss / 2**20


@dataclass(frozen=True)
class StageReport:
    kind: EngineKind
    ns: int
    mem_mb: float

    @property
    def ms(self) -> float:
        return self.ns / 1e6

    def to_json(self) -> dict:
        return {"kind": self.kind.label, "ms": round(self.ms, 3), "mem_mb": round(self.mem_mb, 3)}


@dataclass
class RunReport:
    job: str
    size: int
    stages: list[StageReport]
    total_ns: int
    timestamp: str
    artifacts: dict[str, str] = field(default_factory=dict, repr=False)

    @property
    def framework_ns(self) -> int:
        return self.total_ns - sum(s.ns for s in self.stages)

    @property
    def framework_ms(self) -> float:
        return self.framework_ns / 1e6

    def stage(self, kind: EngineKind) -> StageReport:
        for s in self.stages:
            if s.kind is kind:
                return s
        raise KeyError(kind)

    def to_json(self) -> dict:
        return {
            "job": self.job,
            "size": self.size,
            "stages": [s.to_json() for s in self.stages],
            "framework_ms": round(self.framework_ms, 3),
            "timestamp": self.timestamp,
        }


@dataclass
class RunContext:
    """Mutable state shared by the tasks of one run."""

    chain: ConfChain
    job: str
    catalog: dict[str, BigData] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    receipts: list = field(default_factory=list)
    token: object = None

    def put(self, bd: BigData) -> None:
        self.catalog[bd.id] = bd


def _resolve(pipeline: JobPipeline, chain: ConfChain) -> list[list[tuple[Task, TaskSpec]]]:
    resolved = []
    for pipe in pipeline.pipes:
        engine = chain.engine(pipe.kind)
        specs = []
        for task in pipe.tasks:
            spec = engine.task(task.name)
            spec.check(task.name, task.params)
            specs.append((task, spec))
        resolved.append(specs)
    return resolved


def execute(pipeline: JobPipeline, chain: ConfChain) -> tuple[BigData | None, RunReport]:
    """Run every pipe in order and time it.

    All tasks are resolved against the chain before anything runs. The control
    engine admits the job before the first stage and always releases it, even
    when a stage fails. When a storage pipe ran, the computation pipe starts by
    reading its input back from the storage engine.
    """
    resolved = _resolve(pipeline, chain)
    ctx = RunContext(chain, pipeline.name)
    control = chain.engine(EngineKind.CONTROL)
    storage = chain.engine(EngineKind.STORAGE)
    stages: list[StageReport] = []
    data: BigData | None = None
    stored_id: str | None = None
    size = 0
    timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    start = time.perf_counter_ns()
    try:
        if EngineKind.CONTROL not in pipeline.kinds:
            ctx.token = control.admit(pipeline.name)
        for pipe, specs in zip(pipeline.pipes, resolved):
            mem = sample_memory()
            t0 = time.perf_counter_ns()
            name = "<read-back>"
            try:
                if pipe.kind is EngineKind.COMPUTATION and stored_id is not None:
                    data = storage.read(stored_id)
                    ctx.put(data)
                for task, spec in specs:
                    name = task.name
                    out = spec.fn(ctx, data, task.params)
                    if out is not None:
                        data = out
                        ctx.put(data)
            except Exception as exc:
                raise StageError(pipe.kind, name, exc) from exc
            stages.append(StageReport(pipe.kind, time.perf_counter_ns() - t0, mem))
            if pipe.kind is EngineKind.INPUT and data is not None:
                size = len(data)
            if pipe.kind is EngineKind.STORAGE and data is not None:
                stored_id = data.id
    finally:
        if ctx.token is not None:
            control.release(ctx.token)
    total = time.perf_counter_ns() - start

    report = RunReport(pipeline.name, size, stages, total, timestamp, ctx.artifacts)
    return data, report


# -- canonical job pipelines ---------------------------------------------------------

GENERATOR_KIND = {"wordcount": "words", "sort": "strings", "kmeans": "points", "pagerank": "edges"}


def job_pipeline(
    job: str,
    params: Mapping[str, str] | None = None,
    *,
    input_params: Mapping[str, str] | None = None,
    storage: bool = True,
    control: bool = True,
) -> JobPipeline:
    """Control -> Input -> Storage -> Computation -> Output for one workload."""
    pipes = []
    if control:
        pipes.append(Pipe.of(EngineKind.CONTROL, "admit"))
    pipes.append(Pipe.of(EngineKind.INPUT, ("load", input_params or {})))
    if storage:
        pipes.append(Pipe.of(EngineKind.STORAGE, "write"))
    pipes.append(Pipe.of(EngineKind.COMPUTATION, (job, params or {})))
    pipes.append(Pipe.of(EngineKind.OUTPUT, "emit"))
    return connect(pipes, name=job)
