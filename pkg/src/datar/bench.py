"""Benchmark harness: per-stage time and memory across jobs and data sizes.

Every (job, size) cell generates its input from the plan seed, runs the
canonical Control -> Input -> Storage -> Computation -> Output pipeline
``repetitions`` times, and averages the stage timings. Cells run strictly one
after another; a failing cell is recorded and the bench moves on.
"""

from __future__ import annotations

import gc
import hashlib
import json
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from datar.engines.api import ConfChain, EngineKind
from datar.errors import InvalidParams
from datar.pipeline import GENERATOR_KIND, RunReport, execute, job_pipeline
from datar.records import encode

JOBS = ("wordcount", "sort", "kmeans", "pagerank")
STAGE_ORDER = (EngineKind.CONTROL, EngineKind.INPUT, EngineKind.STORAGE, EngineKind.COMPUTATION, EngineKind.OUTPUT)
# shown in seconds in the text table, everything else in milliseconds
SECONDS_ROWS = (EngineKind.STORAGE, EngineKind.COMPUTATION)


@dataclass
class BenchPlan:
    jobs: list[str]
    sizes: list[int]
    repetitions: int = 3
    seed: int = 42
    k: int = 100
    iterations: int = 20
    damping: float = 0.85
    pages: int = 1000

    def __post_init__(self):
        self.jobs = list(self.jobs)
        self.sizes = [int(s) for s in self.sizes]
        unknown = [j for j in self.jobs if j not in JOBS]
        if unknown or not self.jobs:
            raise InvalidParams(f"plan jobs must be a non-empty subset of {JOBS}, got {self.jobs}")
        if not self.sizes or any(s < 0 for s in self.sizes):
            raise InvalidParams("plan needs at least one non-negative size")
        if self.sizes != sorted(self.sizes):
            raise InvalidParams(f"plan sizes must be ascending, got {self.sizes}")
        if self.repetitions < 1:
            raise InvalidParams("repetitions must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchPlan":
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(d) - known)
        if extra:
            raise InvalidParams(f"unknown plan key(s): {', '.join(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "BenchPlan":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return asdict(self)

    def task_params(self, job: str) -> dict[str, str]:
        if job == "kmeans":
            return {"k": str(self.k), "iterations": str(self.iterations), "seed": str(self.seed)}
        if job == "pagerank":
            return {"damping": repr(self.damping), "iterations": str(self.iterations)}
        return {}

    def input_params(self, job: str, size: int) -> dict[str, str]:
        params = {"kind": GENERATOR_KIND[job], "size": str(size), "seed": str(self.seed)}
        if job == "pagerank":
            params["pages"] = str(self.pages)
        return params


@dataclass
class BenchCell:
    job: str
    size: int
    runs: list[dict] = field(default_factory=list)
    digests: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and bool(self.runs)

    def _stage_values(self, kind: EngineKind, key: str) -> list[float]:
        vals = []
        for run in self.runs:
            for s in run["stages"]:
                if s["kind"] == kind.label:
                    vals.append(s[key])
        return vals

    def stage_ms(self, kind: EngineKind) -> float:
        return statistics.fmean(self._stage_values(kind, "ms"))

    def stage_mem(self, kind: EngineKind) -> float:
        return statistics.fmean(self._stage_values(kind, "mem_mb"))

    @property
    def stage_kinds(self) -> list[EngineKind]:
        if not self.runs:
            return []
        labels = [s["kind"] for s in self.runs[0]["stages"]]
        return [k for k in STAGE_ORDER if k.label in labels]

    @property
    def framework_ms(self) -> float:
        return statistics.fmean(r["framework_ms"] for r in self.runs)

    def to_json(self) -> dict:
        doc = {"job": self.job, "size": self.size, "repetitions": len(self.runs)}
        if self.ok:
            doc["stages"] = [{"kind": k.label, "ms": round(self.stage_ms(k), 3)} for k in self.stage_kinds]
            doc["framework_ms"] = round(self.framework_ms, 3)
            doc["mem_mb_at_stage"] = [round(self.stage_mem(k), 3) for k in self.stage_kinds]
            doc["digest"] = self.digests[0] if len(set(self.digests)) == 1 else None
        doc["error"] = self.error
        doc["runs"] = self.runs
        return doc


@dataclass
class BenchReport:
    plan: BenchPlan
    cells: list[BenchCell]

    def cell(self, job: str, size: int) -> BenchCell:
        for c in self.cells:
            if c.job == job and c.size == size:
                return c
        raise KeyError((job, size))

    def to_json(self) -> dict:
        return {"plan": self.plan.to_dict(), "cells": [c.to_json() for c in self.cells]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def records_digest(records) -> str:
    h = hashlib.sha256()
    for r in records:
        payload = encode(r)
        h.update(len(payload).to_bytes(4, "little"))
        h.update(payload)
    return h.hexdigest()


def _generator_chain(chain: ConfChain) -> ConfChain:
    if chain.binding(EngineKind.INPUT).descriptor.name == "generator":
        return chain
    return chain.with_engine(EngineKind.INPUT, "generator", {})


def run_once(plan: BenchPlan, chain: ConfChain, job: str, size: int):
    pipeline = job_pipeline(job, plan.task_params(job), input_params=plan.input_params(job, size))
    bd, report = execute(pipeline, chain)
    # drop the stored intermediate so repeated runs do not pile up on disk
    origin = bd.lineage[0]
    if origin.op_name == "store":
        chain.engine(EngineKind.STORAGE).delete(origin.params["dataset_id"])
    return bd, report


def run_bench(
    plan: BenchPlan,
    chain: ConfChain,
    progress: Callable[[str, int, int, RunReport], None] | None = None,
) -> BenchReport:
    chain = _generator_chain(chain)
    cells = []
    for job in plan.jobs:
        for size in plan.sizes:
            cell = BenchCell(job, size)
            for rep in range(plan.repetitions):
                gc.collect()
                try:
                    bd, report = run_once(plan, chain, job, size)
                except Exception as exc:  # recorded per cell; the bench goes on
                    root = getattr(exc, "cause", None) or exc
                    cell.error = f"{type(root).__name__}: {exc}"
                    break
                cell.runs.append(report.to_json())
                cell.digests.append(records_digest(bd.records))
                del bd
                if progress:
                    progress(job, size, rep, report)
            cells.append(cell)
    return BenchReport(plan, cells)


def size_label(n: int) -> str:
    for unit, scale in (("M", 1_000_000), ("K", 1_000)):
        if n >= scale and n % scale == 0:
            return f"{n // scale}{unit}"
    return str(n)


def render_table(report: BenchReport) -> str:
    """One block per job: a row per stage, then framework overhead and memory."""
    out = []
    for job in report.plan.jobs:
        cells = [report.cell(job, s) for s in report.plan.sizes]
        header = ["Data Size"] + [size_label(c.size) for c in cells]
        rows = [header]
        for kind in STAGE_ORDER:
            row = [kind.label]
            for c in cells:
                if not c.ok or kind not in c.stage_kinds:
                    row.append("-")
                elif kind in SECONDS_ROWS:
                    row.append(f"{c.stage_ms(kind) / 1000:.3f} (s)")
                else:
                    row.append(f"{c.stage_ms(kind):.1f}")
            rows.append(row)
        rows.append(["Framework"] + [f"{c.framework_ms:.1f}" if c.ok else "-" for c in cells])
        mem = ["Memory (MB)"] + [
            "/".join(f"{c.stage_mem(k):.0f}" for k in c.stage_kinds) if c.ok else "-" for c in cells
        ]
        rows.append(mem)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        out.append(f"== {job} ==")
        for r in rows:
            out.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        errors = [f"{size_label(c.size)}: {c.error}" for c in cells if c.error]
        out += [f"error {e}" for e in errors]
        out.append("")
    return "\n".join(out)

