"""The built-in computation engine: the four workloads as pipeline tasks."""

from __future__ import annotations

from datar.bigdata import Operator, apply_action
from datar.engines.api import Engine, EngineKind, TaskSpec
from datar.tasks import OPERATORS

TASK_PARAMS = {
    "wordcount": frozenset(),
    "sort": frozenset(),
    "kmeans": frozenset({"k", "iterations", "seed"}),
    "pagerank": frozenset({"damping", "iterations"}),
}


def default_operators() -> dict[str, Operator]:
    return dict(OPERATORS)


class Builtin(Engine):
    name = "builtin"
    kind = EngineKind.COMPUTATION

    def _task(self, op_name: str):
        fn = OPERATORS[op_name]

        def run(ctx, data, params):
            return apply_action(data, op_name, fn, params)

        return run

    def tasks(self):
        return {name: TaskSpec(self._task(name), TASK_PARAMS[name]) for name in OPERATORS}
