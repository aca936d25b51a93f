"""Exception hierarchy.

Everything raised on purpose by the framework derives from ``DatarError``.
``ValidationError`` marks problems with user input (configs, params, data
shape) as opposed to failures while running; the CLI maps the former to
exit status 1 and the latter to 2.
"""

from __future__ import annotations


class DatarError(Exception):
    pass


class ValidationError(DatarError):
    pass


# -- dataset model ---------------------------------------------------------


class RecordError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class FileNotFound(DatarError, FileNotFoundError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"no such file: {path}")


class OperatorError(DatarError):
    def __init__(self, op_name: str, cause: BaseException | None = None):
        self.op_name = op_name
        self.cause = cause
        detail = f": {cause}" if cause is not None else ""
        super().__init__(f"operator {op_name!r} failed{detail}")


class UnknownOperator(DatarError):
    def __init__(self, op_name: str):
        self.op_name = op_name
        super().__init__(f"operator {op_name!r} is not registered")


class SourceUnavailable(DatarError):
    def __init__(self, source: str, reason: str = ""):
        self.source = source
        super().__init__(f"source unavailable: {source}" + (f" ({reason})" if reason else ""))


# -- engines and configuration ----------------------------------------------


class ConfigError(ValidationError):
    pass


class ConfigSyntaxError(ConfigError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MissingSlot(ConfigError):
    def __init__(self, kind):
        self.kind = kind
        super().__init__(f"no engine configured for slot {kind}")


class UnknownSection(ConfigError):
    def __init__(self, section: str, line: int | None = None):
        self.section = section
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown section [{section}]{where}")


class UnknownKey(ConfigError):
    def __init__(self, section: str, key: str):
        self.section = section
        self.key = key
        super().__init__(f"unknown key {key!r} in [{section}]")


class DuplicateEngine(DatarError):
    def __init__(self, name: str, kind):
        self.name = name
        self.kind = kind
        super().__init__(f"engine {name!r} already registered as {kind}")


class UnknownEngine(ValidationError):
    def __init__(self, kind, name: str):
        self.kind = kind
        self.name = name
        super().__init__(f"no {kind} engine named {name!r}")


class EngineUnavailable(ValidationError):
    def __init__(self, kind, name: str, reason: str):
        self.kind = kind
        self.name = name
        self.reason = reason
        super().__init__(f"{kind} engine {name!r} unavailable: {reason}")


class InvalidParams(ValidationError):
    pass


# -- built-in engines --------------------------------------------------------


class StorageError(DatarError):
    pass


class StorageFull(StorageError):
    def __init__(self, capacity: int):
        self.capacity = capacity
        super().__init__(f"store capacity of {capacity} records exceeded")


class UnknownDataset(StorageError):
    def __init__(self, dataset_id: str):
        self.dataset_id = dataset_id
        super().__init__(f"dataset {dataset_id!r} not in store")


class Busy(DatarError):
    pass


class UnknownToken(DatarError):
    def __init__(self, token):
        self.token = token
        super().__init__(f"unknown job token {token!r}")


class UnknownKind(ValidationError):
    pass


class EmptySeries(ValidationError):
    pass


# -- compute tasks -------------------------------------------------------------


class TypeMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class KTooLarge(ValidationError):
    def __init__(self, k: int, n: int):
        self.k = k
        self.n = n
        super().__init__(f"k={k} exceeds number of observations n={n}")


class EmptyGraph(ValidationError):
    pass


# -- pipelines -----------------------------------------------------------------


class PipelineError(ValidationError):
    pass


class EmptyPipeline(PipelineError):
    pass


class DuplicatePipeKind(PipelineError):
    pass


class OrderViolation(PipelineError):
    pass


class TaskResolutionError(PipelineError):
    pass


class StageError(DatarError):
    """A stage failed while the pipeline was running."""

    def __init__(self, stage, task: str, cause: BaseException):
        self.stage = stage
        self.task = task
        self.cause = cause
        super().__init__(f"{stage} stage failed in task {task!r}: {cause}")
