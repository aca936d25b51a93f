"""Lineage-tracked datasets.

Two operator flavours act on a ``BigData``:

* an *action* leaves its input alone and returns a brand-new dataset whose
  lineage is the parent's lineage plus one entry;
* a *transformation* rewrites the records of the dataset it is given, keeping
  its id, and appends one lineage entry.

Operators are plain callables ``fn(records, params) -> iterable of Record``.
``params`` is always a ``str -> str`` map, so a lineage entry holds everything
needed to re-run the operator later (see :func:`replay`).
"""

from __future__ import annotations

import json
import math
import os
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from datar.errors import (
    DatarError,
    FileNotFound,
    OperatorError,
    ParseError,
    RecordError,
    SourceUnavailable,
    UnknownOperator,
    ValidationError,
)
from datar.records import Edge, Point, Record, Text

Operator = Callable[[Sequence[Record], Mapping[str, str]], Iterable[Record]]

FORMATS = ("lines", "edges", "points")


class OpKind(str, Enum):
    ORIGIN = "Origin"
    ACTION = "Action"
    TRANSFORMATION = "Transformation"


@dataclass(frozen=True)
class LineageEntry:
    op_kind: OpKind
    op_name: str
    params: Mapping[str, str] = field(default_factory=dict)
    parent_ids: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "op_kind": self.op_kind.value,
            "op_name": self.op_name,
            "params": dict(self.params),
            "parent_ids": list(self.parent_ids),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LineageEntry":
        return cls(OpKind(d["op_kind"]), d["op_name"], dict(d["params"]), tuple(d["parent_ids"]))


def new_id() -> str:
    return "bd-" + uuid.uuid4().hex[:16]


@dataclass(eq=False)
class BigData:
    records: tuple[Record, ...]
    lineage: tuple[LineageEntry, ...]
    id: str = field(default_factory=new_id)
    partitions: int = 1

    def __post_init__(self):
        self.records = tuple(self.records)
        self.lineage = tuple(self.lineage)
        if not self.lineage:
            raise ValueError("a dataset needs at least an origin lineage entry")
        if self.lineage[0].op_kind is not OpKind.ORIGIN:
            raise ValueError("lineage must start with an origin entry")
        if self.partitions < 1:
            raise ValueError("partition count must be >= 1")

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def from_origin(cls, records: Iterable[Record], source: str, **params) -> "BigData":
        entry = LineageEntry(OpKind.ORIGIN, source, _stringify(params))
        return cls(tuple(records), (entry,))

    def partition(self, index: int) -> tuple[Record, ...]:
        """Records of one logical partition (round-robin assignment)."""
        if not 0 <= index < self.partitions:
            raise IndexError(index)
        return self.records[index :: self.partitions]

    def lineage_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.lineage], sort_keys=True)


def lineage_from_json(text: str) -> tuple[LineageEntry, ...]:
    return tuple(LineageEntry.from_dict(d) for d in json.loads(text))


def _stringify(params: Mapping | None) -> dict[str, str]:
    return {str(k): str(v) for k, v in (params or {}).items()}


# -- file converter ----------------------------------------------------------


def parse_lines(content: str, fmt: str, path="<string>") -> list[Record]:
    if fmt not in FORMATS:
        raise ValidationError(f"unknown file format {fmt!r}; expected one of {FORMATS}")
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    out = []
    for lineno, line in enumerate(lines, start=1):
        key = str(lineno)
        if fmt == "lines":
            out.append(Record(key, Text(line)))
        elif fmt == "edges":
            parts = line.split(" -> ")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError(path, lineno, f"expected 'SRC -> DST', got {line!r}")
            out.append(Record(key, Edge(parts[0], parts[1])))
        else:
            parts = line.split(",")
            try:
                if len(parts) != 2:
                    raise ValueError
                x, y = float(parts[0]), float(parts[1])
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise ValueError
            except ValueError:
                raise ParseError(path, lineno, f"expected two finite numbers 'x,y', got {line!r}") from None
            out.append(Record(key, Point(x, y)))
    return out


def from_file(path, fmt: str = "lines") -> BigData:
    """Load a text file in one of the ``lines``/``edges``/``points`` formats."""
    path = Path(path)
    try:
        content = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise FileNotFound(path) from None
    except IsADirectoryError:
        raise FileNotFound(path) from None
    records = parse_lines(content, fmt, path)
    return BigData.from_origin(records, "file", path=os.path.abspath(path), format=fmt)


def format_record(record: Record, fmt: str) -> str:
    v = record.value
    if fmt == "lines" and isinstance(v, Text):
        if "\n" in v.text:
            raise RecordError("text containing a newline cannot be written in 'lines' format")
        return v.text
    if fmt == "edges" and isinstance(v, Edge):
        return f"{v.src} -> {v.dst}"
    if fmt == "points" and isinstance(v, Point):
        return f"{v.x!r},{v.y!r}"
    raise RecordError(f"cannot write {type(v).__name__} record in {fmt!r} format")


def to_file(records: Iterable[Record], path, fmt: str = "lines") -> None:
    body = "".join(format_record(r, fmt) + "\n" for r in records)
    Path(path).write_bytes(body.encode("utf-8"))


# -- operators ---------------------------------------------------------------


def _run(op_name: str, fn: Operator, records: Sequence[Record], params: Mapping[str, str]) -> tuple[Record, ...]:
    try:
        out = tuple(fn(records, params))
    except ValidationError:
        raise
    except Exception as exc:
        raise OperatorError(op_name, exc) from exc
    for r in out:
        if not isinstance(r, Record):
            raise OperatorError(op_name, TypeError(f"operator produced non-record {r!r}"))
    return out


def apply_transformation(bd: BigData, op_name: str, fn: Operator, params: Mapping | None = None) -> BigData:
    """Rewrite ``bd`` in place; returns the same object."""
    params = _stringify(params)
    bd.records = _run(op_name, fn, bd.records, params)
    bd.lineage = bd.lineage + (LineageEntry(OpKind.TRANSFORMATION, op_name, params),)
    return bd


def apply_action(bd: BigData, op_name: str, fn: Operator, params: Mapping | None = None) -> BigData:
    """Derive a new dataset from ``bd``; ``bd`` itself is not touched."""
    params = _stringify(params)
    records = _run(op_name, fn, bd.records, params)
    entry = LineageEntry(OpKind.ACTION, op_name, params, (bd.id,))
    return BigData(records, bd.lineage + (entry,), partitions=bd.partitions)


# -- replay ------------------------------------------------------------------

# source name -> loader(params) for origins that can be rebuilt from params alone
_ORIGIN_LOADERS: dict[str, Callable[[Mapping[str, str]], list[Record]]] = {}


def register_origin(source: str):
    def deco(loader):
        _ORIGIN_LOADERS[source] = loader
        return loader

    return deco


@register_origin("file")
def _load_file(params: Mapping[str, str]) -> list[Record]:
    path = params["path"]
    try:
        return list(from_file(path, params["format"]).records)
    except FileNotFound:
        raise SourceUnavailable(path, "file missing") from None


def _load_origin(entry: LineageEntry, op_registry: Mapping[str, Operator], stores: Mapping) -> tuple[Record, ...]:
    source = entry.op_name
    if source == "store":
        # read the checkpoint if it is still there, else rebuild it from its upstream lineage
        store = stores.get(entry.params.get("engine"))
        if store is not None:
            try:
                return tuple(store.load_records(entry.params["dataset_id"]))
            except DatarError:
                pass
        upstream = entry.params.get("upstream")
        if not upstream:
            raise SourceUnavailable(f"store:{entry.params.get('dataset_id')}", "dataset lost and no upstream lineage")
        return _replay_records(lineage_from_json(upstream), op_registry, stores)
    loader = _ORIGIN_LOADERS.get(source)
    if loader is None:
        raise SourceUnavailable(source, "no loader for this origin")
    return tuple(loader(entry.params))


def _replay_records(lineage: Sequence[LineageEntry], op_registry: Mapping[str, Operator] | None, stores) -> tuple:
    if op_registry is None:
        from datar.engines.computation import default_operators

        op_registry = default_operators()
    for entry in lineage[1:]:
        if entry.op_name not in op_registry:
            raise UnknownOperator(entry.op_name)
    records = _load_origin(lineage[0], op_registry, stores)
    for entry in lineage[1:]:
        records = _run(entry.op_name, op_registry[entry.op_name], records, entry.params)
    return records


def replay(
    lineage: Sequence[LineageEntry],
    op_registry: Mapping[str, Operator] | None = None,
    *,
    stores: Mapping | None = None,
) -> BigData:
    """Rebuild a dataset by re-running its lineage from the origin.

    ``op_registry`` defaults to the built-in computation operators. ``stores``
    maps storage engine names to live stores; a store origin whose dataset is
    gone is rebuilt from the upstream lineage captured at write time.
    """
    lineage = tuple(lineage)
    if not lineage or lineage[0].op_kind is not OpKind.ORIGIN:
        raise ValueError("lineage must start with an origin entry")
    records = _replay_records(lineage, op_registry, stores or {})
    return BigData(records, lineage)
