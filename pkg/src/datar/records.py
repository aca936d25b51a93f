"""Record model: a non-empty key plus one of five value shapes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

from datar.errors import RecordError


@dataclass(frozen=True)
class Text:
    text: str


@dataclass(frozen=True)
class Number:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise RecordError(f"point coordinates must be finite, got ({x}, {y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str

    def __post_init__(self):
        if not self.src or not self.dst:
            raise RecordError(f"edge endpoints must be non-empty, got {self.src!r} -> {self.dst!r}")


@dataclass(frozen=True)
class Pair:
    name: str
    count: int

    def __post_init__(self):
        if isinstance(self.count, bool) or not isinstance(self.count, int):
            raise RecordError(f"pair count must be an integer, got {self.count!r}")
        if not -(2**63) <= self.count < 2**63:
            raise RecordError(f"pair count {self.count} does not fit in 64 bits")


Value = Union[Text, Number, Point, Edge, Pair]

# variant tag used on the wire (logstore frames)
TAGS: dict[type, str] = {Text: "text", Number: "num", Point: "point", Edge: "edge", Pair: "pair"}
_BY_TAG = {tag: cls for cls, tag in TAGS.items()}


@dataclass(frozen=True)
class Record:
    key: str
    value: Value

    def __post_init__(self):
        if not isinstance(self.key, str) or not self.key:
            raise RecordError("record key must be a non-empty string")
        if type(self.value) not in TAGS:
            raise RecordError(f"unsupported record value {self.value!r}")


def text(key: str, s: str) -> Record:
    return Record(key, Text(s))


def to_wire(record: Record) -> dict:
    v = record.value
    if isinstance(v, Text):
        payload = v.text
    elif isinstance(v, Number):
        payload = v.value
    elif isinstance(v, Point):
        payload = [v.x, v.y]
    elif isinstance(v, Edge):
        payload = [v.src, v.dst]
    else:
        payload = [v.name, v.count]
    return {"k": record.key, "t": TAGS[type(v)], "v": payload}


def from_wire(obj: dict) -> Record:
    try:
        cls = _BY_TAG[obj["t"]]
        v = obj["v"]
        value = cls(v) if cls in (Text, Number) else cls(*v)
        return Record(obj["k"], value)
    except (KeyError, TypeError) as exc:
        raise RecordError(f"malformed record {obj!r}") from exc


def encode(record: Record) -> bytes:
    """Compact UTF-8 JSON encoding of one record."""
    return json.dumps(to_wire(record), ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode(data: bytes) -> Record:
    return from_wire(json.loads(data.decode("utf-8")))
