"""Input engines: text files and seeded random generators."""

from __future__ import annotations

import os
import random
import string
from functools import lru_cache
from importlib import resources
from typing import Mapping

from datar.bigdata import FORMATS, BigData, from_file, register_origin
from datar.engines.api import Availability, Engine, EngineKind, TaskSpec, AVAILABLE, unavailable
from datar.errors import InvalidParams, UnknownKind
from datar.records import Edge, Point, Record, Text

GENERATOR_KINDS = ("words", "strings", "points", "edges")
DEFAULT_PAGES = 1000
POINT_RANGE = 1000.0


@lru_cache(maxsize=1)
def lexicon() -> tuple[str, ...]:
    text = resources.files("datar").joinpath("data/lexicon.txt").read_text(encoding="utf-8")
    return tuple(w for w in text.split("\n") if w)


def generate_records(kind: str, size: int, seed: int, pages: int = DEFAULT_PAGES) -> list[Record]:
    """Exactly ``size`` records, a pure function of ``(kind, size, seed)``."""
    if kind not in GENERATOR_KINDS:
        raise UnknownKind(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if size < 0:
        raise InvalidParams(f"size must be >= 0, got {size}")
    rng = random.Random(seed)
    keys = (str(i) for i in range(1, size + 1))
    if kind == "words":
        words = lexicon()
        return [Record(key, Text(rng.choice(words))) for key in keys]
    if kind == "strings":
        letters = string.ascii_lowercase
        return [Record(key, Text("".join(rng.choices(letters, k=8)))) for key in keys]
    if kind == "points":
        return [Record(key, Point(rng.random() * POINT_RANGE, rng.random() * POINT_RANGE)) for key in keys]
    if pages < 1:
        raise InvalidParams(f"pages must be >= 1, got {pages}")
    return [Record(key, Edge(f"page{rng.randrange(pages)}", f"page{rng.randrange(pages)}")) for key in keys]


def _int(params: Mapping[str, str], name: str, default: int) -> int:
    raw = params.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise InvalidParams(f"{name} must be an integer, got {raw!r}") from None


def generate(kind: str, size: int, seed: int, pages: int = DEFAULT_PAGES) -> BigData:
    records = generate_records(kind, size, seed, pages)
    origin = {"kind": kind, "size": size, "seed": seed}
    if kind == "edges":
        origin["pages"] = pages
    return BigData.from_origin(records, "generator", **origin)


@register_origin("generator")
def _regenerate(params: Mapping[str, str]) -> list[Record]:
    return generate_records(params["kind"], int(params["size"]), int(params["seed"]),
                            int(params.get("pages", DEFAULT_PAGES)))


class FileInput(Engine):
    name = "file"
    kind = EngineKind.INPUT
    accepts = frozenset({"path", "format"})

    def __init__(self, params=None):
        super().__init__(params)
        fmt = self.params.get("format", "lines")
        if fmt not in FORMATS:
            raise InvalidParams(f"file input: format must be one of {FORMATS}, got {fmt!r}")

    @classmethod
    def probe(cls, params: Mapping[str, str]) -> Availability:
        path = params.get("path")
        if not path:
            return unavailable("no path configured")
        if not os.path.isfile(path):
            return unavailable(f"file not found: {path}")
        if not os.access(path, os.R_OK):
            return unavailable(f"file not readable: {path}")
        return AVAILABLE

    def read(self, params: Mapping[str, str] | None = None) -> BigData:
        merged = {**self.params, **(params or {})}
        if "path" not in merged:
            raise InvalidParams("file input: no path given")
        return from_file(merged["path"], merged.get("format", "lines"))

    def _load(self, ctx, data, params):
        return self.read(params)

    def tasks(self):
        spec = TaskSpec(self._load, frozenset({"path", "format"}))
        return {"load": spec, "read": spec}


class GeneratorInput(Engine):
    name = "generator"
    kind = EngineKind.INPUT
    accepts = frozenset({"kind", "size", "seed", "pages"})

    def generate(self, params: Mapping[str, str] | None = None) -> BigData:
        merged = {**self.params, **(params or {})}
        kind = merged.get("kind", "words")
        return generate(kind, _int(merged, "size", 1000), _int(merged, "seed", 42), _int(merged, "pages", DEFAULT_PAGES))

    def _load(self, ctx, data, params):
        return self.generate(params)

    def tasks(self):
        spec = TaskSpec(self._load, self.accepts)
        return {"load": spec, "generate": spec}
