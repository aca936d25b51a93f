"""Engine registry, configuration file format and configuration chains.

An engine wrapper is a subclass of :class:`Engine`. It declares its kind,
name, version and accepted parameters, exposes named tasks, and may override
:meth:`Engine.probe` to report whether the thing it wraps is usable.

Config file format::

    [datar]
    input = file
    storage = memstore
    computation = builtin
    control = standalone
    output = svg

    [input.file]
    path = data/egDBcount.txt
    format = lines

``[datar]`` must name all five slots and nothing else; every other section is
``[<slot>.<engine>]`` and holds that engine's parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, ClassVar, Iterator, Mapping

from datar.errors import (
    ConfigError,
    ConfigSyntaxError,
    DuplicateEngine,
    EngineUnavailable,
    InvalidParams,
    MissingSlot,
    TaskResolutionError,
    UnknownEngine,
    UnknownKey,
    UnknownSection,
)


class EngineKind(str, Enum):
    INPUT = "input"
    STORAGE = "storage"
    COMPUTATION = "computation"
    CONTROL = "control"
    OUTPUT = "output"

    @property
    def label(self) -> str:
        return self.value.capitalize()

    def __str__(self) -> str:
        return self.label


KINDS: tuple[EngineKind, ...] = tuple(EngineKind)


@dataclass(frozen=True)
class Availability:
    available: bool
    reason: str = ""

    def __str__(self) -> str:
        return "Available" if self.available else f"Unavailable({self.reason})"

    def __bool__(self) -> bool:
        return self.available


AVAILABLE = Availability(True)


def unavailable(reason: str) -> Availability:
    return Availability(False, reason)


Probe = Callable[[Mapping[str, str]], Availability]


@dataclass(frozen=True)
class EngineDescriptor:
    name: str
    kind: EngineKind
    version: str
    probe: Probe = field(compare=False, repr=False)


@dataclass(frozen=True)
class TaskSpec:
    fn: Callable
    params: frozenset[str] = frozenset()

    def check(self, task: str, params: Mapping[str, str]) -> None:
        unknown = sorted(set(params) - self.params)
        if unknown:
            raise InvalidParams(f"task {task!r}: unknown parameter(s) {', '.join(unknown)}")


class Engine:
    """Base class for engine wrappers."""

    name: ClassVar[str]
    kind: ClassVar[EngineKind]
    version: ClassVar[str] = "1.0"
    accepts: ClassVar[frozenset[str]] = frozenset()

    def __init__(self, params: Mapping[str, str] | None = None):
        self.params = {str(k): str(v) for k, v in (params or {}).items()}
        unknown = sorted(set(self.params) - self.accepts)
        if unknown:
            raise InvalidParams(f"{self.kind} engine {self.name!r}: unknown parameter(s) {', '.join(unknown)}")

    @classmethod
    def probe(cls, params: Mapping[str, str]) -> Availability:
        return AVAILABLE

    @classmethod
    def descriptor(cls) -> EngineDescriptor:
        return EngineDescriptor(cls.name, cls.kind, cls.version, cls.probe)

    def tasks(self) -> Mapping[str, TaskSpec]:
        return {}

    def task(self, name: str) -> TaskSpec:
        try:
            return self.tasks()[name]
        except KeyError:
            raise TaskResolutionError(
                f"{self.kind} engine {self.name!r} has no task {name!r} (has: {', '.join(sorted(self.tasks()))})"
            ) from None

    def close(self) -> None:
        pass


class Registry:
    """Engines resolvable by ``(kind, name)``. Names are unique per kind."""

    def __init__(self):
        self._entries: dict[tuple[EngineKind, str], tuple[EngineDescriptor, type]] = {}
        self._frozen = False

    def register(self, descriptor: EngineDescriptor, wrapper: type) -> "Registry":
        if self._frozen:
            raise RuntimeError("registry is frozen")
        key = (EngineKind(descriptor.kind), descriptor.name)
        if key in self._entries:
            raise DuplicateEngine(descriptor.name, descriptor.kind)
        self._entries[key] = (descriptor, wrapper)
        return self

    def freeze(self) -> "Registry":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def lookup(self, kind: EngineKind, name: str) -> tuple[EngineDescriptor, type]:
        try:
            return self._entries[(EngineKind(kind), name)]
        except KeyError:
            raise UnknownEngine(EngineKind(kind), name) from None

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[EngineDescriptor]:
        order = {k: i for i, k in enumerate(KINDS)}
        for key in sorted(self._entries, key=lambda kn: (order[kn[0]], kn[1])):
            yield self._entries[key][0]


def register_engine(registry: Registry, descriptor: EngineDescriptor, wrapper: type) -> Registry:
    return registry.register(descriptor, wrapper)


# -- config file ---------------------------------------------------------------

_SECTION = re.compile(r"^\[([^\[\]]+)\]$")
_ASSIGN = re.compile(r"^([^\s=#\[]+) = (.*)$")


@dataclass
class DatarConfig:
    engines: dict[EngineKind, str]
    params: dict[tuple[EngineKind, str], dict[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        for kind in KINDS:
            if not self.engines.get(kind):
                raise MissingSlot(kind)
        extra = set(self.engines) - set(KINDS)
        if extra:
            raise ConfigError(f"unknown slot(s): {extra}")

    def params_for(self, kind: EngineKind, name: str | None = None) -> dict[str, str]:
        return dict(self.params.get((kind, name or self.engines[kind]), {}))

    def with_engine(self, kind: EngineKind, name: str, params: Mapping[str, str] | None = None) -> "DatarConfig":
        engines = dict(self.engines)
        engines[kind] = name
        all_params = {k: dict(v) for k, v in self.params.items()}
        if params is not None:
            all_params[(kind, name)] = {str(k): str(v) for k, v in params.items()}
        return DatarConfig(engines, all_params)


def parse_config(text: str) -> DatarConfig:
    engines: dict[EngineKind, str] = {}
    params: dict[tuple[EngineKind, str], dict[str, str]] = {}
    seen: set[str] = set()
    section: str | None = None
    current: dict[str, str] | None = None
    has_datar = False

    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            if section in seen:
                raise ConfigSyntaxError(lineno, f"duplicate section [{section}]")
            seen.add(section)
            if section == "datar":
                has_datar = True
                current = None
                continue
            kind_name, dot, engine = section.partition(".")
            if not dot or not engine or kind_name not in {k.value for k in KINDS}:
                raise UnknownSection(section, lineno)
            current = params.setdefault((EngineKind(kind_name), engine), {})
            continue
        m = _ASSIGN.match(line)
        if not m:
            raise ConfigSyntaxError(lineno, f"expected '[section]' or 'key = value', got {line!r}")
        if section is None:
            raise ConfigSyntaxError(lineno, "assignment outside of any section")
        key, value = m.group(1), m.group(2)
        if section == "datar":
            if key not in {k.value for k in KINDS}:
                raise UnknownKey("datar", key)
            kind = EngineKind(key)
            if kind in engines:
                raise ConfigSyntaxError(lineno, f"duplicate key {key!r}")
            if not value.strip():
                raise ConfigSyntaxError(lineno, f"empty engine name for {key!r}")
            engines[kind] = value
        else:
            if key in current:
                raise ConfigSyntaxError(lineno, f"duplicate key {key!r}")
            current[key] = value

    if not has_datar:
        raise ConfigError("missing mandatory [datar] section")
    for kind in KINDS:
        if kind not in engines:
            raise MissingSlot(kind)
    return DatarConfig(engines, params)


def serialize_config(config: DatarConfig) -> str:
    lines = ["[datar]"]
    lines += [f"{kind.value} = {config.engines[kind]}" for kind in KINDS]
    for (kind, name), values in config.params.items():
        lines += ["", f"[{kind.value}.{name}]"]
        lines += [f"{k} = {v}" for k, v in values.items()]
    return "\n".join(lines) + "\n"


def load_config(path) -> DatarConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- chains --------------------------------------------------------------------


@dataclass(frozen=True)
class Binding:
    descriptor: EngineDescriptor
    params: Mapping[str, str]
    engine: Engine = field(compare=False, repr=False)


class ConfChain:
    """All five engine slots bound to live engines; immutable once built.

    Use :func:`build_chain` rather than the constructor: it resolves names
    through a registry and refuses engines whose probe fails.
    """

    def __init__(self, bindings: Mapping[EngineKind, Binding], registry: Registry | None = None,
                 config: DatarConfig | None = None):
        for kind in KINDS:
            if kind not in bindings:
                raise MissingSlot(kind)
        self._bindings = {kind: bindings[kind] for kind in KINDS}
        self.registry = registry
        self.config = config

    @property
    def bindings(self) -> Mapping[EngineKind, Binding]:
        return dict(self._bindings)

    def binding(self, kind: EngineKind) -> Binding:
        return self._bindings[kind]

    def engine(self, kind: EngineKind) -> Engine:
        return self._bindings[kind].engine

    def describe(self) -> list[tuple[EngineKind, str]]:
        return [(kind, b.descriptor.name) for kind, b in self._bindings.items()]

    def with_engine(self, kind: EngineKind, name: str, params: Mapping[str, str] | None = None) -> "ConfChain":
        """A new chain with one slot rebound; the other engines are shared."""
        if self.registry is None or self.config is None:
            raise ConfigError("chain was not built from a registry; cannot rebind")
        config = self.config.with_engine(kind, name, params)
        bound = _bind(self.registry, kind, name, config.params_for(kind, name))
        bindings = dict(self._bindings)
        bindings[kind] = bound
        return ConfChain(bindings, self.registry, config)

    def close(self) -> None:
        for b in self._bindings.values():
            b.engine.close()


def _bind(registry: Registry, kind: EngineKind, name: str, params: Mapping[str, str]) -> Binding:
    descriptor, wrapper = registry.lookup(kind, name)
    engine = wrapper(params)
    status = descriptor.probe(params)
    if not status.available:
        raise EngineUnavailable(kind, name, status.reason)
    return Binding(descriptor, dict(params), engine)


def build_chain(registry: Registry, config: DatarConfig) -> ConfChain:
    bindings = {}
    for kind in KINDS:
        name = config.engines[kind]
        bindings[kind] = _bind(registry, kind, name, config.params_for(kind, name))
    return ConfChain(bindings, registry, config)


def probe_all(chain: ConfChain) -> dict[EngineKind, Availability]:
    return {kind: b.descriptor.probe(b.params) for kind, b in chain.bindings.items()}


class ChainBuilder:
    """Programmatic counterpart of the config file.

    >>> chain = (ChainBuilder(registry).input("file", path="words.txt")
    ...          .storage("memstore").computation("builtin")
    ...          .control("standalone").output("json").build())  # doctest: +SKIP
    """

    def __init__(self, registry: Registry):
        self.registry = registry
        self._engines: dict[EngineKind, str] = {}
        self._params: dict[tuple[EngineKind, str], dict[str, str]] = {}

    def slot(self, kind: EngineKind, name: str, /, **params) -> "ChainBuilder":
        self._engines[kind] = name
        if params:
            self._params[(kind, name)] = {k: str(v) for k, v in params.items()}
        return self

    def input(self, name: str, /, **params) -> "ChainBuilder":
        return self.slot(EngineKind.INPUT, name, **params)

    def storage(self, name: str, /, **params) -> "ChainBuilder":
        return self.slot(EngineKind.STORAGE, name, **params)

    def computation(self, name: str, /, **params) -> "ChainBuilder":
        return self.slot(EngineKind.COMPUTATION, name, **params)

    def control(self, name: str, /, **params) -> "ChainBuilder":
        return self.slot(EngineKind.CONTROL, name, **params)

    def output(self, name: str, /, **params) -> "ChainBuilder":
        return self.slot(EngineKind.OUTPUT, name, **params)

    def config(self) -> DatarConfig:
        return DatarConfig(dict(self._engines), dict(self._params))

    def build(self) -> ConfChain:
        return build_chain(self.registry, self.config())
