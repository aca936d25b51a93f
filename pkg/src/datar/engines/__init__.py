"""Engine API plus the reference engines that ship with the framework."""

from datar.engines.api import (
    AVAILABLE,
    KINDS,
    Availability,
    ChainBuilder,
    ConfChain,
    DatarConfig,
    Engine,
    EngineDescriptor,
    EngineKind,
    Registry,
    TaskSpec,
    build_chain,
    load_config,
    parse_config,
    probe_all,
    register_engine,
    serialize_config,
    unavailable,
)
from datar.engines.computation import Builtin
from datar.engines.control import Standalone
from datar.engines.inputs import FileInput, GeneratorInput
from datar.engines.output import JsonOutput, SvgOutput, TableOutput
from datar.engines.storage import LogStore, MemStore

BUILTIN_ENGINES = (FileInput, GeneratorInput, MemStore, LogStore, Builtin, Standalone, TableOutput, JsonOutput, SvgOutput)


def builtin_registry(freeze: bool = False) -> Registry:
    registry = Registry()
    for wrapper in BUILTIN_ENGINES:
        registry.register(wrapper.descriptor(), wrapper)
    return registry.freeze() if freeze else registry
