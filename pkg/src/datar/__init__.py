"""Pluggable big-data management framework.

Five engine slots (input, storage, computation, control, output) are bound
by a configuration chain; job pipelines move lineage-tracked ``BigData``
through them and report per-stage time and memory.
"""

from functools import lru_cache

from datar.bigdata import (
    BigData,
    LineageEntry,
    OpKind,
    apply_action,
    apply_transformation,
    from_file,
    replay,
    to_file,
)
from datar.engines import (
    ChainBuilder,
    ConfChain,
    DatarConfig,
    EngineKind,
    Registry,
    build_chain,
    builtin_registry,
    load_config,
    parse_config,
    probe_all,
    serialize_config,
)
from datar.pipeline import Pipe, Task, connect, execute, job_pipeline, sample_memory
from datar.records import Edge, Number, Pair, Point, Record, Text

__version__ = "0.1.0"


@lru_cache(maxsize=1)
def bigo() -> "Framework":
    """The process-wide framework instance (frozen built-in registry)."""
    return Framework(builtin_registry(freeze=True))


class Framework:
    def __init__(self, registry: Registry):
        self.registry = registry

    def chain(self, config: "DatarConfig | str") -> ConfChain:
        if isinstance(config, str):
            config = load_config(config)
        return build_chain(self.registry, config)

    def builder(self) -> ChainBuilder:
        return ChainBuilder(self.registry)
