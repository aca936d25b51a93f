import itertools
import os
import shutil

import pytest
from hypothesis import given
from hypothesis import strategies as st

from datar.engines import (
    KINDS,
    ChainBuilder,
    ConfChain,
    DatarConfig,
    Engine,
    EngineKind,
    Registry,
    build_chain,
    builtin_registry,
    load_config,
    parse_config,
    probe_all,
    serialize_config,
)
from datar.engines.api import Binding, unavailable
from datar.engines.storage import MemStore
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

from conftest import REPO

REFERENCE = (REPO / "configs" / "reference.conf").read_text()

# the subsets of slots a config may name while still missing at least one
PROPER_SUBSETS = [set(c) for n in range(5) for c in itertools.combinations(KINDS, n)]


def config_text(kinds, engines=None):
    engines = engines or {
        EngineKind.INPUT: "generator",
        EngineKind.STORAGE: "memstore",
        EngineKind.COMPUTATION: "builtin",
        EngineKind.CONTROL: "standalone",
        EngineKind.OUTPUT: "json",
    }
    return "[datar]\n" + "".join(f"{k.value} = {engines[k]}\n" for k in KINDS if k in kinds)


def test_five_kinds():
    assert [k.label for k in KINDS] == ["Input", "Storage", "Computation", "Control", "Output"]


def test_register_one():
    reg = Registry()
    reg.register(MemStore.descriptor(), MemStore)
    assert len(reg) == 1


def test_register_duplicate():
    reg = Registry().register(MemStore.descriptor(), MemStore)
    with pytest.raises(DuplicateEngine):
        reg.register(MemStore.descriptor(), MemStore)


def test_same_name_other_kind():
    class MemOut(Engine):
        name = "memstore"
        kind = EngineKind.OUTPUT

    reg = Registry().register(MemStore.descriptor(), MemStore).register(MemOut.descriptor(), MemOut)
    assert len(reg) == 2
    assert reg.lookup(EngineKind.OUTPUT, "memstore")[1] is MemOut
    assert reg.lookup(EngineKind.STORAGE, "memstore")[1] is MemStore


def test_lookup_is_pure(registry):
    assert registry.lookup(EngineKind.STORAGE, "logstore") == registry.lookup(EngineKind.STORAGE, "logstore")
    with pytest.raises(UnknownEngine):
        registry.lookup(EngineKind.INPUT, "logstore")


def test_frozen_registry_rejects_registration():
    reg = builtin_registry(freeze=True)
    with pytest.raises(RuntimeError):
        reg.register(MemStore.descriptor(), MemStore)


# -- config file ----------------------------------------------------------------


def test_reference_config():
    cfg = parse_config(REFERENCE)
    assert cfg.engines == {
        EngineKind.INPUT: "file",
        EngineKind.STORAGE: "memstore",
        EngineKind.COMPUTATION: "builtin",
        EngineKind.CONTROL: "standalone",
        EngineKind.OUTPUT: "svg",
    }
    assert cfg.params_for(EngineKind.INPUT) == {"path": "data/egDBcount.txt", "format": "lines"}
    assert cfg.params_for(EngineKind.STORAGE, "logstore") == {"dir": "bigdb/"}


def test_reference_config_is_bit_exact():
    assert serialize_config(parse_config(REFERENCE)) == REFERENCE


def test_missing_control_line():
    text = REFERENCE.replace("control = standalone\n", "")
    with pytest.raises(MissingSlot) as err:
        parse_config(text)
    assert err.value.kind is EngineKind.CONTROL


def test_params_propagate_to_binding(registry, in_repo):
    text = REFERENCE + "\n[storage.memstore]\ncapacity = 1000000\n"
    chain = build_chain(registry, parse_config(text))
    binding = chain.binding(EngineKind.STORAGE)
    assert binding.params == {"capacity": "1000000"}
    assert chain.engine(EngineKind.STORAGE).capacity == 1_000_000


@pytest.mark.parametrize(
    "text,exc",
    [
        ("input = file\n", ConfigSyntaxError),
        ("[datar]\ninput=file\n", ConfigSyntaxError),
        ("[datar]\nfoo = bar\n", UnknownKey),
        ("[datar]\ninput = file\ninput = file\n", ConfigSyntaxError),
        ("[datar]\n[datar]\n", ConfigSyntaxError),
        ("[engines.x]\n", UnknownSection),
        ("[input]\n", UnknownSection),
        ("# nothing\n", ConfigError),
    ],
)
def test_config_errors(text, exc):
    with pytest.raises(exc):
        parse_config(text)


def test_comments_and_blank_lines_ignored():
    cfg = parse_config("# chain\n\n" + REFERENCE)
    assert cfg.engines == parse_config(REFERENCE).engines


word = st.text(st.characters(whitelist_categories=("Ll", "Lu", "Nd"), whitelist_characters="_-./"), min_size=1, max_size=10)
value = st.text(st.characters(blacklist_categories=("Cs", "Cc"), blacklist_characters="\n\r"), max_size=20)


@given(
    st.fixed_dictionaries({k: word for k in KINDS}),
    st.dictionaries(st.tuples(st.sampled_from(KINDS), word), st.dictionaries(word, value, max_size=4), max_size=4),
)
def test_parse_serialize_identity(engines, params):
    cfg = DatarConfig(engines, params)
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


# -- chains --------------------------------------------------------------------------


@pytest.mark.parametrize("present", PROPER_SUBSETS, ids=lambda s: "+".join(sorted(k.value for k in s)) or "none")
def test_missing_slots_rejected(present, registry):
    with pytest.raises(MissingSlot):
        parse_config(config_text(present))
    with pytest.raises(MissingSlot):
        DatarConfig({k: "x" for k in present})
    full = ChainBuilder(registry).input("generator").storage("memstore").computation("builtin") \
        .control("standalone").output("json").build()
    with pytest.raises(MissingSlot):
        ConfChain({k: full.binding(k) for k in present})


def test_reference_chain_binds_five(registry, in_repo):
    chain = build_chain(registry, load_config("configs/reference.conf"))
    assert [n for _, n in chain.describe()] == ["file", "memstore", "builtin", "standalone", "svg"]
    assert len(chain.bindings) == 5


def test_unknown_engine(registry):
    text = config_text(set(KINDS)).replace("computation = builtin", "computation = sparkle")
    with pytest.raises(UnknownEngine) as err:
        build_chain(registry, parse_config(text))
    assert err.value.name == "sparkle"


def test_unwritable_logstore_dir(registry, tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    os.chmod(ro, 0o555)
    try:
        with pytest.raises(EngineUnavailable) as err:
            ChainBuilder(registry).input("generator").storage("logstore", dir=str(ro)).computation("builtin") \
                .control("standalone").output("json").build()
        assert "not writable" in err.value.reason
        assert err.value.kind is EngineKind.STORAGE
    finally:
        os.chmod(ro, 0o755)


def test_invalid_engine_params(make_chain):
    with pytest.raises(InvalidParams):
        make_chain(storage_params={"colour": "red"})


def test_probe_all(make_chain, tmp_path):
    chain = make_chain(storage="logstore")
    status = probe_all(chain)
    assert [str(s) for s in status.values()] == ["Available"] * 5
    assert probe_all(chain) == status
    shutil.rmtree(tmp_path / "bigdb")
    after = probe_all(chain)
    assert not after[EngineKind.STORAGE]
    assert str(after[EngineKind.STORAGE]).startswith("Unavailable(")
    assert all(after[k] for k in KINDS if k is not EngineKind.STORAGE)
    assert probe_all(chain) == after


def test_file_input_probe(registry, tmp_path):
    with pytest.raises(EngineUnavailable):
        ChainBuilder(registry).input("file", path=str(tmp_path / "none.txt")).storage("memstore") \
            .computation("builtin").control("standalone").output("json").build()


def test_rebinding_one_slot(make_chain):
    chain = make_chain()
    other = chain.with_engine(EngineKind.OUTPUT, "table")
    assert other.binding(EngineKind.OUTPUT).descriptor.name == "table"
    assert other.engine(EngineKind.STORAGE) is chain.engine(EngineKind.STORAGE)
    assert chain.binding(EngineKind.OUTPUT).descriptor.name == "json"


def test_custom_engine_with_failing_probe():
    class Flaky(Engine):
        name = "flaky"
        kind = EngineKind.CONTROL

        @classmethod
        def probe(cls, params):
            return unavailable("daemon down")

    reg = builtin_registry().register(Flaky.descriptor(), Flaky)
    with pytest.raises(EngineUnavailable, match="daemon down"):
        ChainBuilder(reg).input("generator").storage("memstore").computation("builtin").control("flaky") \
            .output("json").build()


def test_task_resolution(make_chain):
    with pytest.raises(TaskResolutionError):
        make_chain().engine(EngineKind.COMPUTATION).task("terasort")


def test_binding_is_immutable(make_chain):
    b = make_chain().binding(EngineKind.INPUT)
    assert isinstance(b, Binding)
    with pytest.raises(AttributeError):
        b.params = {}


def test_builder_passes_any_param_name(registry):
    builder = ChainBuilder(registry).input("generator", kind="points", size=10).storage("memstore")
    builder.computation("builtin").control("standalone").output("json")
    assert builder.config().params_for(EngineKind.INPUT) == {"kind": "points", "size": "10"}
    builder.slot(EngineKind.OUTPUT, "svg", name="x", kind="y")
    assert builder.config().params_for(EngineKind.OUTPUT) == {"name": "x", "kind": "y"}
