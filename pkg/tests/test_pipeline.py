import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datar.engines import ChainBuilder, EngineKind, build_chain, builtin_registry, load_config
from datar.errors import DuplicatePipeKind, EmptyPipeline, OrderViolation, PipelineError, StageError, TaskResolutionError
from datar.pipeline import Pipe, Task, connect, execute, job_pipeline, sample_memory

I, S, C, K, O = EngineKind.INPUT, EngineKind.STORAGE, EngineKind.COMPUTATION, EngineKind.CONTROL, EngineKind.OUTPUT


def pipe(kind, name="t"):
    return Pipe.of(kind, name)


def test_canonical_four_stage():
    p = connect([pipe(I, "load"), pipe(S, "write"), pipe(C, "wordcount"), pipe(O, "emit")])
    assert p.kinds == [I, S, C, O]


def test_order_violation():
    with pytest.raises(OrderViolation):
        connect([pipe(C), pipe(I)])
    with pytest.raises(OrderViolation):
        connect([pipe(I), pipe(K)])


def test_duplicate_kind():
    with pytest.raises(DuplicatePipeKind):
        connect([pipe(I), pipe(I)])


def test_empty():
    with pytest.raises(EmptyPipeline):
        connect([])
    with pytest.raises(EmptyPipeline):
        Pipe(I, ())


def test_task_kind_must_match_pipe():
    with pytest.raises(PipelineError):
        Pipe(I, (Task("emit", O),))


@given(st.lists(st.sampled_from([I, S, C, K, O]), min_size=1, max_size=6))
def test_connect_accepts_exactly_valid_orders(kinds):
    order = [I, S, C, O]
    valid = (
        len(set(kinds)) == len(kinds)
        and (K not in kinds or kinds[0] is K)
        and [k for k in kinds if k is not K] == sorted((k for k in kinds if k is not K), key=order.index)
    )
    if valid:
        assert connect([pipe(k) for k in kinds]).kinds == kinds
    else:
        with pytest.raises(PipelineError):
            connect([pipe(k) for k in kinds])


def test_wordcount_end_to_end(registry, in_repo):
    chain = build_chain(registry, load_config("configs/reference.conf").with_engine(O, "json"))
    bd, report = execute(job_pipeline("wordcount"), chain)
    assert {r.value.name: r.value.count for r in bd.records} == {"Spark": 4, "YARN": 1}
    assert [s.kind.label for s in report.stages] == ["Control", "Input", "Storage", "Computation", "Output"]
    assert report.size == 5
    assert all(s.ns >= 0 and s.mem_mb > 0 for s in report.stages)
    assert report.framework_ns >= 0
    assert "wordcount.json" in report.artifacts
    doc = report.to_json()
    assert list(doc) == ["job", "size", "stages", "framework_ms", "timestamp"]
    assert list(doc["stages"][0]) == ["kind", "ms", "mem_mb"]


def test_computation_reads_back_from_storage(make_chain):
    chain = make_chain()
    bd, _ = execute(job_pipeline("sort", input_params={"kind": "strings", "size": "20", "seed": "1"}), chain)
    origin = bd.lineage[0]
    assert origin.op_name == "store" and origin.params["engine"] == "memstore"
    assert origin.params["dataset_id"] in chain.engine(S)


def test_without_storage_pipe(make_chain):
    bd, report = execute(job_pipeline("sort", input_params={"kind": "strings", "size": "20"}, storage=False), make_chain())
    assert bd.lineage[0].op_name == "generator"
    assert [s.kind for s in report.stages] == [K, I, C, O]


def test_unresolvable_task_fails_before_running(make_chain):
    chain = make_chain()
    pipeline = connect([Pipe.of(K, "admit"), Pipe.of(I, "load"), Pipe.of(S, "write"), Pipe.of(C, "terasort")])
    with pytest.raises(TaskResolutionError):
        execute(pipeline, chain)
    assert chain.engine(S).datasets() == []
    assert chain.engine(K).running is None


def test_unknown_task_param_fails_before_running(make_chain):
    chain = make_chain()
    with pytest.raises(Exception):
        execute(job_pipeline("kmeans", {"clusters": "3"}), chain)
    assert chain.engine(S).datasets() == []


def test_same_run_twice_is_identical(make_chain):
    chain = make_chain()
    pipeline = job_pipeline("kmeans", {"k": "5"}, input_params={"kind": "points", "size": "500", "seed": "3"})
    a, ra = execute(pipeline, chain)
    b, rb = execute(pipeline, chain)
    assert a.records == b.records
    assert [s.kind for s in ra.stages] == [s.kind for s in rb.stages]


@settings(max_examples=20)
@given(st.sampled_from([I, S, C, O]), st.sampled_from(["wordcount", "sort", "kmeans", "pagerank"]))
def test_failures_never_leak_the_token(stage, job):
    chain = ChainBuilder(builtin_registry()).input("generator").storage("memstore").computation("builtin") \
        .control("standalone", blocking="false").output("json").build()
    engine = chain.engine(stage)
    original = engine.tasks

    def boom(ctx, data, params):
        raise RuntimeError("injected")

    engine.tasks = lambda: {name: type(spec)(boom, spec.params) for name, spec in original().items()}
    kind = {"wordcount": "words", "sort": "strings", "kmeans": "points", "pagerank": "edges"}[job]
    with pytest.raises(StageError) as err:
        execute(job_pipeline(job, input_params={"kind": kind, "size": "30"}), chain)
    assert err.value.stage is stage
    assert chain.engine(K).running is None
    engine.tasks = original
    execute(job_pipeline(job, input_params={"kind": kind, "size": "30"}), chain)


def test_data_errors_surface_as_stage_errors(make_chain):
    with pytest.raises(StageError) as err:
        execute(job_pipeline("kmeans", {"k": "50"}, input_params={"kind": "points", "size": "10"}), make_chain())
    assert type(err.value.cause).__name__ == "KTooLarge"


# -- memory sampling -----------------------------------------------------------------


def test_memory_non_negative():
    assert sample_memory() >= 0


def test_memory_sees_large_allocation():
    before = sample_memory()
    buf = np.ones(100 * 2**20, dtype=np.uint8)  # touched, so resident
    after = sample_memory()
    assert after - before >= 80
    del buf


def test_memory_is_stable():
    a = sample_memory()
    b = sample_memory()
    assert abs(a - b) <= 0.1 * a
