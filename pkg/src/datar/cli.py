"""Command line: ``datar validate | run | bench | list-engines``.

Exit status is 0 on success, 1 for invalid input (config, parameters, data
that does not fit the job) and 2 for failures while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from datar import bigo
from datar.bench import BenchPlan, render_table, run_bench
from datar.engines.api import KINDS, ChainBuilder, EngineKind, build_chain, load_config
from datar.engines.output import emit_json
from datar.errors import DatarError, StageError, ValidationError
from datar.pipeline import GENERATOR_KIND, execute, job_pipeline

log = logging.getLogger("datar")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _exit_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    while True:
        if isinstance(cause, ValidationError):
            return EXIT_INVALID
        nxt = getattr(cause, "cause", None)
        if nxt is None:
            return EXIT_RUNTIME
        cause = nxt


def cmd_validate(args) -> int:
    registry = bigo().registry
    config = load_config(args.config)
    failed = False
    for kind in KINDS:
        name = config.engines[kind]
        try:
            descriptor, wrapper = registry.lookup(kind, name)
            params = config.params_for(kind)
            wrapper(params)
            status = str(descriptor.probe(params))
            failed |= not status.startswith("Available")
        except ValidationError as exc:
            status = f"Error({exc})"
            failed = True
        print(f"{kind.label:<12} {name:<12} {status}")
    return EXIT_INVALID if failed else EXIT_OK


def _task_params(args) -> dict[str, str]:
    params = {}
    if args.job == "kmeans":
        for name in ("k", "iterations", "seed"):
            if getattr(args, name) is not None:
                params[name] = str(getattr(args, name))
    elif args.job == "pagerank":
        if args.damping is not None:
            params["damping"] = repr(args.damping)
        if args.iterations is not None:
            params["iterations"] = str(args.iterations)
    return params


def cmd_run(args) -> int:
    registry = bigo().registry
    config = load_config(args.config)
    if args.size is not None:
        gen = {"kind": GENERATOR_KIND[args.job], "size": str(args.size), "seed": str(args.seed if args.seed is not None else 42)}
        config = config.with_engine(EngineKind.INPUT, "generator", gen)
    chain = build_chain(registry, config)
    try:
        bd, report = execute(job_pipeline(args.job, _task_params(args)), chain)
    finally:
        chain.close()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = {f"{args.job}.json": emit_json(bd)}
    written.update(report.artifacts)
    for name, text in written.items():
        (out / name).write_bytes(text.encode("utf-8"))
    (out / f"{args.job}.report.json").write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    for s in report.stages:
        print(f"{s.kind.label:<12} {s.ms:10.3f} ms  {s.mem_mb:8.1f} MB")
    print(f"{'Framework':<12} {report.framework_ms:10.3f} ms")
    print(f"{len(bd.records)} records -> {', '.join(str(out / n) for n in sorted(written))}")
    return EXIT_OK


def default_bench_chain():
    return (
        ChainBuilder(bigo().registry)
        .input("generator")
        .storage("logstore", dir="bigdb", mode="pertuple")
        .computation("builtin")
        .control("standalone")
        .output("json")
        .build()
    )


def cmd_bench(args) -> int:
    plan = BenchPlan.load(args.plan)
    chain = bigo().chain(args.config) if args.config else default_bench_chain()

    def progress(job, size, rep, report):
        log.info("%s size=%d rep=%d total=%.1f ms", job, size, rep + 1, report.total_ns / 1e6)

    try:
        report = run_bench(plan, chain, progress)
    finally:
        chain.close()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(report.dumps(), encoding="utf-8")
    table = render_table(report)
    (out / "bench.txt").write_text(table, encoding="utf-8")
    print(table)
    return EXIT_RUNTIME if any(c.error for c in report.cells) else EXIT_OK


def cmd_list_engines(args) -> int:
    for d in bigo().registry:
        print(f"{d.kind.label:<12} {d.name:<12} {d.version}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="datar", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse a config, bind the engines and probe them")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="run one workload through the configured chain")
    r.add_argument("job", choices=sorted(GENERATOR_KIND))
    r.add_argument("--config", required=True)
    r.add_argument("--size", type=int, help="generate N input items instead of reading the configured input")
    r.add_argument("--seed", type=int)
    r.add_argument("--k", type=int)
    r.add_argument("--iterations", type=int)
    r.add_argument("--damping", type=float)
    r.add_argument("--out", default="out")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="run a benchmark plan")
    b.add_argument("--plan", required=True)
    b.add_argument("--config", help="chain to benchmark (default: generator/logstore/builtin/standalone/json)")
    b.add_argument("--out", default="results")
    b.set_defaults(func=cmd_bench)

    le = sub.add_parser("list-engines", help="print the engine registry")
    le.set_defaults(func=cmd_list_engines)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (DatarError, OSError) as exc:
        print(f"datar: error: {exc}", file=sys.stderr)
        return _exit_code(exc) if isinstance(exc, DatarError) else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
