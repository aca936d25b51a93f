"""Output engines: fixed-width text tables, JSON documents and SVG charts.

Every emitter is a pure function of its input, so identical datasets give
byte-identical documents.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Mapping
from xml.sax.saxutils import escape

from datar.bigdata import BigData, OpKind
from datar.engines.api import Engine, EngineKind, TaskSpec
from datar.errors import EmptySeries
from datar.records import Edge, Number, Pair, Point, Record, Text, Value


def _num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return format(v, ".6g")


def render_value(record: Record) -> str:
    v = record.value
    if isinstance(v, Text):
        return v.text
    if isinstance(v, Number):
        return repr(v.value)
    if isinstance(v, Point):
        return f"({v.x!r}, {v.y!r})"
    if isinstance(v, Edge):
        return f"{v.src} -> {v.dst}"
    return str(v.count) if v.name == record.key else f"{v.name}={v.count}"


def emit_table(bd: BigData) -> str:
    rows = [(r.key, render_value(r)) for r in bd.records]
    kw = max([3] + [len(k) for k, _ in rows])
    vw = max([5] + [len(v) for _, v in rows])
    lines = [f"{'key':<{kw}}  {'value':<{vw}}".rstrip(), f"{'-' * kw}  {'-' * vw}"]
    lines += [f"{k:<{kw}}  {v:<{vw}}".rstrip() for k, v in rows]
    return "\n".join(lines) + "\n"


def json_value(v: Value):
    if isinstance(v, Text):
        return v.text
    if isinstance(v, Number):
        return v.value
    if isinstance(v, Point):
        return {"x": v.x, "y": v.y}
    if isinstance(v, Edge):
        return {"src": v.src, "dst": v.dst}
    return {"name": v.name, "count": v.count}


def emit_json(bd: BigData) -> str:
    doc = [{"key": r.key, "value": json_value(r.value)} for r in bd.records]
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# -- charts --------------------------------------------------------------------


class ChartKind(str, Enum):
    BAR = "bar"
    SCATTER = "scatter"


@dataclass(frozen=True)
class ChartSpec:
    """Bar series are ``(label, value)``; scatter series are ``(x, y, cluster)``."""

    kind: ChartKind
    title: str
    series: tuple

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(tuple(item) for item in self.series))
        if not self.series:
            raise EmptySeries(f"chart {self.title!r} has no data")
        for item in self.series:
            nums = item[1:2] if self.kind is ChartKind.BAR else item[:2]
            if not all(math.isfinite(float(x)) for x in nums):
                raise EmptySeries(f"chart {self.title!r} has a non-finite value in {item!r}")


WIDTH, HEIGHT = 800, 600
MARGIN = 60
PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)
MAX_LABELS = 40


def _f(x: float) -> str:
    return f"{x:.2f}"


def _svg_open(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" style="background:#ffffff;font-family:sans-serif">',
        f'<text class="title" x="{WIDTH // 2}" y="{MARGIN // 2}" '
        f'style="font-size:18px;text-anchor:middle">{escape(title)}</text>',
        f'<line class="axis" x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" style="stroke:#333333"/>',
        f'<line class="axis" x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" style="stroke:#333333"/>',
    ]


def _bars(chart: ChartSpec) -> list[str]:
    n = len(chart.series)
    top = max(max(float(v) for _, v in chart.series), 0.0)
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    slot = plot_w / n
    out = []
    for i, (label, value) in enumerate(chart.series):
        h = plot_h * max(float(value), 0.0) / top if top > 0 else 0.0
        x = MARGIN + i * slot + slot * 0.1
        y = HEIGHT - MARGIN - h
        out.append(
            f'<rect class="bar" x="{_f(x)}" y="{_f(y)}" width="{_f(slot * 0.8)}" height="{_f(h)}" '
            f'style="fill:{PALETTE[0]}"><title>{escape(str(label))}: {_num(float(value))}</title></rect>'
        )
        if n <= MAX_LABELS:
            cx = MARGIN + (i + 0.5) * slot
            out.append(
                f'<text class="label" x="{_f(cx)}" y="{HEIGHT - MARGIN + 16}" '
                f'style="font-size:11px;text-anchor:middle">{escape(str(label))}</text>'
            )
    return out


def _scatter(chart: ChartSpec) -> list[str]:
    xs = [float(p[0]) for p in chart.series]
    ys = [float(p[1]) for p in chart.series]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + (plot_w * (x - x0) / (x1 - x0) if x1 > x0 else plot_w / 2)

    def sy(y):
        return HEIGHT - MARGIN - (plot_h * (y - y0) / (y1 - y0) if y1 > y0 else plot_h / 2)

    out = []
    for x, y, cluster in chart.series:
        c = int(cluster)
        out.append(
            f'<circle class="point cluster-{c}" cx="{_f(sx(float(x)))}" cy="{_f(sy(float(y)))}" r="3" '
            f'style="fill:{PALETTE[c % len(PALETTE)]}"/>'
        )
    return out


def render_svg(chart: ChartSpec) -> str:
    lines = _svg_open(chart.title)
    lines += _bars(chart) if chart.kind is ChartKind.BAR else _scatter(chart)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def chart_for(bd: BigData, catalog: Mapping[str, BigData] | None = None, title: str = "") -> ChartSpec:
    """Pick a chart that suits the records of ``bd``."""
    records = bd.records
    last = bd.lineage[-1]
    title = title or last.op_name
    if last.op_kind is OpKind.ACTION and last.op_name == "kmeans":
        parent = (catalog or {}).get(last.parent_ids[0]) if last.parent_ids else None
        if parent is not None:
            series = [
                (p.value.x, p.value.y, a.value.count) for p, a in zip(parent.records, records)
            ]
            return ChartSpec(ChartKind.SCATTER, title, series)
        sizes = Counter(r.value.count for r in records)
        return ChartSpec(ChartKind.BAR, title, [(f"cluster {c}", sizes[c]) for c in sorted(sizes)])
    if not records:
        raise EmptySeries(f"chart {title!r} has no data")
    first = records[0].value
    if isinstance(first, Pair):
        return ChartSpec(ChartKind.BAR, title, [(r.key, r.value.count) for r in records])
    if isinstance(first, Number):
        return ChartSpec(ChartKind.BAR, title, [(r.key, r.value.value) for r in records])
    if isinstance(first, Text):
        # sorted output: bar height is the position in the ordering
        return ChartSpec(ChartKind.BAR, title, [(r.value.text, i) for i, r in enumerate(records, start=1)])
    if isinstance(first, Point):
        return ChartSpec(ChartKind.SCATTER, title, [(r.value.x, r.value.y, 0) for r in records])
    outdeg = Counter(r.value.src for r in records)
    return ChartSpec(ChartKind.BAR, title, sorted(outdeg.items()))


class _Emitter(Engine):
    kind = EngineKind.OUTPUT
    extension = "txt"

    def render(self, bd: BigData, ctx=None) -> str:
        raise NotImplementedError

    def _emit(self, ctx, data, params):
        text = self.render(data, ctx)
        if ctx is not None:
            ctx.artifacts[f"{ctx.job}.{self.extension}"] = text
        return None

    def tasks(self):
        return {"emit": TaskSpec(self._emit)}


class TableOutput(_Emitter):
    name = "table"
    extension = "txt"

    def render(self, bd, ctx=None):
        return emit_table(bd)


class JsonOutput(_Emitter):
    name = "json"
    extension = "json"

    def render(self, bd, ctx=None):
        return emit_json(bd)


class SvgOutput(_Emitter):
    name = "svg"
    extension = "svg"
    accepts = frozenset({"title"})

    def render(self, bd, ctx=None):
        catalog = ctx.catalog if ctx is not None else None
        title = self.params.get("title") or (ctx.job if ctx is not None else "")
        return render_svg(chart_for(bd, catalog, title))
