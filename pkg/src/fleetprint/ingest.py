"""Long-format CSV serialization and a newline-delimited streaming reader.

One record per meter sample::

    run_id,label,timestamp,node,meter,value
    r1,MCNP6,0,digi-a,cpu_util,97.5

Numbers are written as the shortest decimal that parses back to the same
double, with a trailing ``.0`` dropped. The stream framing uses the same
grammar, and the label field may be empty there.
"""

from __future__ import annotations

import io
import logging
import math
import sys
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidSample, ParseError
from .telemetry import (
    DEFAULT_NODES,
    DEFAULT_SAMPLE_PERIOD,
    METERS,
    AppLabel,
    Dataset,
    MeterId,
    MeterSample,
    NodeId,
    Role,
    TelemetryRun,
    bucket_index,
    bucket_vector,
    feature_names_for,
    is_complete,
)

log = logging.getLogger(__name__)

HEADER = "run_id,label,timestamp,node,meter,value"
FIELDS = HEADER.split(",")
MASTER_NAME = "digi-a"


def format_number(x: float) -> str:
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def _run_lines(run: TelemetryRun) -> list[str]:
    node_pos = {n.name: i for i, n in enumerate(run.nodes)}
    ordered = sorted(run.samples, key=lambda s: (s.timestamp, node_pos[s.node], s.meter.position))
    prefix = f"{run.run_id},{run.label.value},"
    return [f"{prefix}{format_number(s.timestamp)},{s.node},{s.meter.value},{format_number(s.value)}\n" for s in ordered]


def format_csv(runs: Iterable[TelemetryRun]) -> str:
    parts = [HEADER + "\n"]
    for run in sorted(runs, key=lambda r: r.run_id):
        parts.extend(_run_lines(run))
    return "".join(parts)


@contextmanager
def _open_text(target, mode: str):
    if target is None or target == "-":
        stream = sys.stdout if "w" in mode else sys.stdin
        yield stream
    elif isinstance(target, (str, Path)):
        with open(target, mode, encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield target


def write_csv(runs: Iterable[TelemetryRun], destination) -> int:
    """Write ``runs`` to a path or text stream; returns the number of bytes written."""
    text = format_csv(runs)
    with _open_text(destination, "w") as fh:
        fh.write(text)
    return len(text.encode("utf-8"))


def _parse_number(text: str, what: str, line_no: int) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ParseError(line_no, f"{what} is not a number: {text!r}") from None
    if math.isnan(x) or math.isinf(x):
        raise ParseError(line_no, f"{what} must be finite: {text!r}")
    if x < 0:
        raise ParseError(line_no, f"negative {what}: {text!r}")
    return x


@dataclass(frozen=True)
class Record:
    run_id: str
    label: AppLabel | None
    sample: MeterSample


def parse_record(line: str, line_no: int, require_label: bool = True) -> Record:
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != len(FIELDS):
        raise ParseError(line_no, f"expected {len(FIELDS)} fields, got {len(parts)}")
    run_id, label_text, ts_text, node, meter_text, value_text = parts
    if not run_id:
        raise ParseError(line_no, "empty run_id")
    if not node:
        raise ParseError(line_no, "empty node")
    if label_text:
        try:
            label = AppLabel(label_text)
        except ValueError:
            raise ParseError(line_no, f"unknown label {label_text!r}") from None
    elif require_label:
        raise ParseError(line_no, "missing label")
    else:
        label = None
    try:
        meter = MeterId(meter_text)
    except ValueError:
        raise ParseError(line_no, f"unknown meter {meter_text!r}") from None
    ts = _parse_number(ts_text, "timestamp", line_no)
    value = _parse_number(value_text, "value", line_no)
    try:
        sample = MeterSample(ts, node, meter, value)
    except InvalidSample as exc:
        raise ParseError(line_no, str(exc)) from None
    return Record(run_id, label, sample)


def _infer_period(samples: Sequence[MeterSample]) -> float:
    stamps = sorted({s.timestamp for s in samples})
    gaps = [b - a for a, b in zip(stamps, stamps[1:]) if b > a]
    return min(gaps) if gaps else DEFAULT_SAMPLE_PERIOD


def _node_list(names_in_order: list[str]) -> tuple[NodeId, ...]:
    master = MASTER_NAME if MASTER_NAME in names_in_order else names_in_order[0]
    return tuple(NodeId(n, Role.MASTER if n == master else Role.SLAVE) for n in names_in_order)


def read_csv(source) -> list[TelemetryRun]:
    """Parse a CSV corpus into runs grouped by run_id, in order of first appearance.

    The master is the node named ``digi-a`` when present, otherwise the first
    node seen in the run. The sample period is the smallest positive gap
    between distinct timestamps.
    """
    with _open_text(source, "r") as fh:
        lines = iter(fh)
        first = next(lines, None)
        if first is None or first.rstrip("\r\n") != HEADER:
            raise ParseError(1, f"expected header {HEADER!r}")
        groups: dict[str, tuple[AppLabel, list[str], list[MeterSample]]] = {}
        for line_no, line in enumerate(lines, start=2):
            if not line.strip():
                continue
            rec = parse_record(line, line_no)
            entry = groups.get(rec.run_id)
            if entry is None:
                entry = groups[rec.run_id] = (rec.label, [], [])
            elif entry[0] is not rec.label:
                raise ParseError(line_no, f"label {rec.label.value} conflicts with {entry[0].value} for run {rec.run_id!r}")
            if rec.sample.node not in entry[1]:
                entry[1].append(rec.sample.node)
            entry[2].append(rec.sample)
    return [
        TelemetryRun(label, _node_list(names), tuple(samples), _infer_period(samples), run_id)
        for run_id, (label, names, samples) in groups.items()
    ]


@dataclass
class _RunAssembly:
    pending: dict[int, dict[str, dict[MeterId, float]]] = field(default_factory=dict)
    emitted: set[int] = field(default_factory=set)
    rows: deque = field(default_factory=deque)
    label: AppLabel | None = None


def subscribe_stream(
    source: IO[str] | Iterable[str],
    window: int,
    nodes: Sequence[NodeId] = DEFAULT_NODES,
    sample_period: float = DEFAULT_SAMPLE_PERIOD,
    on_error: Callable[[ParseError], None] | None = None,
) -> Iterator[tuple[str, Dataset]]:
    """Yield ``(run_id, window_dataset)`` each time a bucket of a run completes.

    A bucket is complete once every node in ``nodes`` has reported all ten
    meters for it; it is then frozen and later samples for it are ignored.
    The window holds the most recent ``window`` completed rows of that run,
    oldest first. A header line is skipped if present. Parse errors are
    raised unless ``on_error`` is given, in which case the record is
    dropped after the callback.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    order = tuple(n.name for n in nodes if n.role is Role.MASTER) + tuple(
        n.name for n in nodes if n.role is not Role.MASTER
    )
    names = feature_names_for(order)
    known = set(order)
    runs: dict[str, _RunAssembly] = {}
    for line_no, line in enumerate(source, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if not line.strip() or (line_no == 1 and line.rstrip("\r\n") == HEADER):
            continue
        try:
            rec = parse_record(line, line_no, require_label=False)
            if rec.sample.node not in known:
                raise ParseError(line_no, f"unknown node {rec.sample.node!r}")
        except ParseError as err:
            if on_error is None:
                raise
            on_error(err)
            continue
        state = runs.setdefault(rec.run_id, _RunAssembly())
        if rec.label is not None:
            state.label = rec.label
        b = bucket_index(rec.sample.timestamp, sample_period)
        if b in state.emitted:
            log.debug("late sample for completed bucket %d of %s ignored", b, rec.run_id)
            continue
        bucket = state.pending.setdefault(b, {})
        bucket.setdefault(rec.sample.node, {})[rec.sample.meter] = rec.sample.value
        if not is_complete(bucket, order):
            continue
        del state.pending[b]
        state.emitted.add(b)
        state.rows.append((b, bucket_vector(bucket, order), state.label))
        while len(state.rows) > window:
            state.rows.popleft()
        rows = list(state.rows)
        labels = [lab for _, _, lab in rows]
        y = None if any(lab is None for lab in labels) else [lab.index for lab in labels]
        yield rec.run_id, Dataset(np.array([v for _, v, _ in rows]), y, names, [bb for bb, _, _ in rows])


def stream_lines(runs: Iterable[TelemetryRun], unlabeled: bool = False) -> list[str]:
    """Serialize runs into stream records (no header), optionally with blank labels."""
    lines = format_csv(runs).splitlines(keepends=True)[1:]
    if not unlabeled:
        return lines
    out = []
    for line in lines:
        run_id, _, rest = line.split(",", 2)
        out.append(f"{run_id},,{rest}")
    return out


def open_stream(where: str) -> IO[str]:
    if where in ("-", "stdin"):
        return sys.stdin
    return io.open(where, "r", encoding="utf-8", newline="")
