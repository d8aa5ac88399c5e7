"""CSV plumbing: per-repetition counts records and schema-stable result tables.

Counts file header: ``rep,window,n1[,n_total][,epsilon,d_a]``.
"""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .simulate import Provenance, TrialBatch

REQUIRED = ("rep", "window", "n1")
OPTIONAL = ("n_total", "epsilon", "d_a")


@dataclass(frozen=True)
class CountsRecord:
    rep: int
    window: str
    n1: int
    n_total: int | None = None
    epsilon: float | None = None
    d_a: float | None = None

    @property
    def label(self) -> tuple[float, float] | None:
        if self.epsilon is None:
            return None
        return (self.epsilon, self.d_a)


def fmt(value) -> str:
    """Locale-free cell text; floats keep 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    write_atomic(path, render_csv(header, rows))


def _int(text: str, col: str, line: int) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ParseError(f"row {line}: column {col!r} expects an integer, got {text!r}") from None
    if v < 0:
        raise ParseError(f"row {line}: column {col!r} must be nonnegative, got {v}")
    return v


def _float(text: str, col: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"row {line}: column {col!r} expects a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(f"row {line}: column {col!r} must be finite")
    return v


def parse_counts(text: str) -> list[CountsRecord]:
    """Parse counts CSV text. Row numbers in errors count the header as row 1."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("row 1: empty file, expected a header") from None
    if tuple(header[:3]) != REQUIRED:
        raise ParseError(f"row 1: header must start with rep,window,n1, got {','.join(header)}")
    extra = header[3:]
    allowed = [c for c in OPTIONAL if c in extra]
    if extra != allowed or len(set(extra)) != len(extra):
        raise ParseError(f"row 1: optional columns must be a subset of {OPTIONAL} in that order")
    if ("epsilon" in extra) != ("d_a" in extra):
        raise ParseError("row 1: grid labels need both epsilon and d_a")

    records = []
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"row {line}: expected {len(header)} fields, got {len(row)}")
        cells = dict(zip(header, (c.strip() for c in row)))
        kw = {"rep": _int(cells["rep"], "rep", line), "window": cells["window"],
              "n1": _int(cells["n1"], "n1", line)}
        if "n_total" in cells:
            kw["n_total"] = _int(cells["n_total"], "n_total", line)
            if kw["n1"] > kw["n_total"]:
                raise ParseError(f"row {line}: n1={kw['n1']} exceeds n_total={kw['n_total']}")
        if "epsilon" in cells:
            kw["epsilon"] = _float(cells["epsilon"], "epsilon", line)
            kw["d_a"] = _float(cells["d_a"], "d_a", line)
        records.append(CountsRecord(**kw))
    return records


def read_counts(path) -> list[CountsRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_counts(text)


def counts_header(with_total: bool, with_labels: bool) -> list[str]:
    h = list(REQUIRED)
    if with_total:
        h.append("n_total")
    if with_labels:
        h += ["epsilon", "d_a"]
    return h


def render_counts(records: Sequence[CountsRecord]) -> str:
    with_total = any(r.n_total is not None for r in records)
    with_labels = any(r.epsilon is not None for r in records)
    rows = []
    for r in records:
        row = [r.rep, r.window, r.n1]
        if with_total:
            row.append(r.n_total)
        if with_labels:
            row += [r.epsilon, r.d_a]
        rows.append(row)
    return render_csv(counts_header(with_total, with_labels), rows)


def write_counts(path, records: Sequence[CountsRecord]) -> None:
    write_atomic(path, render_counts(records))


def batch_records(batch: TrialBatch, window: str, labels: bool = True) -> list[CountsRecord]:
    eps = batch.labels.get("epsilon") if labels else None
    d_a = batch.labels.get("d_a") if labels else None
    totals = batch.counts_total if batch.counts_total is not None else [None] * len(batch)
    return [CountsRecord(i, window, int(n1), None if t is None else int(t), eps, d_a)
            for i, (n1, t) in enumerate(zip(batch.counts_n1, totals))]


def to_batch(records: Sequence[CountsRecord], labels: dict | None = None) -> TrialBatch:
    totals = None
    if records and all(r.n_total is not None for r in records):
        totals = np.array([r.n_total for r in records], dtype=np.int64)
    return TrialBatch(np.array([r.n1 for r in records], dtype=np.int64), totals,
                      provenance=Provenance.INGESTED, labels=dict(labels or {}))


def group_by_label(records: Sequence[CountsRecord]) -> dict:
    """Records grouped by (epsilon, d_a), or under ``None`` when unlabelled; first-seen order."""
    groups: dict = {}
    for r in records:
        groups.setdefault(r.label, []).append(r)
    return groups
