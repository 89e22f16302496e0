"""CSV and JSON records written and read by the command-line tool.

Every CSV starts with a ``# seed=<N> version=<V>`` provenance line followed
by a header row. Floats are written in positional notation with the
shortest digits that round-trip, so a trace written here reads back
bit-for-bit.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .photometry import CHANNELS, Trace
from .scenario import InputError

TRACE_COLUMNS = ("t_s", "channel", "lux")
DETECTION_COLUMNS = ("t_s", "channel", "ratio", "instant_lux", "baseline_lux")
DETERRENT_COLUMNS = ("t_s", "sound_id", "wavelength_nm", "blink_hz", "duration_s")
HISTOGRAM_COLUMNS = ("class", "bin_low_ft", "bin_high_ft", "count")
SCALAR_COLUMNS = ("metric", "value")


def fmt(x) -> str:
    """Shortest round-tripping decimal; ``inf`` for infinity, empty for None."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return np.format_float_positional(x, unique=True, trim="0")


def provenance(seed) -> str:
    return f"# seed={seed} version={__version__}\n"


def csv_text(columns, rows, seed) -> str:
    buf = io.StringIO()
    buf.write(provenance(seed))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_atomic(files: dict[str, str], out_dir) -> list[Path]:
    """Write ``{name: text}`` into ``out_dir``; each file appears complete or not at all.

    Everything is staged in temporary files first, so a failure part-way
    leaves no new output behind.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            staged.append((tmp, out_dir / name))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
    return [final for _, final in staged]


def trace_rows(trace: Trace):
    for t, c, x in zip(trace.t.tolist(), trace.channel.tolist(), trace.lux.tolist()):
        yield t, CHANNELS[c], x


def detection_rows(events):
    for e in events:
        yield e.t, e.channel, e.ratio_at_trigger, e.instant_lux, e.baseline_lux


def deterrent_rows(deterrents):
    for d in deterrents:
        yield d.t, d.sound_id, d.wavelength, d.blink_rate, d.duration


def scalar_rows(report):
    yield "tp", report.tp
    yield "fn", report.fn
    yield "fp", report.fp
    yield "redundant", report.redundant
    yield "quiet_intervals", report.quiet_intervals
    yield "recall", report.recall
    yield "precision", report.precision
    yield "false_positive_rate", report.false_positive_rate
    yield "mean_trigger_time_s", report.mean_trigger_time
    yield "mean_trigger_distance_ft", report.mean_trigger_distance
    for cls, d in report.per_class_mean_distance.items():
        yield f"mean_trigger_distance_ft.{cls}", d
    for cause, n in sorted(report.fn_causes.items()):
        yield f"fn_cause.{cause}", n


def read_provenance(first_line: str) -> dict[str, str]:
    if not first_line.startswith("#"):
        return {}
    out = {}
    for token in first_line[1:].split():
        key, sep, value = token.partition("=")
        if sep:
            out[key] = value
    return out


def read_trace_csv(path) -> tuple[Trace, int | None]:
    """Parse a ``t_s,channel,lux`` trace; returns the trace and its recorded seed.

    Errors name the file and 1-based line number. Timestamps must not go
    backwards within a channel and lux must be finite and non-negative.
    """
    path = Path(path)
    where = str(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read trace: {exc.strerror}", where) from None
    lines = text.splitlines()
    seed = None
    start = 0
    if lines and lines[0].startswith("#"):
        raw = read_provenance(lines[0]).get("seed")
        if raw is not None:
            try:
                seed = int(raw)
            except ValueError:
                raise InputError(f"bad seed {raw!r} in provenance line", f"{where}:1") from None
        start = 1
    if start >= len(lines) or tuple(lines[start].strip().split(",")) != TRACE_COLUMNS:
        raise InputError(f"expected header {','.join(TRACE_COLUMNS)}", f"{where}:{start + 1}")
    ts, chans, luxes = [], [], []
    last = {c: -math.inf for c in CHANNELS}
    for lineno, row in enumerate(csv.reader(lines[start + 1:]), start=start + 2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        loc = f"{where}:{lineno}"
        if len(row) != 3:
            raise InputError(f"expected 3 fields, got {len(row)}", loc)
        try:
            t = float(row[0])
            lux = float(row[2])
        except ValueError:
            raise InputError("t_s and lux must be numbers", loc) from None
        ch = row[1].strip()
        if ch not in CHANNELS:
            raise InputError(f"channel must be one of {CHANNELS}, got {ch!r}", loc)
        if not math.isfinite(t) or t < 0:
            raise InputError(f"t_s must be finite and >= 0, got {row[0]}", loc)
        if not math.isfinite(lux) or lux < 0:
            raise InputError(f"lux must be finite and >= 0, got {row[2]}", loc)
        if t < last[ch]:
            raise InputError(f"timestamp {row[0]} goes back in time on channel {ch} "
                             f"(previous {fmt(last[ch])})", loc)
        last[ch] = t
        ts.append(t)
        chans.append(CHANNELS.index(ch))
        luxes.append(lux)
    if not ts:
        raise InputError("trace has no samples", where)
    return Trace(np.array(ts), np.array(chans, dtype=np.int8), np.array(luxes), seed), seed
