"""Plain CSV writing with locale-independent, byte-stable number formatting."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .analysis import ChannelTrace, NoLosReferenceError, estimate_los_average


def fmt(value) -> str:
    """Fixed text form of a cell: ``%.15g`` for numbers, empty for None/NaN."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return ""
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".15g")
    return str(value)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence],
              comments: Sequence[str] = ()) -> Path:
    """Write ``rows`` under a single header line; ``comments`` go first as ``# ...`` lines."""
    path = Path(path)
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_columns(path: str | Path, data: Mapping[str, np.ndarray], comments: Sequence[str] = ()) -> Path:
    """Write equal-length named columns."""
    cols = list(data)
    arrays = [np.asarray(data[c]) for c in cols]
    return write_csv(path, cols, zip(*arrays), comments)


def trace_reference(trace: ChannelTrace, f: float) -> tuple[float, str]:
    """LoS-average reference, or the free-space level when the path has no LoS run."""
    try:
        return estimate_los_average(trace, f), "los_average"
    except NoLosReferenceError:
        return trace.amplitude / trace.mid_distance, "free_space"


def write_trace(path: str | Path, trace: ChannelTrace) -> Path:
    """Long-format trace table: one row per (frequency, path point)."""
    m = trace.parts[trace.frequencies[0]].shape[0] if trace.frequencies else 1
    cols = ["x_m", "y_m", "f_hz", "h_re", "h_im", "h_abs", "h_abs_norm", "band_power"]
    for idx in range(m):
        cols += [f"m{idx}_re", f"m{idx}_im", f"m{idx}_aoa_deg"]
    rows, comments = [], []
    for f in trace.frequencies:
        ref, kind = trace_reference(trace, f)
        comments.append(f"reference f_hz={fmt(f)} kind={kind} value={fmt(ref)}")
        h = trace.totals[f]
        norm = trace.compensated(f) / ref
        power = trace.band_power.get(f, np.abs(h) ** 2)
        parts = trace.parts[f]
        for j, (x, y) in enumerate(trace.points):
            row = [x, y, f, h[j].real, h[j].imag, abs(h[j]), norm[j], power[j]]
            for idx in range(m):
                row += [parts[idx, j].real, parts[idx, j].imag, trace.aoa[idx, j]]
            rows.append(row)
    return write_csv(path, cols, rows, comments)
