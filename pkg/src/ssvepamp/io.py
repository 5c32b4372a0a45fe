"""On-disk formats: signal CSVs with JSON sidecars, windowed datasets,
report tables and run manifests. Every file is written atomically."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import re
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .amplitude import WindowedDataset
from .dsp import TimeSeries
from .errors import DataError

__all__ = [
    "atomic_write_text",
    "write_json",
    "read_json",
    "write_table",
    "recording_name",
    "write_recording",
    "read_recording",
    "find_recordings",
    "load_recordings",
    "write_dataset",
    "read_dataset",
    "config_hash",
    "build_manifest",
]

SIGNAL_HEADER = ("sample_index", "oz_uv")
META_COLUMNS = ("row", "subject", "condition", "window_index", "label", "target")
_NAME = re.compile(r"^sub-(\d+)_cond-(\d+)\.csv$")


def atomic_write_text(path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from None


def write_table(path, rows: Sequence[Mapping], columns: Sequence[str] | None = None) -> Path:
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in columns])
    return atomic_write_text(path, buf.getvalue())


# --------------------------------------------------------------------------- signals


def recording_name(subject: int, condition: int) -> str:
    return f"sub-{subject:02d}_cond-{condition}.csv"


def write_recording(directory, subject: int, condition: int, x: TimeSeries, meta: Mapping | None = None) -> Path:
    """``sample_index,oz_uv`` CSV plus a ``.json`` sidecar holding ``fs``,
    subject, condition and any extra metadata."""
    directory = Path(directory)
    path = directory / recording_name(subject, condition)
    lines = [",".join(SIGNAL_HEADER)]
    lines.extend(f"{i},{v!r}" for i, v in enumerate(x.samples.tolist()))
    atomic_write_text(path, "\n".join(lines) + "\n")
    side = {"fs": x.fs, "subject": subject, "condition": condition, "n_samples": len(x), **(meta or {})}
    write_json(path.with_suffix(".json"), side)
    return path


def read_recording(path) -> tuple[TimeSeries, dict]:
    path = Path(path)
    side_path = path.with_suffix(".json")
    if not side_path.exists():
        raise DataError(f"{path}: missing sidecar {side_path.name}")
    meta = read_json(side_path)
    if "fs" not in meta:
        raise DataError(f"{side_path}: sidecar lacks 'fs'")
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1:
                if tuple(c.strip() for c in row) != SIGNAL_HEADER:
                    raise DataError(f"{path}:1: expected header {','.join(SIGNAL_HEADER)}, got {','.join(row)}")
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                idx, val = int(row[0]), float(row[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: cannot parse {','.join(row)!r}") from None
            if idx != lineno - 2:
                raise DataError(f"{path}:{lineno}: sample_index {idx} out of sequence, expected {lineno - 2}")
            if not np.isfinite(val):
                raise DataError(f"{path}:{lineno}: non-finite sample {row[1]!r}")
            values.append(val)
    if not values:
        raise DataError(f"{path}: no samples")
    return TimeSeries(np.array(values), float(meta["fs"])), meta


def find_recordings(directory) -> dict[tuple[int, int], Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory}: not a directory")
    out = {}
    for p in sorted(directory.iterdir()):
        m = _NAME.match(p.name)
        if m:
            out[(int(m.group(1)), int(m.group(2)))] = p
    if not out:
        raise DataError(f"{directory}: no sub-XX_cond-Y.csv recordings found")
    return out


def load_recordings(directory) -> dict[tuple[int, int], TimeSeries]:
    return {key: read_recording(p)[0] for key, p in find_recordings(directory).items()}


# --------------------------------------------------------------------------- datasets


def write_dataset(ds: WindowedDataset, directory) -> tuple[Path, Path]:
    """``windows_meta.csv`` (one row per window: row, subject, condition,
    window_index, label, target) and ``windows.csv`` (row, then one column
    per sample ``s0 .. s{L-1}``), aligned by ``row``."""
    directory = Path(directory)
    meta_rows = [
        {"row": i, "subject": int(s), "condition": int(c), "window_index": int(w), "label": float(lab),
         "target": float(t)}
        for i, (s, c, w, lab, t) in enumerate(zip(ds.subjects, ds.conditions, ds.window_index, ds.labels, ds.targets))
    ]
    meta = write_table(directory / "windows_meta.csv", meta_rows, META_COLUMNS)
    n = ds.windows.shape[1]
    lines = [",".join(["row"] + [f"s{j}" for j in range(n)])]
    lines.extend(f"{i}," + ",".join(map(repr, row)) for i, row in enumerate(ds.windows.tolist()))
    win = atomic_write_text(directory / "windows.csv", "\n".join(lines) + "\n")
    write_json(directory / "windows.json", {"fs": ds.fs, "n_rows": len(ds), "window_length": n})
    return meta, win


def _read_numeric_csv(path: Path, header_check) -> tuple[list[str], np.ndarray]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header_check(header)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric field") from None
            if not np.all(np.isfinite(vals)):
                raise DataError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    return header, np.array(rows).reshape(len(rows), len(header))


def read_dataset(directory) -> WindowedDataset:
    directory = Path(directory)

    def meta_header(h):
        if tuple(h) != META_COLUMNS:
            raise DataError(f"{directory / 'windows_meta.csv'}:1: expected header {','.join(META_COLUMNS)}")

    def win_header(h):
        if not h or h[0] != "row" or h[1:] != [f"s{j}" for j in range(len(h) - 1)]:
            raise DataError(f"{directory / 'windows.csv'}:1: expected header row,s0,s1,...")

    _, meta = _read_numeric_csv(directory / "windows_meta.csv", meta_header)
    _, win = _read_numeric_csv(directory / "windows.csv", win_header)
    info = read_json(directory / "windows.json")
    if len(meta) != len(win) or not np.array_equal(meta[:, 0], win[:, 0]):
        raise DataError(f"{directory}: windows_meta.csv and windows.csv rows do not align")
    return WindowedDataset(
        meta[:, 1].astype(int), meta[:, 2].astype(int), meta[:, 3].astype(int),
        win[:, 1:], meta[:, 4], meta[:, 5], float(info["fs"]),
    )


# --------------------------------------------------------------------------- manifests


def config_hash(config: Mapping) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def build_manifest(command: str, config: Mapping, seed: int, outputs: Iterable[str] = ()) -> dict:
    import numba
    import scipy

    from . import __version__

    return {
        "command": command,
        "config": _jsonable(config),
        "config_hash": config_hash(config),
        "seed": seed,
        "outputs": sorted(outputs),
        "versions": {
            "ssvepamp": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__,
        },
    }
