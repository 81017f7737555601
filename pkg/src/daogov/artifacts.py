"""Deterministic CSV/JSON writers with a metadata header, and atomic stage directories."""
from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import os
import shutil
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} in table")
        return repr(value)
    return str(value)


def _json_default(obj):
    # numpy scalars and tuples sneak in from analysis code
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def json_text(obj, indent: int | None = 2) -> str:
    return json.dumps(obj, sort_keys=True, indent=indent, allow_nan=False, default=_json_default) + "\n"


def csv_text(columns: Sequence[str], rows: Iterable[Mapping], meta: Mapping | None = None) -> str:
    buf = io.StringIO()
    for key in sorted(meta or {}):
        buf.write(f"# {key}: {json.dumps(meta[key], sort_keys=True, default=_json_default)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def write_text(path: str | Path, text: str) -> None:
    """Write through a sibling temp file and rename, so readers never see half a file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        os.chmod(tmp, 0o644)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_csv(path, columns, rows, meta=None) -> None:
    write_text(path, csv_text(columns, rows, meta))


def write_json(path, obj, meta=None) -> None:
    payload = {"_meta": dict(meta)} if meta else {}
    payload["data"] = obj
    write_text(path, json_text(payload))


def read_csv(path) -> tuple[dict, list[dict]]:
    meta, body = {}, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = json.loads(value)
            else:
                body.append(line)
    return meta, list(csv.DictReader(body))


def read_json(path) -> tuple[dict, object]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return payload.get("_meta", {}), payload.get("data")


@contextlib.contextmanager
def atomic_dir(target: str | Path):
    """Yield a scratch directory that replaces ``target`` only if the block succeeds."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=target.parent, prefix=f".{target.name}.tmp-"))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if target.exists():
        old = target.with_name(f".{target.name}.old-{os.getpid()}")
        os.replace(target, old)
    os.replace(tmp, target)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)
