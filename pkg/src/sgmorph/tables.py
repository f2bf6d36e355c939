"""CSV/JSON writers and readers with a one-line JSON metadata header.

Every table starts with ``# {...}`` holding tool version, seed and
parameters; readers skip ``#`` lines. Floats are written with ``repr`` so
values round-trip exactly and reruns are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .features import FEATURE_NAMES
from .popstats import FeatureMatrix


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if np.isnan(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj))


def write_table(path, header: Sequence[str], rows, meta: Optional[dict] = None) -> None:
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + json.dumps(meta, sort_keys=True, default=_default) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    Path(path).write_text(buf.getvalue())


def read_table(path):
    """Return ``(meta, header, rows)``; ``meta`` is the parsed header comment or {}."""
    meta = {}
    lines = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            if not meta:
                try:
                    meta = json.loads(line[1:].strip())
                except json.JSONDecodeError:
                    pass
            continue
        if line.strip():
            lines.append(line)
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError(f"{path}: empty table")
    return meta, rows[0], rows[1:]


def write_matrix(path, ids: Sequence[str], M, meta: Optional[dict] = None) -> None:
    write_table(path, ["id", *ids], [[i, *row] for i, row in zip(ids, np.asarray(M))], meta)


def read_matrix(path):
    _, header, rows = read_table(path)
    ids = [r[0] for r in rows]
    return ids, np.array([[float(v) for v in r[1:]] for r in rows])


def write_features(path, fvs, labels, meta=None) -> None:
    rows = [[fv.id, "" if lab is None else lab, *fv.values] for fv, lab in zip(fvs, labels)]
    write_table(path, ["id", "label", *FEATURE_NAMES], rows, meta)


def read_features(path, labels_path=None) -> FeatureMatrix:
    """Feature CSV -> :class:`FeatureMatrix` (labels from the CSV or a separate file)."""
    _, header, rows = read_table(path)
    missing = [n for n in FEATURE_NAMES if n not in header]
    if "id" not in header or missing:
        raise ValueError(f"{path}: missing columns {(['id'] if 'id' not in header else []) + missing}")
    cols = [header.index(n) for n in FEATURE_NAMES]
    ids = tuple(r[header.index("id")] for r in rows)
    values = np.array([[float(r[c]) if r[c] != "" else np.nan for c in cols] for r in rows],
                      dtype=float).reshape(-1, len(FEATURE_NAMES))
    labels = None
    if labels_path is not None:
        lab = read_labels(labels_path)
        unknown = [i for i in ids if i not in lab]
        if unknown:
            raise ValueError(f"no label for sample {unknown[0]!r}")
        labels = tuple(lab[i] for i in ids)
    elif "label" in header:
        k = header.index("label")
        got = [r[k] for r in rows]
        if all(got):
            labels = tuple(got)
    return FeatureMatrix(values, ids, labels)


def read_labels(path) -> dict:
    _, header, rows = read_table(path)
    if header[:2] != ["id", "label"]:
        raise ValueError(f"{path}: expected columns id,label")
    return {r[0]: r[1] for r in rows}
