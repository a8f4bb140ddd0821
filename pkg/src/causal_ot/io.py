"""Reading and writing spacetimes, measures, index sets, plans and reports.

Spacetime CSV: header ``id,t,x1,...,xd,m,k`` with ids 0..n−1 in order. An
optional first line ``# model=<tag> key=value ...`` records how to rebuild l:
``minkowski`` (from coordinates), ``warped-sqrt`` (needs ``link_radius``), or
``custom`` (reads a companion ``i,j,l`` CSV). Parse errors carry the file,
line and column.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .measures import Measure, Plan
from .spacetime import DEFAULT_BOX, DiscreteSpacetime, custom_dag, generate, link_radius, minkowski, warped_sqrt

MODELS = ("minkowski", "warped-sqrt", "custom")


# --- low-level CSV ---------------------------------------------------------------


def _open_text(path) -> str:
    path = Path(path)
    try:
        return path.read_text()
    except FileNotFoundError:
        raise InputError("file not found", str(path)) from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read file ({exc})", str(path)) from None


def _column_of(raw_line: str, index: int) -> int:
    """1-based column where field ``index`` starts in a plain comma-separated line."""
    col = 1
    for _ in range(index):
        nxt = raw_line.find(",", col - 1)
        if nxt < 0:
            break
        col = nxt + 2
    return col


def read_table(path, required: Sequence[str], comment: str = "#") -> tuple[list[str], list[tuple[int, str, list[str]]], list[str]]:
    """Header, data rows as (line number, raw line, fields) and leading comment lines."""
    text = _open_text(path)
    lines = text.splitlines()
    comments: list[str] = []
    rows = []
    header = None
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        if raw.lstrip().startswith(comment):
            if header is None:
                comments.append(raw.lstrip()[len(comment):].strip())
            continue
        fields = next(csv.reader([raw]))
        fields = [f.strip() for f in fields]
        if header is None:
            header = fields
            missing = [c for c in required if c not in header]
            if missing:
                raise InputError(f"header is missing column(s) {', '.join(missing)}", str(path), lineno, 1)
            continue
        if len(fields) != len(header):
            raise InputError(f"expected {len(header)} fields, found {len(fields)}", str(path), lineno,
                             _column_of(raw, min(len(fields), len(header))))
        rows.append((lineno, raw, fields))
    if header is None:
        raise InputError("file is empty", str(path), 1, 1)
    return header, rows, comments


def _number(path, lineno: int, raw: str, fields: list[str], idx: int, kind=float):
    text = fields[idx]
    try:
        if kind is int:
            value = int(text)
        else:
            value = float(text)
    except ValueError:
        what = "integer" if kind is int else "number"
        raise InputError(f"expected a {what}, found {text!r}", str(path), lineno, _column_of(raw, idx)) from None
    if kind is float and math.isnan(value):
        raise InputError("NaN is not allowed", str(path), lineno, _column_of(raw, idx))
    return value


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    text = _open_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, str(path), exc.lineno, exc.colno) from None


# --- spacetimes --------------------------------------------------------------


def _parse_meta(comments: list[str], path) -> dict:
    meta: dict = {}
    for c in comments:
        for token in c.split():
            if "=" not in token:
                continue
            key, value = token.split("=", 1)
            meta[key] = value
    if "model" in meta and meta["model"] not in MODELS:
        raise InputError(f"unknown model {meta['model']!r} in header comment", str(path), 1, 1)
    return meta


def companion_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".sep.csv")


def read_separation(path, n: int) -> np.ndarray:
    _, rows, _ = read_table(path, ("i", "j", "l"))
    l = np.full((n, n), -np.inf)
    np.fill_diagonal(l, 0.0)
    for lineno, raw, fields in rows:
        i = _number(path, lineno, raw, fields, 0, int)
        j = _number(path, lineno, raw, fields, 1, int)
        for col, idx in ((0, i), (1, j)):
            if not 0 <= idx < n:
                raise InputError(f"event index {idx} outside [0, {n})", str(path), lineno, _column_of(raw, col))
        l[i, j] = _number(path, lineno, raw, fields, 2)
    return l


def read_spacetime(path, model: str | None = None, separation=None, link_radius: float | None = None,
                   N: float | None = None) -> DiscreteSpacetime:
    """Load a spacetime from an event CSV or a JSON generation config."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return generate(read_json(path))
    header, rows, comments = read_table(path, ("id", "t", "m", "k"))
    meta = _parse_meta(comments, path)
    model = model or meta.get("model", "minkowski")
    if model not in MODELS:
        raise InputError(f"unknown model {model!r}", str(path))
    if header[:2] != ["id", "t"] or header[-2:] != ["m", "k"]:
        raise InputError("header must read id,t,x1,...,xd,m,k", str(path), 1, 1)
    if not rows:
        raise InputError("no events", str(path))
    n = len(rows)
    width = len(header)
    coords = np.empty((n, width - 3))
    m = np.empty(n)
    k = np.empty(n)
    for row, (lineno, raw, fields) in enumerate(rows):
        ident = _number(path, lineno, raw, fields, 0, int)
        if ident != row:
            raise InputError(f"ids must run 0..n−1 in order; expected {row}, found {ident}", str(path), lineno, 1)
        for c in range(1, width - 2):
            coords[row, c - 1] = _number(path, lineno, raw, fields, c)
        m[row] = _number(path, lineno, raw, fields, width - 2)
        k[row] = _number(path, lineno, raw, fields, width - 1)
        if m[row] < 0 or math.isinf(m[row]):
            raise InputError("m must be finite and nonnegative", str(path), lineno, _column_of(raw, width - 2))
        if math.isinf(k[row]):
            raise InputError("k must be finite", str(path), lineno, _column_of(raw, width - 1))
    if model == "minkowski":
        st = minkowski(coords, m=m, k=k)
    elif model == "warped-sqrt":
        radius = link_radius if link_radius is not None else meta.get("link_radius")
        if radius is None:
            raise InputError("warped-sqrt needs a link radius", str(path))
        if N is None and "N" in meta:
            N = float(meta["N"])
        st = warped_sqrt(coords, float(radius), m=m, N=N)
        st = st.replace(k=k)  # the file's k column is authoritative
    else:
        sep = Path(separation) if separation is not None else companion_path(path)
        st = custom_dag(coords, read_separation(sep, n), m=m, k=k)
    return st


def spacetime_meta(st: DiscreteSpacetime, config: dict | None = None) -> dict:
    tag = st.model_tag
    if tag.startswith("minkowski"):
        meta = {"model": "minkowski"}
    elif tag.startswith("warped"):
        meta = {"model": "warped-sqrt"}
        if config is not None:
            box = [tuple(map(float, b)) for b in config.get("box") or
                   [DEFAULT_BOX["warped-sqrt"]] + [(0.0, 1.0)] * (st.dim - 1)]
            meta["link_radius"] = link_radius(config, box, st.n)
            if "N" in config:
                meta["N"] = float(config["N"])
    else:
        meta = {"model": "custom"}
    return meta


def write_spacetime(st: DiscreteSpacetime, path, meta: dict | None = None) -> list[Path]:
    """Write the event CSV (and the separation CSV for custom models); return the paths."""
    path = Path(path)
    meta = dict(meta or spacetime_meta(st))
    comment = " ".join(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}"
                       for key, value in meta.items())
    header = ["id", "t"] + [f"x{i}" for i in range(1, st.dim)] + ["m", "k"]
    rows = ([i, *c, mi, ki] for i, (c, mi, ki) in enumerate(zip(st.coords, st.m, st.k)))
    write_csv(path, header, rows, [comment])
    out = [path]
    if meta.get("model") == "custom":
        i, j = np.nonzero(np.isfinite(st.l) & ~np.eye(st.n, dtype=bool))
        sep = companion_path(path)
        write_csv(sep, ["i", "j", "l"], zip(i, j, st.l[i, j]))
        out.append(sep)
    return out


# --- measures, index sets, values --------------------------------------------


def read_weights(path, n: int, column: str = "weight") -> np.ndarray:
    """Per-event values from a CSV with columns id,<column>; absent ids get 0."""
    header, rows, _ = read_table(path, ("id", column))
    ci, cv = header.index("id"), header.index(column)
    out = np.zeros(n)
    seen = set()
    for lineno, raw, fields in rows:
        i = _number(path, lineno, raw, fields, ci, int)
        if not 0 <= i < n:
            raise InputError(f"event index {i} outside [0, {n})", str(path), lineno, _column_of(raw, ci))
        if i in seen:
            raise InputError(f"event {i} listed twice", str(path), lineno, _column_of(raw, ci))
        seen.add(i)
        out[i] = _number(path, lineno, raw, fields, cv)
        if math.isinf(out[i]):
            raise InputError("value must be finite", str(path), lineno, _column_of(raw, cv))
    return out


def read_measure(path, n: int) -> Measure:
    """CSV id,weight; weights must be nonnegative and are normalized to mass 1."""
    header, rows, _ = read_table(path, ("id", "weight"))
    w = read_weights(path, n, "weight")
    cv = header.index("weight")
    for lineno, raw, fields in rows:
        if float(fields[cv]) < 0:
            raise InputError("weights must be nonnegative", str(path), lineno, _column_of(raw, cv))
    total = w.sum()
    if not total > 0:
        raise InputError("weights sum to zero", str(path))
    return Measure(w / total)


def write_measure(mu: Measure, path) -> None:
    idx = mu.support
    write_csv(path, ["id", "weight"], zip(idx, mu.weights[idx]))


def read_index_set(spec, n: int) -> np.ndarray:
    """An index set from a CSV with an ``id`` column, or an inline list like ``0,3,7``.

    Text made of digits and commas is always read as an inline list.
    """
    text = str(spec)
    p = Path(text)
    if not re.fullmatch(r"[\d,\s]*", text) and p.exists():
        header, rows, _ = read_table(p, ("id",))
        ci = header.index("id")
        ids = [_number(p, lineno, raw, fields, ci, int) for lineno, raw, fields in rows]
    else:
        try:
            ids = [int(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise InputError(f"{text!r} is neither a file nor a comma-separated index list") from None
    arr = np.unique(np.asarray(ids, dtype=int))
    if arr.size == 0:
        raise InputError(f"index set {text!r} is empty")
    if arr[0] < 0 or arr[-1] >= n:
        raise InputError(f"index set {text!r} leaves [0, {n})")
    return arr


def read_kappa(path) -> tuple[np.ndarray, np.ndarray]:
    """CSV r,kappa with strictly increasing r starting at 0."""
    header, rows, _ = read_table(path, ("r", "kappa"))
    cr, ck = header.index("r"), header.index("kappa")
    r, kap = [], []
    for lineno, raw, fields in rows:
        rv = _number(path, lineno, raw, fields, cr)
        if r and rv <= r[-1]:
            raise InputError("r must increase strictly", str(path), lineno, _column_of(raw, cr))
        r.append(rv)
        kap.append(_number(path, lineno, raw, fields, ck))
    if not r:
        raise InputError("no samples", str(path))
    if r[0] != 0.0:
        raise InputError("samples must start at r = 0", str(path), rows[0][0], _column_of(rows[0][1], cr))
    return np.array(r), np.array(kap)


def read_plan(path, st: DiscreteSpacetime) -> Plan:
    """JSON {"times": [...], "atoms": [{"chain": [...], "weight": w}, ...]}."""
    data = read_json(path)
    try:
        times = np.asarray(data["times"], dtype=float)
        chains = [a["chain"] for a in data["atoms"]]
        weights = [float(a["weight"]) for a in data["atoms"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"plan JSON is malformed ({exc})", str(path)) from None
    if not chains:
        raise InputError("plan has no atoms", str(path))
    if any(len(c) != times.size for c in chains):
        raise InputError("every chain needs one event per time stamp", str(path))
    idx = np.asarray(chains, dtype=int)
    if idx.min() < 0 or idx.max() >= st.n:
        raise InputError("plan refers to events outside the spacetime", str(path))
    try:
        return Plan.from_chains(st, times, idx, weights)
    except ValueError as exc:
        raise InputError(str(exc), str(path)) from None


def flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    """Scalar leaves of a nested report as (dotted key, value) rows."""
    if isinstance(obj, dict):
        out = []
        for key in sorted(obj):
            out += flatten(obj[key], f"{prefix}.{key}" if prefix else str(key))
        return out
    if isinstance(obj, (list, tuple)):
        out = []
        for i, v in enumerate(obj):
            out += flatten(v, f"{prefix}.{i}")
        return out
    return [(prefix, obj)]
