"""Reading and writing datasets, model files, run configurations and traces.

Files use 1-based codes for categories, groups and profiles; the Python API
is 0-based. Conversion happens here and nowhere else.
"""
from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

from .errors import EmptyAfterFiltering, ParseError, SchemaError
from .model import GroM3Model
from .simulate import Dataset

MODEL_FORMAT = "grom3-model/1"
DEFAULT_MISSING = ("", "NA")


# --------------------------------------------------------------------------
# datasets


def read_dataset(path, missing=DEFAULT_MISSING, d_override=None):
    """Read a CSV of integer responses with a header row of item names.

    Columns coded from 0 (minimum observed value 0) are shifted up by one.
    ``d_j`` is the largest observed code (at least 2) unless ``d_override``
    gives it. Rows holding a missing marker are dropped with a warning.

    Raises
    ------
    ParseError
        On a malformed cell, with its 1-based row (counting the header) and
        column.
    EmptyAfterFiltering
        If no complete rows remain.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("file is empty", row=1)
    header = [h.strip() for h in rows[0]]
    p = len(header)
    if p == 0 or any(h == "" for h in header):
        raise ParseError("header must name every column", row=1)
    missing = set(missing)
    values, dropped = [], 0
    for r, row in enumerate(rows[1:], start=2):
        if len(row) == 0:
            continue
        if len(row) != p:
            raise ParseError(f"expected {p} cells, found {len(row)}", row=r)
        cells = [c.strip() for c in row]
        if any(c in missing for c in cells):
            dropped += 1
            continue
        parsed = []
        for col, c in enumerate(cells, start=1):
            try:
                v = int(c)
            except ValueError:
                raise ParseError(f"not an integer: {c!r}", row=r, column=col) from None
            if v < 0:
                raise ParseError(f"negative code {v}", row=r, column=col)
            parsed.append(v)
        values.append(parsed)
    if dropped:
        warnings.warn(f"dropped {dropped} rows with missing values", stacklevel=2)
    if not values:
        raise EmptyAfterFiltering("no complete rows in the data")
    Y = np.array(values, dtype=np.int64)
    Y = np.where(Y.min(axis=0) == 0, Y, Y - 1)  # to 0-based
    d = np.maximum(Y.max(axis=0) + 1, 2)
    if d_override is not None:
        d_override = np.asarray(d_override, dtype=int)
        if d_override.shape != d.shape or np.any(d_override < d):
            raise ParseError("category override smaller than observed codes")
        d = d_override
    data = Dataset(Y, tuple(int(v) for v in d), header)
    data.dropped = dropped
    return data


def write_dataset(data, path):
    """Write responses as 1-based codes under a header of item names."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.item_names)
        w.writerows((data.responses + 1).tolist())


# --------------------------------------------------------------------------
# model files


def _fmt(x):
    return repr(float(x))


def write_model(model: GroM3Model, path):
    """Plain-text model file; floats are written with ``repr`` so they round-trip."""
    lines = [
        f"format = {MODEL_FORMAT}",
        f"p = {model.p}",
        f"G = {model.G}",
        f"K = {model.K}",
        "d = " + " ".join(str(v) for v in model.d),
        "s = " + " ".join(str(int(v) + 1) for v in model.s),
        "alpha = " + " ".join(_fmt(a) for a in model.alpha),
    ]
    for j, lam in enumerate(model.lambdas, start=1):
        lines.append(f"[lambda {j}]")
        lines.extend(" ".join(_fmt(x) for x in row) for row in lam)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _ints(field, text):
    try:
        return [int(t) for t in text.split()]
    except ValueError:
        raise SchemaError(field, "expected integers") from None


def _floats(field, text):
    try:
        return [float(t) for t in text.split()]
    except ValueError:
        raise SchemaError(field, "expected numbers") from None


def read_model(path):
    """Read a model file written by :func:`write_model` (or by hand).

    Raises
    ------
    SchemaError
        Naming the offending field, e.g. ``alpha`` or ``lambda[2]``.
    """
    text = Path(path).read_text(encoding="utf-8")
    header, blocks, current = {}, {}, None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            parts = line[1:-1].split()
            if len(parts) != 2 or parts[0] != "lambda":
                raise SchemaError("lambda", f"bad block header {line!r}")
            try:
                current = int(parts[1])
            except ValueError:
                raise SchemaError("lambda", f"bad block header {line!r}") from None
            if current in blocks:
                raise SchemaError(f"lambda[{current}]", "duplicate block")
            blocks[current] = []
            continue
        if current is not None:
            blocks[current].append(_floats(f"lambda[{current}]", line))
            continue
        if "=" not in line:
            raise SchemaError("header", f"expected key = value, got {line!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        header[key] = value
    for key in ("p", "K", "d", "s", "alpha"):
        if key not in header:
            raise SchemaError(key, "missing")
    if header.get("format", MODEL_FORMAT) != MODEL_FORMAT:
        raise SchemaError("format", f"unsupported {header['format']!r}")
    (p,) = _ints("p", header["p"]) or [None]
    (K,) = _ints("K", header["K"]) or [None]
    d = _ints("d", header["d"])
    s = _ints("s", header["s"])
    alpha = _floats("alpha", header["alpha"])
    G = _ints("G", header["G"])[0] if "G" in header else (max(s) if s else 0)
    if len(d) != p:
        raise SchemaError("d", f"expected {p} entries")
    if len(s) != p or any(v < 1 or v > G for v in s):
        raise SchemaError("s", f"expected {p} labels in 1..{G}")
    if len(alpha) != K or any(not a > 0 for a in alpha):
        raise SchemaError("alpha", f"expected {K} positive values")
    lambdas = []
    for j in range(1, p + 1):
        if j not in blocks:
            raise SchemaError(f"lambda[{j}]", "missing")
        lam = blocks[j]
        if len(lam) != d[j - 1] or any(len(row) != K for row in lam):
            raise SchemaError(f"lambda[{j}]", f"expected {d[j - 1]} rows of {K} values")
        lambdas.append(np.array(lam))
    extra = set(blocks) - set(range(1, p + 1))
    if extra:
        raise SchemaError(f"lambda[{min(extra)}]", "unexpected block")
    try:
        return GroM3Model(np.array(s) - 1, lambdas, alpha, G)
    except ValueError as exc:
        raise SchemaError("model", str(exc)) from None


# --------------------------------------------------------------------------
# configuration files


def read_config(path):
    """``key = value`` lines with ``#`` comments; dashes in keys become underscores.

    A ``manifest.json`` written by a previous run is accepted too; its
    recorded settings are returned as strings so a run can be repeated.
    """
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            settings = json.loads(text)["settings"]
        except (ValueError, KeyError, TypeError):
            raise ParseError("not a run manifest") from None
        return {k: str(v) for k, v in settings.items() if v is not None}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", row=n)
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def read_grouping(path, p=None):
    """1-based group labels separated by commas or whitespace; returns 0-based."""
    text = Path(path).read_text(encoding="utf-8").replace(",", " ")
    try:
        s = np.array([int(t) for t in text.split()], dtype=int)
    except ValueError:
        raise ParseError("grouping file must hold integers") from None
    if s.size == 0 or s.min() < 1:
        raise ParseError("group labels must be positive")
    if p is not None and s.size != p:
        raise ParseError(f"grouping has {s.size} labels, data has {p} variables")
    return s - 1


# --------------------------------------------------------------------------
# traces and tables


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_rows(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_trace(trace, outdir):
    """One CSV per parameter block with 1-based indices and the sweep number."""
    outdir = Path(outdir)
    its = trace.iterations_stored
    K = trace.alpha.shape[1]
    _write_rows(outdir / "alpha.csv", ["iteration", "k", "value"],
                ((int(it), k + 1, _fmt(trace.alpha[t, k]))
                 for t, it in enumerate(its) for k in range(K)))
    _write_rows(outdir / "s.csv", ["iteration", "j", "value"],
                ((int(it), j + 1, int(trace.s[t, j]) + 1)
                 for t, it in enumerate(its) for j in range(trace.s.shape[1])))
    _write_rows(outdir / "lambda.csv", ["iteration", "j", "c", "k", "value"],
                ((int(it), j + 1, c + 1, k + 1, _fmt(trace.lam[t, j, c, k]))
                 for t, it in enumerate(its)
                 for j, dj in enumerate(trace.d) for c in range(dj) for k in range(K)))
    _write_rows(outdir / "acceptance.csv", ["iteration", "accepted", "ratio", "loglik"],
                ((it + 1, int(trace.accepted[it]), _fmt(trace.accept_ratio[it]),
                  _fmt(trace.loglik[it])) for it in range(trace.accepted.size)))


def write_matrix(path, matrix, names):
    _write_rows(path, [""] + list(names),
                ([names[r]] + [_fmt(v) for v in matrix[r]] for r in range(len(names))))
