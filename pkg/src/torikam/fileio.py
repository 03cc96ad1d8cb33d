"""Text serialization of series, plus JSON and CSV writers with lossless floats.

Series file layout::

    torikam-series n=1 d=1 K=0 m_max=8 kind=matrix ell=2 count=1
    block 1
    entry 1 1
    0 | 0 | 1.0000000000000000e+00 0.0000000000000000e+00
    ...

Only nonzero coefficients are written, one ``P | Q | re im`` record per line.
``kind=scalar`` files have no ``entry`` lines.  Lines starting with ``#`` are
comments.  Floats carry 17 significant digits so doubles round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .series import FourierTaylorSeries, MatrixSeries, TruncationSpec


def fmt_float(x):
    return format(float(x), ".16e")


def _records(spec, arr):
    lines = []
    for idx in zip(*np.nonzero(arr)):
        P, Q = spec.mode(idx)
        c = arr[idx]
        lines.append(f"{' '.join(map(str, P))} | {' '.join(map(str, Q))} | "
                     f"{fmt_float(c.real)} {fmt_float(c.imag)}")
    return lines


def dumps_series(items):
    """Serialize a non-empty list of series sharing one truncation and type."""
    items = list(items)
    first = items[0]
    for s in items[1:]:
        first._check(s)
    spec = first.spec
    matrix = isinstance(first, MatrixSeries)
    head = (f"torikam-series n={spec.n} d={spec.d} K={spec.K} m_max={spec.m_max} "
            f"kind={'matrix' if matrix else 'scalar'}")
    if matrix:
        head += f" ell={first.ell}"
    out = [head + f" count={len(items)}"]
    for b, s in enumerate(items, 1):
        out.append(f"block {b}")
        if matrix:
            for a in range(s.ell):
                for c in range(s.ell):
                    out.append(f"entry {a + 1} {c + 1}")
                    out.extend(_records(spec, s.data[a, c]))
        else:
            out.extend(_records(spec, s.data))
    return "\n".join(out) + "\n"


def loads_series(text):
    """Inverse of :func:`dumps_series`; returns a list of series."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("torikam-series"):
        raise ValueError("not a series file: missing 'torikam-series' header")
    try:
        head = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
        spec = TruncationSpec(int(head["K"]), int(head["m_max"]), int(head["n"]), int(head["d"]))
        kind = head["kind"]
        count = int(head["count"])
        ell = int(head["ell"]) if kind == "matrix" else None
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad series header: {lines[0]!r}") from exc
    if kind not in ("matrix", "scalar"):
        raise ValueError(f"unknown series kind {kind!r}")
    lead = (ell, ell) if ell else ()
    blocks = [np.zeros(lead + spec.shape, dtype=complex) for _ in range(count)]
    cur, entry = None, ()
    for ln in lines[1:]:
        word = ln.split()
        if word[0] == "block":
            cur = blocks[int(word[1]) - 1]
            entry = ()
        elif word[0] == "entry":
            entry = (int(word[1]) - 1, int(word[2]) - 1)
        else:
            if cur is None or (ell and not entry):
                raise ValueError(f"record outside a block/entry: {ln!r}")
            p, q, c = (part.split() for part in ln.split("|"))
            cur[entry + spec.index([int(x) for x in p], [int(x) for x in q])] = \
                complex(float(c[0]), float(c[1]))
    if ell:
        return [MatrixSeries(spec, b) for b in blocks]
    return [FourierTaylorSeries(spec, b) for b in blocks]


def write_series(path, items):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_series(items))


def read_series(path):
    with open(path, encoding="utf-8") as fh:
        return loads_series(fh.read())


# -- JSON / CSV --------------------------------------------------------------

def _plain(obj):
    """Convert numpy scalars, tuples and non-finite floats for JSON output."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return _Float(x)
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


class _Float(float):
    def __repr__(self):
        return format(float(self), ".17g")


def _iterencode(o, indent, level=0):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    if isinstance(o, dict):
        if not o:
            yield "{}"
            return
        yield "{" + nl
        for i, (k, v) in enumerate(o.items()):
            yield pad + json.dumps(k) + ": "
            yield from _iterencode(v, indent, level + 1)
            yield ("," if i < len(o) - 1 else "") + nl
        yield end + "}"
    elif isinstance(o, list):
        if not o:
            yield "[]"
            return
        yield "[" + nl
        for i, v in enumerate(o):
            yield pad
            yield from _iterencode(v, indent, level + 1)
            yield ("," if i < len(o) - 1 else "") + nl
        yield end + "]"
    elif isinstance(o, _Float):
        yield repr(o)
    else:
        yield json.dumps(o)


def dumps_json(obj, indent=2):
    return "".join(_iterencode(_plain(obj), indent)) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def dumps_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_csv(header, rows))
