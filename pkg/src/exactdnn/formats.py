"""Text and binary formats: TSV triples, model files, IDX images/labels.

All writers are byte-deterministic: entries sorted by key, values printed
as integers when integral and otherwise in shortest round-trip form.
"""

from __future__ import annotations

import io
import math
import struct
from pathlib import Path

import numpy as np

from .array import AssociativeArray, from_triples
from .dnn import BIAS_COL, DnnModel, Layer

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049
MODEL_HEADER = "dnn-model v1"


class FormatError(ValueError):
    pass


def fmt_value(v: float) -> str:
    if math.isfinite(v) and v.is_integer() and abs(v) < 2 ** 53:
        return str(int(v))
    return repr(float(v))


def _check_key(k: str) -> str:
    if "\t" in k or "\n" in k or "\r" in k:
        raise FormatError(f"key {k!r} contains a tab or newline")
    return k


# -- TSV triples -------------------------------------------------------------

def dumps_tsv(A: AssociativeArray) -> str:
    return "".join(f"{_check_key(r)}\t{_check_key(c)}\t{fmt_value(v)}\n" for r, c, v in A)


def loads_tsv(text: str) -> AssociativeArray:
    triples = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"line {n}: expected 3 tab-separated fields, got {len(parts)}")
        try:
            triples.append((parts[0], parts[1], float(parts[2])))
        except ValueError:
            raise FormatError(f"line {n}: bad value {parts[2]!r}") from None
    return from_triples(triples)


def write_tsv(A: AssociativeArray, path) -> None:
    Path(path).write_text(dumps_tsv(A), encoding="utf-8")


def read_tsv(path) -> AssociativeArray:
    return loads_tsv(Path(path).read_text(encoding="utf-8"))


# -- model files -------------------------------------------------------------

def dumps_model(model: DnnModel) -> str:
    out = io.StringIO()
    out.write(f"{MODEL_HEADER} L={model.depth}\n")
    for key in sorted(model.meta):
        value = str(model.meta[key])
        if "\n" in value or "=" in key:
            raise FormatError(f"meta entry {key!r} cannot be written")
        out.write(f"# meta {key}={value}\n")
    for i, layer in enumerate(model.layers):
        beta = "none" if layer.beta is None else fmt_value(layer.beta)
        out.write(f"layer {i} beta={beta}\nW\n")
        out.write(dumps_tsv(layer.W))
        out.write("end\nb\n")
        for (r, _), v in sorted(layer.b.to_dict().items()):
            out.write(f"{_check_key(r)}\t{fmt_value(v)}\n")
        out.write("end\n")
    return out.getvalue()


def loads_model(text: str) -> DnnModel:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MODEL_HEADER + " L="):
        raise FormatError("line 1: missing 'dnn-model v1 L=<depth>' header")
    try:
        depth = int(lines[0][len(MODEL_HEADER) + 3:])
    except ValueError:
        raise FormatError("line 1: bad depth") from None
    meta: dict[str, str] = {}
    layers: list[Layer] = []
    i = 1

    def block(start: int):
        rows = []
        j = start
        while j < len(lines) and lines[j] != "end":
            rows.append((j + 1, lines[j].split("\t")))
            j += 1
        if j == len(lines):
            raise FormatError(f"line {start}: block not terminated by 'end'")
        return rows, j + 1

    while i < len(lines):
        line = lines[i]
        if line.startswith("# meta "):
            k, _, v = line[7:].partition("=")
            meta[k] = v
            i += 1
            continue
        if not line or line.startswith("#"):
            i += 1
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != "layer" or not parts[2].startswith("beta="):
            raise FormatError(f"line {i + 1}: expected 'layer <n> beta=<b>'")
        if parts[1] != str(len(layers)):
            raise FormatError(f"line {i + 1}: layer {parts[1]} out of order")
        beta_s = parts[2][5:]
        try:
            beta = None if beta_s == "none" else float(beta_s)
        except ValueError:
            raise FormatError(f"line {i + 1}: bad beta {beta_s!r}") from None
        if i + 1 >= len(lines) or lines[i + 1] != "W":
            raise FormatError(f"line {i + 2}: expected 'W'")
        w_rows, i = block(i + 2)
        if i >= len(lines) or lines[i] != "b":
            raise FormatError(f"line {i + 1}: expected 'b'")
        b_rows, i = block(i + 1)
        triples = []
        for n, f in w_rows:
            if len(f) != 3:
                raise FormatError(f"line {n}: expected row, col, value")
            triples.append((f[0], f[1], _parse_float(f[2], n)))
        bias = []
        for n, f in b_rows:
            if len(f) != 2:
                raise FormatError(f"line {n}: expected row, value")
            bias.append((f[0], BIAS_COL, _parse_float(f[1], n)))
        layers.append(Layer(from_triples(triples), from_triples(bias), beta))
    if len(layers) != depth:
        raise FormatError(f"header says L={depth} but file holds {len(layers)} layers")
    return DnnModel(layers, meta)


def _parse_float(s: str, line: int) -> float:
    try:
        return float(s)
    except ValueError:
        raise FormatError(f"line {line}: bad value {s!r}") from None


def write_model(model: DnnModel, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def read_model(path) -> DnnModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))


# -- IDX ---------------------------------------------------------------------

class IdxError(FormatError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _read_idx(data: bytes, magic: int, ndim: int) -> tuple[tuple[int, ...], bytes]:
    if len(data) < 4:
        raise IdxError("truncated magic number", len(data))
    (got,) = struct.unpack_from(">I", data, 0)
    if got != magic:
        raise IdxError(f"bad magic number {got:#010x}, expected {magic:#010x}", 0)
    dims = []
    for d in range(ndim):
        off = 4 + 4 * d
        if len(data) < off + 4:
            raise IdxError(f"truncated dimension {d}", off)
        (v,) = struct.unpack_from(">I", data, off)
        dims.append(v)
    off = 4 + 4 * ndim
    size = math.prod(dims)
    if size > len(data) - off:
        if size >= 2 ** 31:
            raise IdxError(f"dimensions {dims} overflow the payload", 4)
        raise IdxError(f"truncated payload: need {size} bytes, have {len(data) - off}", len(data))
    if size < len(data) - off:
        raise IdxError(f"{len(data) - off - size} trailing bytes", off + size)
    return tuple(dims), data[off:]


def read_idx_images(data: bytes) -> np.ndarray:
    """``(count, rows, cols)`` float array scaled to [0, 1]."""
    dims, payload = _read_idx(data, IDX_IMAGES_MAGIC, 3)
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims).astype(float) / 255.0


def read_idx_labels(data: bytes) -> list[int]:
    (count,), payload = _read_idx(data, IDX_LABELS_MAGIC, 1)
    labels = list(payload)
    for i, v in enumerate(labels):
        if v > 9:
            raise IdxError(f"label {v} outside 0-9", 8 + i)
    return labels


def dumps_idx_images(images) -> bytes:
    images = np.asarray(images)
    if images.dtype != np.uint8:
        images = np.clip(np.rint(images * 255.0), 0, 255).astype(np.uint8)
    n, r, c = images.shape
    return struct.pack(">IIII", IDX_IMAGES_MAGIC, n, r, c) + images.tobytes()


def dumps_idx_labels(labels) -> bytes:
    labels = bytes(int(v) for v in labels)
    return struct.pack(">II", IDX_LABELS_MAGIC, len(labels)) + labels
