"""Test-vector bundles for checking external sparse DNN implementations.

A bundle is a directory::

    model.txt   model file
    y0.tsv      input batch (features x samples)
    yl.tsv      expected output batch (categories x samples)
    meta.txt    key=value lines: format, builder, parameters, precision,
                sample keys and a 64-bit FNV-1a checksum per file

Precision is fixed point: every weight, bias, input and expected output is
rounded to a multiple of ``2**-bits`` (ties to even), or left alone for
``exact``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from . import array as aa
from .array import AssociativeArray
from .dnn import DnnModel, Layer, exact_input, infer_relu
from .formats import dumps_model, dumps_tsv, loads_model, loads_tsv

BUNDLE_FORMAT = "bundle v1"
FILES = ("model.txt", "y0.tsv", "yl.tsv")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class IntegrityError(ValueError):
    pass


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class QuantSpec:
    fractional_bits: int | None = None  # None = exact

    def __post_init__(self):
        if self.fractional_bits is not None and self.fractional_bits < 0:
            raise ValueError("fractional_bits must be >= 0")

    @property
    def exact(self) -> bool:
        return self.fractional_bits is None

    def __str__(self):
        return "exact" if self.exact else str(self.fractional_bits)

    @classmethod
    def parse(cls, text: str | int | None) -> QuantSpec:
        if text is None or text == "exact":
            return cls(None)
        return cls(int(text))

    def round(self, v: float) -> float:
        if self.exact or not math.isfinite(v):
            return v
        scale = 2.0 ** self.fractional_bits
        # round() on floats is round-half-to-even
        return round(v * scale) / scale


def quantize(A: AssociativeArray, q: QuantSpec) -> AssociativeArray:
    if q.exact:
        return A
    return aa.apply(A, q.round)


def quantize_model(model: DnnModel, q: QuantSpec) -> DnnModel:
    if q.exact:
        return model
    layers = [Layer(quantize(l.W, q), quantize(l.b, q), l.beta) for l in model.layers]
    return DnnModel(layers, dict(model.meta))


@dataclass
class TestVectorBundle:
    __test__ = False  # not a pytest class

    model: DnnModel
    y0: AssociativeArray
    expected: AssociativeArray
    precision: QuantSpec
    samples: list[str]
    provenance: dict[str, str] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, TestVectorBundle):
            return NotImplemented
        return (self.model == other.model and self.y0 == other.y0
                and self.expected == other.expected and self.precision == other.precision
                and self.samples == other.samples and self.provenance == other.provenance)


def make_bundle(model: DnnModel, precision: QuantSpec | int | str | None = None,
                y0: AssociativeArray | None = None) -> TestVectorBundle:
    """Quantize ``model`` and ``y0`` and record the inference result as expected output.

    ``y0`` defaults to the model's exact input.
    """
    q = precision if isinstance(precision, QuantSpec) else QuantSpec.parse(precision)
    if y0 is None:
        y0 = exact_input(model)
    samples = y0.col_keys()
    qmodel = quantize_model(model, q)
    qy0 = quantize(y0, q)
    expected = quantize(infer_relu(qmodel, qy0, samples), q)
    return TestVectorBundle(qmodel, qy0, expected, q, samples, dict(model.meta))


def write_bundle(bundle: TestVectorBundle, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    blobs = {
        "model.txt": dumps_model(bundle.model).encode("utf-8"),
        "y0.tsv": dumps_tsv(bundle.y0).encode("utf-8"),
        "yl.tsv": dumps_tsv(bundle.expected).encode("utf-8"),
    }
    meta = [f"format={BUNDLE_FORMAT}",
            f"builder={bundle.provenance.get('builder', 'unknown')}"]
    for k in sorted(bundle.provenance):
        if k != "builder":
            meta.append(f"param.{k}={bundle.provenance[k]}")
    meta.append(f"precision={bundle.precision}")
    meta.append("samples=" + ",".join(bundle.samples))
    for name in FILES:
        (path / name).write_bytes(blobs[name])
        meta.append(f"fnv1a64.{name}={fnv1a64(blobs[name]):016x}")
    (path / "meta.txt").write_text("\n".join(meta) + "\n", encoding="utf-8")


def read_bundle(path) -> TestVectorBundle:
    path = Path(path)
    meta = {}
    for line in (path / "meta.txt").read_text(encoding="utf-8").splitlines():
        if line:
            k, _, v = line.partition("=")
            meta[k] = v
    if meta.get("format") != BUNDLE_FORMAT:
        raise IntegrityError(f"unsupported bundle format {meta.get('format')!r}")
    blobs = {}
    for name in FILES:
        data = (path / name).read_bytes()
        want = meta.get(f"fnv1a64.{name}")
        if want is None or int(want, 16) != fnv1a64(data):
            raise IntegrityError(f"checksum mismatch for {name}")
        blobs[name] = data.decode("utf-8")
    provenance = {k[6:]: v for k, v in meta.items() if k.startswith("param.")}
    provenance["builder"] = meta.get("builder", "unknown")
    samples = meta["samples"].split(",") if meta.get("samples") else []
    return TestVectorBundle(
        loads_model(blobs["model.txt"]),
        loads_tsv(blobs["y0.tsv"]),
        loads_tsv(blobs["yl.tsv"]),
        QuantSpec.parse(meta.get("precision", "exact")),
        samples,
        provenance,
    )


@dataclass
class VerifyReport:
    samples: int
    mismatches: list[tuple[str, str, float, float]]
    argmax_agree: int

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def argmax_rate(self) -> float:
        return self.argmax_agree / self.samples if self.samples else 1.0

    def lines(self) -> list[str]:
        out = [f"samples\t{self.samples}", f"mismatches\t{len(self.mismatches)}",
               f"argmax_rate\t{self.argmax_rate!r}"]
        for r, c, e, g in self.mismatches:
            out.append(f"mismatch\t{r}\t{c}\t{e!r}\t{g!r}")
        return out


def _argmax(col: dict[str, float]) -> str | None:
    if not col:
        return None
    best = max(col.values())
    return min(k for k, v in col.items() if v == best)


def verify_bundle(bundle: TestVectorBundle, candidate: AssociativeArray) -> VerifyReport:
    """Compare a candidate output against the bundle at the bundle's precision."""
    unknown = set(candidate.col_keys()) - set(bundle.samples)
    if unknown:
        raise ValueError(f"candidate has sample columns not in the bundle: {sorted(unknown)[:5]}")
    cand = quantize(candidate, bundle.precision)
    exp, got = bundle.expected.to_dict(), cand.to_dict()
    mismatches = []
    for k in sorted(exp.keys() | got.keys()):
        e, g = exp.get(k, 0.0), got.get(k, 0.0)
        if e != g:
            mismatches.append((k[0], k[1], e, g))
    ecols, gcols = bundle.expected.by_col, cand.by_col
    agree = sum(_argmax(ecols.get(s, {})) == _argmax(gcols.get(s, {})) for s in bundle.samples)
    return VerifyReport(len(bundle.samples), mismatches, agree)
