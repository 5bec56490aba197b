"""ReLU DNNs held as associative arrays.

Each layer computes ``Y_{l+1} = max(W_l Y_l + B_l, 0)`` where ``B_l`` copies
the bias column ``b_l`` into every sample column of the batch.  Neurons,
features, categories and samples are all addressed by string keys, so a
batch is just an :class:`AssociativeArray` with neuron rows and sample
columns.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from . import array as aa
from .array import AssociativeArray
from .semiring import MAX_PLUS, MAX_TIMES, PLUS_TIMES

log = logging.getLogger(__name__)

#: column key used for bias (column vector) arrays
BIAS_COL = "b"

Batch = AssociativeArray


class StructureError(ValueError):
    """Layer key sets overlap in a way that breaks the model's wiring."""


@dataclass(frozen=True)
class Layer:
    W: AssociativeArray
    b: AssociativeArray
    beta: float | None = None


@dataclass
class DnnModel:
    layers: list[Layer]
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_keys(self) -> list[str]:
        return self.layers[0].W.col_keys() if self.layers else []

    @property
    def category_keys(self) -> list[str]:
        return self.layers[-1].W.row_keys() if self.layers else []

    @property
    def betas(self) -> list[float | None]:
        return [layer.beta for layer in self.layers]

    def weights(self) -> list[AssociativeArray]:
        return [layer.W for layer in self.layers]

    def is_binary(self) -> bool:
        return all(v == 1.0 for layer in self.layers for _, _, v in layer.W)

    def rebias(self, betas: float | Sequence[float]) -> DnnModel:
        """Same 0/1 weights, biases rebuilt from new gap parameters."""
        if isinstance(betas, (int, float)):
            betas = [float(betas)] * self.depth
        if len(betas) != self.depth:
            raise ValueError(f"need {self.depth} beta values, got {len(betas)}")
        layers = [Layer(layer.W, make_bias(layer.W, beta), float(beta))
                  for layer, beta in zip(self.layers, betas)]
        meta = dict(self.meta)
        meta["beta"] = ",".join(_fmt_beta(b) for b in betas)
        return DnnModel(layers, meta)

    def __eq__(self, other):
        if not isinstance(other, DnnModel):
            return NotImplemented
        return self.layers == other.layers


def _fmt_beta(b) -> str:
    return "none" if b is None else repr(float(b))


def from_weights(weights: Sequence[AssociativeArray], betas: float | Sequence[float] = 1.0,
                 meta: dict | None = None) -> DnnModel:
    """Model from 0/1 weight arrays with biases from :func:`make_bias`."""
    if isinstance(betas, (int, float)):
        betas = [float(betas)] * len(weights)
    if len(betas) != len(weights):
        raise ValueError(f"need {len(weights)} beta values, got {len(betas)}")
    layers = [Layer(W, make_bias(W, beta), float(beta)) for W, beta in zip(weights, betas)]
    meta = dict(meta or {})
    meta.setdefault("beta", ",".join(_fmt_beta(b) for b in betas))
    return DnnModel(layers, meta)


def make_bias(W: AssociativeArray, beta: float) -> AssociativeArray:
    """Per-row bias ``beta - degree``; a row firing needs all its inputs present.

    Absent rows get no entry, and a zero bias (degree 1, beta 1) is stored as
    an absent entry like any other zero.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    out = {}
    for r, row in W.by_row.items():
        deg = 0.0
        for v in row.values():
            if v != 1.0:
                raise ValueError(f"make_bias needs 0/1 weights; row {r!r} holds {v}")
            deg += v
        out[(r, BIAS_COL)] = beta - deg
    return AssociativeArray(out)


def bias_vector(b: AssociativeArray) -> dict[str, float]:
    return {r: v for (r, _), v in b.to_dict().items()}


def replicate_bias(b: AssociativeArray, Y: Batch | Sequence[str]) -> AssociativeArray:
    """Copy bias column ``b`` into every sample column of ``Y``.

    ``Y`` may also be given directly as a list of sample keys.
    """
    samples = Y.col_keys() if isinstance(Y, AssociativeArray) else list(Y)
    return AssociativeArray._wrap(
        {(r, s): v for (r, _), v in b.to_dict().items() for s in samples})


def _drop_foreign_rows(model: DnnModel, Y0: Batch) -> Batch:
    inputs = set(model.input_keys)
    foreign = [r for r in Y0.row_keys() if r not in inputs]
    if foreign:
        log.info("dropping %d input rows not wired into the model", len(foreign))
        return aa.select(Y0, [r for r in Y0.row_keys() if r in inputs])
    return Y0


def relu_step(W: AssociativeArray, Y: Batch, b: AssociativeArray, samples: Sequence[str]) -> Batch:
    """One ``max(W Y + B, 0)`` step, touching only stored products.

    Rows of ``W Y`` with no stored product only need visiting when their bias
    is positive; every such row is filled in for all ``samples``.
    """
    P = aa.matmul(W, Y, PLUS_TIMES)
    bias = bias_vector(b)
    out = {}
    for (r, s), p in P.to_dict().items():
        v = p + bias.get(r, 0.0)
        if v > 0.0:
            out[(r, s)] = v
    for r, v in bias.items():
        if v > 0.0:
            for s in samples:
                if (r, s) not in out and (r, s) not in P:
                    out[(r, s)] = v
    return AssociativeArray._wrap(out)


def infer_relu(model: DnnModel, Y0: Batch, samples: Sequence[str] | None = None) -> Batch:
    """Layer-by-layer ReLU inference.

    ``samples`` fixes the batch's column keys; by default they are the
    columns of ``Y0`` that hold at least one entry.
    """
    samples = Y0.col_keys() if samples is None else list(samples)
    Y = _drop_foreign_rows(model, Y0)
    for layer in model.layers:
        Y = relu_step(layer.W, Y, layer.b, samples)
    return Y


def _as_max_plus(A: AssociativeArray, rows: Sequence[str], cols: Sequence[str]) -> AssociativeArray:
    # absent means 0 in plus-times, which is max-plus's unit and must be stored
    d = A.to_dict()
    return AssociativeArray._wrap({(r, c): d.get((r, c), 0.0) for r in rows for c in cols})


def infer_semiring(model: DnnModel, Y0: Batch, samples: Sequence[str] | None = None) -> Batch:
    """Inference as ``W Y`` over plus-times followed by ``(. ⊗ B) ⊕ 0`` over max-plus."""
    samples = Y0.col_keys() if samples is None else list(samples)
    Y = _drop_foreign_rows(model, Y0)
    for layer in model.layers:
        P = aa.matmul(layer.W, Y, PLUS_TIMES)
        rows = sorted(set(layer.W.row_keys()) | set(r for r, _ in layer.b.to_dict()))
        if not rows or not samples:
            Y = aa.zeros()
            continue
        P2 = _as_max_plus(P, rows, samples)
        B2 = _as_max_plus(replicate_bias(layer.b, samples), rows, samples)
        Z = aa.ewise_mult(P2, B2, MAX_PLUS)
        Z = aa.ewise_add(Z, aa.ones(rows, samples, MAX_PLUS), MAX_PLUS)
        Y = AssociativeArray(Z.to_dict(), PLUS_TIMES)
    return Y


def collapse(model: DnnModel) -> tuple[AssociativeArray, AssociativeArray]:
    """Stack all layers into one weight array and one bias column.

    Requires every layer's neuron keys to be distinct from every other
    layer's and from the input features.
    """
    seen = {k: "input" for k in model.input_keys}
    W, b = aa.zeros(), aa.zeros()
    for i, layer in enumerate(model.layers):
        for r in layer.W.row_keys():
            if r in seen:
                raise StructureError(
                    f"neuron key {r!r} of layer {i} already used by {seen[r]}")
            seen[r] = f"layer {i}"
        W = aa.ewise_add(W, layer.W, PLUS_TIMES)
        b = aa.ewise_add(b, layer.b, PLUS_TIMES)
    return W, b


def infer_collapsed(W: AssociativeArray, b: AssociativeArray, Y0: Batch, L: int,
                    samples: Sequence[str] | None = None) -> Batch:
    """Iterate ``Y <- max(W Y + B, 0)`` ``L`` times with the stacked arrays."""
    samples = Y0.col_keys() if samples is None else list(samples)
    Y = Y0
    for _ in range(L):
        Y = relu_step(W, Y, b, samples)
    return Y


def flatten(model: DnnModel) -> AssociativeArray:
    """Collapse a 0/1 model to its single-layer weights via max-times products."""
    if not model.is_binary():
        raise ValueError("flatten needs 0/1 weights")
    W = model.layers[0].W
    for layer in model.layers[1:]:
        W = aa.matmul(layer.W, W, MAX_TIMES)
    return W


def exact_input(model: DnnModel) -> Batch:
    return aa.transpose(flatten(model))
