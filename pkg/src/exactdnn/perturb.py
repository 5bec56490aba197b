"""Single-feature perturbations of exact solutions.

One input feature supporting a category is set to ``r`` in [0, 2] while all
other supporting features stay at 1.  :func:`r_detect` predicts, in closed
form, the threshold above which the category still wins; :func:`sweep`
measures it by running full ReLU inference over a grid of ``r``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from . import array as aa
from .array import ALL, AssociativeArray
from .dnn import BIAS_COL, DnnModel, bias_vector, infer_relu, make_bias
from .semiring import PLUS_TIMES


class UnsupportedModelError(ValueError):
    """The closed-form threshold does not apply to this model."""


@dataclass(frozen=True)
class SubDnn:
    category: str
    layers: tuple[AssociativeArray, ...]
    biases: tuple[AssociativeArray, ...]
    feature: str | None = None
    feature_layers: tuple[AssociativeArray, ...] | None = None

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_keys(self) -> list[str]:
        return self.layers[0].col_keys()


def sub_dnn_category(model: DnnModel, c: str) -> SubDnn:
    """Layers restricted backwards to the neurons that feed category ``c``."""
    if c not in set(model.category_keys):
        raise ValueError(f"unknown category {c!r}")
    L = model.depth
    layers: list[AssociativeArray] = [None] * L
    layers[L - 1] = aa.select(model.layers[L - 1].W, [c], ALL)
    for i in range(L - 2, -1, -1):
        layers[i] = aa.select(model.layers[i].W, aa.nonzero_cols(layers[i + 1]), ALL)
    biases = [aa.select(model.layers[i].b, aa.nonzero_rows(layers[i]), ALL) for i in range(L)]
    return SubDnn(c, tuple(layers), tuple(biases))


def sub_dnn_feature(sub: SubDnn, f: str) -> SubDnn:
    """Further restrict ``sub`` forwards to the paths leaving input feature ``f``."""
    if f not in set(sub.input_keys):
        raise ValueError(f"feature {f!r} does not feed category {sub.category!r}")
    fl = [aa.select(sub.layers[0], ALL, [f])]
    for layer in sub.layers[1:]:
        fl.append(aa.select(layer, ALL, aa.nonzero_rows(fl[-1])))
    return replace(sub, feature=f, feature_layers=tuple(fl))


def _check_r(r: float) -> None:
    if not 0.0 <= r <= 2.0:
        raise ValueError(f"perturbation r must lie in [0, 2], got {r}")


def perturbed_input(sub: SubDnn, f: str, r: float, sample: str | None = None) -> AssociativeArray:
    """Single-column input: 1 on every supporting feature, ``r`` on ``f``."""
    _check_r(r)
    return perturbed_batch(sub, f, [r], [sample or sub.category])


def perturbed_batch(sub: SubDnn, f: str, rs: Sequence[float],
                    samples: Sequence[str] | None = None) -> AssociativeArray:
    """One input column per value in ``rs``."""
    feats = sub.input_keys
    if f not in set(feats):
        raise ValueError(f"feature {f!r} does not feed category {sub.category!r}")
    if samples is None:
        samples = grid_keys(len(rs))
    data = {}
    for r, s in zip(rs, samples):
        _check_r(r)
        for k in feats:
            data[(k, s)] = 1.0
        data[(f, s)] = 1.0 + (r - 1.0)
    return AssociativeArray(data)


def grid_keys(n: int) -> list[str]:
    width = max(1, len(str(n - 1)))
    return [f"r{i:0{width}d}" for i in range(n)]


def _check_exact(model: DnnModel) -> None:
    if not model.is_binary():
        raise UnsupportedModelError("closed form needs 0/1 weights")
    for i, layer in enumerate(model.layers):
        if layer.beta is None or make_bias(layer.W, layer.beta) != layer.b:
            raise UnsupportedModelError(f"layer {i} bias is not beta - degree")


def linear_outputs(sub: SubDnn, y0: dict[str, float]) -> list[dict[str, float]]:
    """Neuron values of the sub-network without the ReLU, layer by layer."""
    values = [dict(y0)]
    y = y0
    for W, b in zip(sub.layers, sub.biases):
        bias = bias_vector(b)
        nxt = {}
        for r, row in W.by_row.items():
            acc = 0.0
            for k in sorted(row):
                acc += row[k] * y.get(k, 0.0)
            nxt[r] = acc + bias.get(r, 0.0)
        values.append(nxt)
        y = nxt
    return values


def relu_transparent(sub: SubDnn) -> bool:
    """True when no hidden neuron of ``sub`` is clipped on the unperturbed input.

    The closed-form threshold linearises the sub-network; that is exact only
    while the ReLU leaves every hidden neuron alone.
    """
    values = linear_outputs(sub, {k: 1.0 for k in sub.input_keys})
    return all(v >= 0.0 for layer in values[1:-1] for v in layer.values())


def r_detect(model: DnnModel, c: str, f: str) -> float:
    """Closed-form detection threshold for perturbing feature ``f`` of category ``c``.

    Linearising the sub-network that supports ``c`` gives

        y_L(c) = P_0 y_0 + sum_j P_{j+1} b_j,   P_j = W_{L-1} ... W_j  (P_L = I)

    and with ``y_0 = 1 + (r - 1) e_f`` the output is positive exactly when

        r > 1 - (P_0 1 + sum_j P_{j+1} b_j) / (P_0 e_f)(c)

    The numerator is the category's output on the unperturbed input and the
    denominator counts the paths from ``f`` to ``c``.  The result is not
    clamped to [0, 2].  If a hidden neuron is already clipped on the
    unperturbed input (see :func:`relu_transparent`) the true threshold can
    only be lower, since the ReLU never decreases a value.
    """
    _check_exact(model)
    sub = sub_dnn_category(model, c)
    if f not in set(sub.input_keys):
        raise ValueError(f"feature {f!r} does not feed category {c!r}")
    L = sub.depth
    P = [None] * (L + 1)
    P[L] = aa.identity([c])
    for j in range(L - 1, -1, -1):
        P[j] = aa.matmul(P[j + 1], sub.layers[j], PLUS_TIMES)
    paths = P[0].get(c, f, 0.0)
    through_ones = sum(v for _, _, v in P[0])
    bias_terms = 0.0
    for j in range(L):
        bias_terms += aa.matmul(P[j + 1], sub.biases[j], PLUS_TIMES).get(c, BIAS_COL, 0.0)
    return 1.0 - (through_ones + bias_terms) / paths


@dataclass
class PerturbReport:
    category: str
    feature: str
    grid: list[float]
    pd: list[int]
    pfa: list[int]
    r_d_closed: float | None
    r_d_empirical: float
    notes: list[str] = field(default_factory=list)

    @property
    def step(self) -> float:
        if len(self.grid) < 2:
            return 0.0
        return max(b - a for a, b in zip(self.grid, self.grid[1:]))

    def is_unit_step(self) -> bool:
        return all(a <= b for a, b in zip(self.pd, self.pd[1:]))

    def agrees(self, tol: float | None = None) -> bool:
        """Closed-form and empirical thresholds within ``tol`` (default one grid step)."""
        if self.r_d_closed is None:
            return False
        tol = self.step if tol is None else tol
        emp, closed = self.r_d_empirical, self.r_d_closed
        if emp == math.inf:
            return closed >= self.grid[-1] - tol
        if emp == -math.inf:
            return closed < self.grid[0] + tol
        return abs(closed - emp) <= tol


def _empirical_step(grid: Sequence[float], pd: Sequence[int]) -> float:
    if not any(pd):
        return math.inf
    first = pd.index(1)
    if first == 0:
        return -math.inf
    return 0.5 * (grid[first - 1] + grid[first])


def sweep(model: DnnModel, c: str, f: str, grid: Sequence[float]) -> PerturbReport:
    """Measure detection and false alarm over ``grid`` with full ReLU inference.

    Detection at ``r`` means category ``c`` outputs a positive value strictly
    above every other category; a false alarm means some other category is
    positive and at least as large as ``c``.
    """
    grid = [float(r) for r in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be sorted")
    sub = sub_dnn_category(model, c)
    samples = grid_keys(len(grid))
    Y0 = perturbed_batch(sub, f, grid, samples)
    YL = infer_relu(model, Y0, samples)
    cols = YL.by_col
    pd, pfa = [], []
    for s in samples:
        col = cols.get(s, {})
        yc = col.get(c, 0.0)
        others = [v for k, v in col.items() if k != c]
        best_other = max(others, default=0.0)
        pd.append(int(yc > 0.0 and yc > best_other))
        pfa.append(int(any(v > 0.0 and v >= yc for v in others)))
    notes = []
    try:
        closed = r_detect(model, c, f)
    except UnsupportedModelError as exc:
        closed = None
        notes.append(f"no closed form: {exc}")
    if not relu_transparent(sub):
        notes.append("hidden neurons clipped on the unperturbed input; closed form is an upper bound")
    emp = _empirical_step(grid, pd)
    if math.isinf(emp):
        notes.append("detection step lies outside the grid")
    if not all(a <= b for a, b in zip(pd, pd[1:])):
        notes.append("detection is not monotone in r")
    return PerturbReport(c, f, grid, pd, pfa, closed, emp, notes)


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` -> inclusive grid of evenly spaced values."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValueError(f"grid must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [float(v) for v in np.round(start + np.arange(n) * step, 12)]
