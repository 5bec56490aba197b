"""Constructors of exact ReLU DNN solutions.

Every model built here has 0/1 weights and biases ``beta - degree``, and
maps its exact input (the transposed single-layer weights) to the identity
over its categories when all ``beta`` are 1.
"""

from __future__ import annotations

import itertools
import string
from collections.abc import Sequence
from dataclasses import dataclass
from functools import reduce
from importlib import resources

import numpy as np

from . import array as aa
from .array import AssociativeArray
from .dnn import DnnModel, from_weights
from .plan import LayerPlan, PlanError, parse

# popular two-letter words, in order, with the letter lists they induce
TWO_LETTER_WORDS = (
    "ad ah am as at be by do go ha he hi ie if in it me mr ms my no of oh ok "
    "on or pc pm re so to tv uh up us vs we"
).split()


@dataclass(frozen=True)
class FeatureSet:
    id: str
    keys: tuple[str, ...]

    def __post_init__(self):
        if not self.keys:
            raise ValueError(f"feature set {self.id!r} is empty")
        if len(set(self.keys)) != len(self.keys):
            raise ValueError(f"feature set {self.id!r} repeats keys")


def feature_set(position: int, values: Sequence[str]) -> FeatureSet:
    """Feature set ``f<position>`` with position-prefixed keys (``1a``, ``1b`` ...)."""
    return FeatureSet(f"f{position}", tuple(f"{position}{v}" for v in values))


def uniform_feature_sets(m: int, k: int) -> list[FeatureSet]:
    """``m`` feature sets of ``k`` letters each."""
    if k > 26:
        raise ValueError("at most 26 values per feature set")
    return [feature_set(p, string.ascii_lowercase[:k]) for p in range(1, m + 1)]


def _as_plan(plan: LayerPlan | str | None, n: int) -> LayerPlan:
    if plan is None:
        return LayerPlan.single(n)
    if isinstance(plan, str):
        return parse(plan, n)
    if plan.n != n:
        raise PlanError(f"plan is over {plan.n} leaves, expected {n}")
    return plan


def build_combinatoric(feature_sets: Sequence[FeatureSet], plan: LayerPlan | str | None = None,
                       beta: float | Sequence[float] = 1.0) -> DnnModel:
    """A category for every combination of one feature from each set.

    Each group of blocks ``M1..Mk`` is merged with the Kronecker sum of terms
    in which ``M_i`` contributes an identity and every other member a column
    of ones, so a merged neuron listens to exactly one neuron per member.
    """
    if len(feature_sets) < 2:
        raise ValueError("combinatoric construction needs at least 2 feature sets")
    plan = _as_plan(plan, len(feature_sets))
    blocks = {f"f{p}": list(fs.keys) for p, fs in enumerate(feature_sets, start=1)}
    positions = plan.leaf_positions()
    weights = []
    for stage in plan.stages:
        W = aa.zeros()
        produced = {}
        for g in stage:
            member_pos = [positions[m] for m in g.members]
            if sum(len(p) for p in member_pos) != len(set().union(*member_pos)):
                raise PlanError(f"combinatoric group {g.name} merges overlapping blocks")
            if tuple(sorted(set().union(*member_pos))) != g.positions:
                raise PlanError(f"combinatoric group {g.name} cannot name unwired positions")
            keys = [blocks[m] for m in g.members]
            for i in range(len(keys)):
                factors = [aa.identity(ks) if j == i else aa.ones(ks, [""])
                           for j, ks in enumerate(keys)]
                W = aa.ewise_add(W, reduce(aa.kron, factors))
            produced[g.name] = ["".join(combo) for combo in itertools.product(*keys)]
            positions[g.name] = g.positions
        weights.append(aa.zero_norm(W))
        blocks = produced
    meta = {
        "builder": "combinatoric",
        "sets": ";".join(",".join(fs.keys) for fs in feature_sets),
        "plan": str(plan),
    }
    return from_weights(weights, beta, meta)


def _check_words(words: Sequence[str]) -> int:
    if not words:
        raise ValueError("no words given")
    n = len(words[0])
    for w in words:
        if len(w) != n:
            raise ValueError(f"word {w!r} has length {len(w)}, expected {n}")
        if not w or not all(ch in string.ascii_lowercase for ch in w):
            raise ValueError(f"word {w!r} is not lowercase ASCII")
    dupes = sorted({w for w in words if words.count(w) > 1})
    if dupes:
        raise ValueError(f"duplicate words: {dupes}")
    return n


def _project(word: str, positions: Sequence[int]) -> str:
    return "".join(f"{p}{word[p - 1]}" for p in positions)


def build_selective(words: Sequence[str], plan: LayerPlan | str | None = None,
                    beta: float | Sequence[float] = 1.0) -> DnnModel:
    """Exact solution wiring only the features that spell the given words.

    Leaf features are ``<position><letter>``; an intermediate neuron is the
    concatenation of the leaf keys it is named after (``1t2h``); categories
    are the words themselves.
    """
    words = list(words)
    n = _check_words(words)
    plan = _as_plan(plan, n)
    positions = plan.block_positions()
    weights = []
    for si, stage in enumerate(plan.stages):
        last = si == plan.depth - 1
        W = aa.zeros()
        for g in stage:
            # one neuron per distinct projection, with a representative word
            reps = {}
            for w in words:
                reps.setdefault(w if last else _project(w, g.positions), w)
            rows = list(reps)
            for m in g.members:
                cols = [_project(reps[r], positions[m]) for r in rows]
                W = aa.ewise_add(W, aa.identity_like(rows, cols))
        weights.append(aa.zero_norm(W))
    meta = {"builder": "selective", "words": ",".join(words), "plan": str(plan)}
    return from_weights(weights, beta, meta)


def pixel_key(i: int, j: int) -> str:
    return string.ascii_lowercase[i] + string.ascii_lowercase[j]


def build_from_images(images, labels: Sequence[int] | None = None, threshold: float = 0.5,
                      trim: int = 1, beta: float = 1.0,
                      ids: Sequence[str] | None = None) -> tuple[DnnModel, AssociativeArray]:
    """Single-layer exact solution whose categories are thresholded images.

    ``images`` is an ``(n, side, side)`` array with values in [0, 1]; a pixel
    is on when strictly above ``threshold``.  After trimming ``trim`` pixels
    from every border the side must be at most 26 so that each pixel has a
    two-letter key.  Returns the model and its exact input.
    """
    images = np.asarray(images)
    if images.dtype == np.uint8:
        images = images / 255.0
    if images.ndim != 3 or images.shape[1] != images.shape[2]:
        raise ValueError(f"need square images, got shape {images.shape}")
    if trim < 0 or 2 * trim >= images.shape[1]:
        raise ValueError(f"cannot trim {trim} pixels from side {images.shape[1]}")
    if trim:
        images = images[:, trim:-trim, trim:-trim]
    side = images.shape[1]
    if side > 26:
        raise ValueError(f"image side {side} after trimming exceeds 26")
    count = images.shape[0]
    if labels is None:
        labels = [0] * count
    if ids is None:
        ids = [f"{int(labels[i])}_{i:05d}" for i in range(count)]
    if len(labels) != count or len(ids) != count:
        raise ValueError("images, labels and ids differ in length")
    rows, cols = [], []
    seen: dict[bytes, str] = {}
    for idx in range(count):
        on = images[idx] > threshold
        if not on.any():
            raise ValueError(f"image {ids[idx]} has no pixels above {threshold}")
        sig = np.packbits(on).tobytes()
        if sig in seen:
            raise ValueError(f"image {ids[idx]} duplicates image {seen[sig]}")
        seen[sig] = ids[idx]
        for i, j in zip(*np.nonzero(on)):
            rows.append(ids[idx])
            cols.append(pixel_key(int(i), int(j)))
    W = aa.build(rows, cols, 1.0)
    meta = {"builder": "images", "threshold": repr(float(threshold)), "trim": str(trim),
            "count": str(count)}
    model = from_weights([W], beta, meta)
    return model, aa.transpose(W)


def load_words(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]


def shipped_words(length: int) -> list[str]:
    """Bundled list of popular words of the given length (2, 3 or 4)."""
    if length == 2:
        return list(TWO_LETTER_WORDS)
    name = f"words{length}.txt"
    try:
        text = resources.files("exactdnn").joinpath("data").joinpath(name).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValueError(f"no shipped word list of length {length}") from None
    return [w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#")]
