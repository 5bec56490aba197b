"""Sparse associative-array algebra and exact ReLU DNN solutions."""

from .array import (
    ALL,
    AssociativeArray,
    build,
    ewise_add,
    ewise_mult,
    identity,
    identity_like,
    kron,
    matmul,
    nonzero_cols,
    nonzero_rows,
    ones,
    select,
    transpose,
    zero_norm,
)
from .builders import build_combinatoric, build_from_images, build_selective
from .dnn import (
    DnnModel,
    collapse,
    exact_input,
    flatten,
    infer_collapsed,
    infer_relu,
    infer_semiring,
    make_bias,
    replicate_bias,
)
from .semiring import MAX_MIN, MAX_PLUS, MAX_TIMES, MIN_MAX, MIN_PLUS, MIN_TIMES, PLUS_TIMES

__version__ = "0.1.0"
