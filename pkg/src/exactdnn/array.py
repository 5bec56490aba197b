"""Sparse string-keyed associative arrays.

An :class:`AssociativeArray` is an immutable map ``(row_key, col_key) -> value``.
Absent entries stand for the additive identity of whichever semiring an
operation is evaluated in, so the array itself carries no semiring; every
operation takes one and elides results equal to that semiring's zero.

Keys are strings compared in code-point order (identical to UTF-8 bytewise
order), and every iteration is in sorted ``(row, col)`` order.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from typing import Callable

import numpy as np

from .semiring import PLUS_TIMES, SemiringSpec

Key = str


class _All:
    def __repr__(self):
        return "ALL"


#: Selector meaning "every key" for :func:`select`.
ALL = _All()


class AssociativeArray:
    __slots__ = ("_data", "_rows", "_cols")

    def __init__(self, entries: Mapping[tuple[Key, Key], float] | None = None,
                 semiring: SemiringSpec = PLUS_TIMES):
        data = {}
        if entries:
            zero = semiring.zero
            for (r, c), v in entries.items():
                v = float(v)
                if v != zero:
                    data[(str(r), str(c))] = v
        self._data = data
        self._rows = None
        self._cols = None

    @classmethod
    def _wrap(cls, data: dict) -> AssociativeArray:
        # trusted: caller guarantees canonical keys/values
        obj = cls.__new__(cls)
        obj._data = data
        obj._rows = None
        obj._cols = None
        return obj

    # -- container protocol -------------------------------------------------

    def __len__(self) -> int:
        return len(self._data)

    @property
    def nnz(self) -> int:
        return len(self._data)

    def __iter__(self) -> Iterator[tuple[Key, Key, float]]:
        for (r, c) in sorted(self._data):
            yield r, c, self._data[(r, c)]

    def __contains__(self, rc) -> bool:
        return rc in self._data

    def __getitem__(self, rc: tuple[Key, Key]) -> float:
        return self._data[rc]

    def get(self, row: Key, col: Key, default=None):
        return self._data.get((row, col), default)

    def items(self) -> list[tuple[tuple[Key, Key], float]]:
        return [(k, self._data[k]) for k in sorted(self._data)]

    def to_dict(self) -> dict[tuple[Key, Key], float]:
        return dict(self._data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AssociativeArray):
            return NotImplemented
        return self._data == other._data

    def __hash__(self):
        return hash(frozenset(self._data.items()))

    def __repr__(self) -> str:
        shown = ", ".join(f"({r},{c}):{v:g}" for r, c, v in list(self)[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"AssociativeArray({{{shown}{more}}})"

    # -- indexes --------------------------------------------------------------

    @property
    def by_row(self) -> dict[Key, dict[Key, float]]:
        if self._rows is None:
            idx: dict[Key, dict[Key, float]] = {}
            for (r, c), v in self._data.items():
                idx.setdefault(r, {})[c] = v
            self._rows = idx
        return self._rows

    @property
    def by_col(self) -> dict[Key, dict[Key, float]]:
        if self._cols is None:
            idx: dict[Key, dict[Key, float]] = {}
            for (r, c), v in self._data.items():
                idx.setdefault(c, {})[r] = v
            self._cols = idx
        return self._cols

    def row_keys(self) -> list[Key]:
        return sorted(self.by_row)

    def col_keys(self) -> list[Key]:
        return sorted(self.by_col)

    @property
    def T(self) -> AssociativeArray:
        return transpose(self)

    def to_dense(self, rows: Sequence[Key] | None = None, cols: Sequence[Key] | None = None,
                 fill: float = 0.0) -> np.ndarray:
        rows = self.row_keys() if rows is None else list(rows)
        cols = self.col_keys() if cols is None else list(cols)
        ri = {k: i for i, k in enumerate(rows)}
        ci = {k: j for j, k in enumerate(cols)}
        out = np.full((len(rows), len(cols)), fill, dtype=float)
        for (r, c), v in self._data.items():
            if r in ri and c in ci:
                out[ri[r], ci[c]] = v
        return out


# -- construction -------------------------------------------------------------

def build(row_keys: Sequence[Key], col_keys: Sequence[Key], values: Sequence[float] | float,
          semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    """Construct an array from parallel key/value lists.

    Duplicate ``(row, col)`` pairs are combined with the semiring's addition.
    A scalar ``values`` is broadcast to every position.
    """
    if np.isscalar(values):
        values = [values] * len(row_keys)
    if not (len(row_keys) == len(col_keys) == len(values)):
        raise ValueError(
            f"build: length mismatch rows={len(row_keys)} cols={len(col_keys)} values={len(values)}")
    data: dict[tuple[Key, Key], float] = {}
    add = semiring.add
    for r, c, v in zip(row_keys, col_keys, values):
        k = (str(r), str(c))
        v = float(v)
        data[k] = add(data[k], v) if k in data else v
    zero = semiring.zero
    return AssociativeArray._wrap({k: v for k, v in data.items() if v != zero})


def from_triples(triples: Iterable[tuple[Key, Key, float]],
                 semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    rows, cols, vals = [], [], []
    for r, c, v in triples:
        rows.append(r)
        cols.append(c)
        vals.append(v)
    return build(rows, cols, vals, semiring)


def from_dense(values, row_keys: Sequence[Key], col_keys: Sequence[Key],
               semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    values = np.asarray(values, dtype=float)
    if values.shape != (len(row_keys), len(col_keys)):
        raise ValueError(f"from_dense: shape {values.shape} does not match keys")
    data = {}
    for i, r in enumerate(row_keys):
        for j, c in enumerate(col_keys):
            v = float(values[i, j])
            if v != semiring.zero:
                data[(r, c)] = v
    return AssociativeArray._wrap(data)


def identity_like(row_keys: Sequence[Key], col_keys: Sequence[Key],
                  semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    """Ones at the paired positions ``(row_keys[i], col_keys[i])``.

    One side may repeat keys (e.g. many categories sharing a first letter),
    but not both.
    """
    if len(row_keys) != len(col_keys):
        raise ValueError("identity_like: row and column key lists differ in length")
    if len(set(row_keys)) != len(row_keys) and len(set(col_keys)) != len(col_keys):
        raise ValueError("identity_like: keys repeat on both sides")
    one = semiring.one
    return AssociativeArray._wrap({(str(r), str(c)): one for r, c in zip(row_keys, col_keys)})


def identity(keys: Sequence[Key], semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    return identity_like(keys, keys, semiring)


def ones(row_keys: Sequence[Key], col_keys: Sequence[Key],
         semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    if not len(row_keys) or not len(col_keys):
        raise ValueError("ones: key lists must be non-empty")
    one = semiring.one
    return AssociativeArray._wrap({(str(r), str(c)): one for r in row_keys for c in col_keys})


def zeros() -> AssociativeArray:
    return AssociativeArray._wrap({})


# -- element-wise -------------------------------------------------------------

def ewise_add(A: AssociativeArray, B: AssociativeArray,
              semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    """Union of supports; overlapping entries combined with the semiring's add."""
    add, zero = semiring.add, semiring.zero
    out = {}
    a, b = A._data, B._data
    for k in a.keys() | b.keys():
        if k in a and k in b:
            v = add(a[k], b[k])
        elif k in a:
            v = add(a[k], zero)
        else:
            v = add(b[k], zero)
        if v != zero:
            out[k] = v
    return AssociativeArray._wrap(out)


def ewise_mult(A: AssociativeArray, B: AssociativeArray,
               semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    """Intersection of supports; entries combined with the semiring's mul."""
    mul, zero = semiring.mul, semiring.zero
    a, b = A._data, B._data
    if len(b) < len(a):
        keys = [k for k in b if k in a]
    else:
        keys = [k for k in a if k in b]
    out = {}
    for k in keys:
        v = mul(a[k], b[k])
        if v != zero:
            out[k] = v
    return AssociativeArray._wrap(out)


def apply(A: AssociativeArray, fn: Callable[[float], float],
          semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    """Map ``fn`` over stored entries, eliding results equal to ``semiring.zero``."""
    zero = semiring.zero
    out = {}
    for k, v in A._data.items():
        v = float(fn(v))
        if v != zero:
            out[k] = v
    return AssociativeArray._wrap(out)


def zero_norm(A: AssociativeArray) -> AssociativeArray:
    return AssociativeArray._wrap({k: 1.0 for k in A._data})


# -- products -----------------------------------------------------------------

def matmul(A: AssociativeArray, B: AssociativeArray,
           semiring: SemiringSpec = PLUS_TIMES) -> AssociativeArray:
    """Array product ``C(i,j) = add_k A(i,k) mul B(k,j)`` over shared inner keys.

    Each output entry is reduced in sorted inner-key order, so results are
    bitwise reproducible.
    """
    add, mul, zero = semiring.add, semiring.mul, semiring.zero
    b_rows = B.by_row
    out = {}
    for i, arow in A.by_row.items():
        acc: dict[Key, float] = {}
        for k in sorted(arow):
            brow = b_rows.get(k)
            if brow is None:
                continue
            av = arow[k]
            for j, bv in brow.items():
                p = mul(av, bv)
                acc[j] = add(acc[j], p) if j in acc else p
        for j, v in acc.items():
            if v != zero:
                out[(i, j)] = v
    return AssociativeArray._wrap(out)


def transpose(A: AssociativeArray) -> AssociativeArray:
    return AssociativeArray._wrap({(c, r): v for (r, c), v in A._data.items()})


def kron(A: AssociativeArray, B: AssociativeArray, semiring: SemiringSpec = PLUS_TIMES,
         sep: str = "") -> AssociativeArray:
    """Kronecker product with keys ``a_row + sep + b_row`` and ``a_col + sep + b_col``.

    Raises ``ValueError`` if concatenation maps two distinct key pairs onto the
    same output key; pass a non-empty ``sep`` in that case.
    """
    mul, zero = semiring.mul, semiring.zero
    out = {}
    seen: dict[tuple[Key, Key], tuple] = {}
    for (r1, c1), a in A._data.items():
        for (r2, c2), b in B._data.items():
            k = (r1 + sep + r2, c1 + sep + c2)
            origin = (r1, c1, r2, c2)
            prev = seen.setdefault(k, origin)
            if prev != origin:
                raise ValueError(f"kron: key collision at {k}; use a separator")
            v = mul(a, b)
            if v != zero:
                out[k] = v
    return AssociativeArray._wrap(out)


# -- keys and selection --------------------------------------------------------

def nonzero_rows(A: AssociativeArray) -> list[Key]:
    return A.row_keys()


def nonzero_cols(A: AssociativeArray) -> list[Key]:
    return A.col_keys()


def select(A: AssociativeArray, rows=ALL, cols=ALL) -> AssociativeArray:
    if rows is ALL and cols is ALL:
        return A
    if rows is not ALL and cols is ALL:
        # fast path through the row index
        out = {}
        idx = A.by_row
        for r in set(rows):
            for c, v in idx.get(r, {}).items():
                out[(r, c)] = v
        return AssociativeArray._wrap(out)
    if rows is ALL:
        out = {}
        idx = A.by_col
        for c in set(cols):
            for r, v in idx.get(c, {}).items():
                out[(r, c)] = v
        return AssociativeArray._wrap(out)
    rs, cs = set(rows), set(cols)
    return AssociativeArray._wrap(
        {(r, c): v for (r, c), v in A._data.items() if r in rs and c in cs})
