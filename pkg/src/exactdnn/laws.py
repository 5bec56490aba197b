"""Randomized checks of the associative-array algebraic laws.

Every law is checked entry-exactly on random sparse arrays drawn from the
value domain on which the semiring's laws hold (small integers, so float
arithmetic is exact).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import array as aa
from .array import AssociativeArray
from .semiring import REGISTRY, SemiringSpec

KEYS = "abcdefgh"


def random_array(rng: random.Random, semiring: SemiringSpec, max_dim: int = 8,
                 density: float | None = None) -> AssociativeArray:
    rows = rng.sample(KEYS, rng.randint(1, max_dim))
    cols = rng.sample(KEYS, rng.randint(1, max_dim))
    if density is None:
        density = rng.uniform(0.1, 0.9)
    lo, hi = {"real": (-4, 4), "nonnegative": (0, 4), "positive": (1, 4)}[semiring.domain]
    data = {}
    for r in rows:
        for c in cols:
            if rng.random() < density:
                data[(r, c)] = float(rng.randint(lo, hi))
    return AssociativeArray(data, semiring)


def _ones_on(A: AssociativeArray, S: SemiringSpec) -> AssociativeArray:
    if not len(A):
        return aa.zeros()
    return aa.ones(A.row_keys(), A.col_keys(), S)


def _law_add_comm(A, B, C, S):
    return aa.ewise_add(A, B, S) == aa.ewise_add(B, A, S)


def _law_mult_comm(A, B, C, S):
    return aa.ewise_mult(A, B, S) == aa.ewise_mult(B, A, S)


def _law_matmul_transpose(A, B, C, S):
    return aa.transpose(aa.matmul(A, B, S)) == aa.matmul(aa.transpose(B), aa.transpose(A), S)


def _law_add_assoc(A, B, C, S):
    return aa.ewise_add(aa.ewise_add(A, B, S), C, S) == aa.ewise_add(A, aa.ewise_add(B, C, S), S)


def _law_mult_assoc(A, B, C, S):
    return (aa.ewise_mult(aa.ewise_mult(A, B, S), C, S)
            == aa.ewise_mult(A, aa.ewise_mult(B, C, S), S))


def _law_matmul_assoc(A, B, C, S):
    return aa.matmul(aa.matmul(A, B, S), C, S) == aa.matmul(A, aa.matmul(B, C, S), S)


def _law_kron_assoc(A, B, C, S):
    return aa.kron(aa.kron(A, B, S), C, S) == aa.kron(A, aa.kron(B, C, S), S)


def _law_mult_dist(A, B, C, S):
    lhs = aa.ewise_mult(A, aa.ewise_add(B, C, S), S)
    rhs = aa.ewise_add(aa.ewise_mult(A, B, S), aa.ewise_mult(A, C, S), S)
    return lhs == rhs


def _law_matmul_dist(A, B, C, S):
    lhs = aa.matmul(A, aa.ewise_add(B, C, S), S)
    rhs = aa.ewise_add(aa.matmul(A, B, S), aa.matmul(A, C, S), S)
    return lhs == rhs


def _law_kron_dist(A, B, C, S):
    lhs = aa.kron(A, aa.ewise_add(B, C, S), S)
    rhs = aa.ewise_add(aa.kron(A, B, S), aa.kron(A, C, S), S)
    return lhs == rhs


def _law_add_identity(A, B, C, S):
    return aa.ewise_add(A, aa.zeros(), S) == A


def _law_mult_identity(A, B, C, S):
    return aa.ewise_mult(A, _ones_on(A, S), S) == A


def _law_matmul_identity(A, B, C, S):
    return aa.matmul(A, aa.identity(list(KEYS), S), S) == A


def _law_mult_annihilator(A, B, C, S):
    return aa.ewise_mult(A, aa.zeros(), S) == aa.zeros()


def _law_matmul_annihilator(A, B, C, S):
    return aa.matmul(A, aa.zeros(), S) == aa.zeros()


LAWS = {
    "add-commutative": _law_add_comm,
    "mult-commutative": _law_mult_comm,
    "matmul-transpose": _law_matmul_transpose,
    "add-associative": _law_add_assoc,
    "mult-associative": _law_mult_assoc,
    "matmul-associative": _law_matmul_assoc,
    "kron-associative": _law_kron_assoc,
    "mult-distributes": _law_mult_dist,
    "matmul-distributes": _law_matmul_dist,
    "kron-distributes": _law_kron_dist,
    "add-identity": _law_add_identity,
    "mult-identity": _law_mult_identity,
    "matmul-identity": _law_matmul_identity,
    "mult-annihilator": _law_mult_annihilator,
    "matmul-annihilator": _law_matmul_annihilator,
}


@dataclass
class LawReport:
    trials: int
    seed: int
    violations: dict[tuple[str, str], int] = field(default_factory=dict)
    first_failure: dict[tuple[str, str], tuple] = field(default_factory=dict)

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    @property
    def ok(self) -> bool:
        return self.total_violations == 0

    def lines(self) -> list[str]:
        out = []
        for (law, sr), n in sorted(self.violations.items()):
            status = "PASS" if n == 0 else "FAIL"
            out.append(f"{status}\t{sr}\t{law}\t{n}/{self.trials}")
        return out


def check_laws(trials: int = 1000, seed: int = 0, semirings=None, laws=None) -> LawReport:
    """Run every law ``trials`` times per semiring; count violations."""
    semirings = list(REGISTRY.values()) if semirings is None else list(semirings)
    laws = LAWS if laws is None else {k: LAWS[k] for k in laws}
    report = LawReport(trials, seed)
    rng = random.Random(seed)
    for S in semirings:
        for name, law in laws.items():
            bad = 0
            for _ in range(trials):
                A, B, C = (random_array(rng, S) for _ in range(3))
                if not law(A, B, C, S):
                    bad += 1
                    report.first_failure.setdefault((name, S.id), (A, B, C))
            report.violations[(name, S.id)] = bad
    return report
