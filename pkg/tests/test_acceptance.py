"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed at the end of the
pytest run (and immediately when run with ``-s``).  Run standalone with
``python3 tests/test_acceptance.py``.
"""

import functools
import math
import random
import time

import numpy as np
import pytest

from exactdnn import array as aa
from exactdnn import builders, dnn, perturb
from exactdnn.array import AssociativeArray
from exactdnn.bundle import (QuantSpec, make_bundle, quantize, read_bundle, verify_bundle,
                             write_bundle)
from exactdnn.laws import check_laws
from exactdnn.plan import LayerPlan
from exactdnn.semiring import PLUS_TIMES

from conftest import FOUR_SET_PLAN, NARROW_EDGE_PLAN
from oracles import cross_product_keys, random_model

RESULTS: dict[int, str] = {}
GRID = perturb.parse_grid("0:2:0.001")


def criterion(number, title):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                line = f"criterion {number} FAIL  {title}: {type(exc).__name__}: {exc}"
                RESULTS[number] = line.splitlines()[0]
                print(RESULTS[number])
                raise
            RESULTS[number] = f"criterion {number} PASS  {title}" + (f" ({detail})" if detail else "")
            print(RESULTS[number])
        return wrapper
    return deco


def synthetic_images(n=12, seed=3):
    rng = np.random.default_rng(seed)
    return (rng.random((n, 28, 28)) > 0.75).astype(float), [i % 10 for i in range(n)]


@pytest.fixture(scope="module")
def exact_models():
    w3, w4 = builders.shipped_words(3), builders.shipped_words(4)
    sets4 = builders.uniform_feature_sets(4, 2)
    imgs, labels = synthetic_images()
    image_model, _ = builders.build_from_images(imgs, labels)
    return {
        "combinatoric 4x2, 2 layers": builders.build_combinatoric(sets4, FOUR_SET_PLAN),
        "selective 2-letter": builders.build_selective(builders.TWO_LETTER_WORDS),
        "selective 3-letter, 1 layer": builders.build_selective(w3),
        "selective 3-letter, 2 layers": builders.build_selective(w3, LayerPlan.sliding(3)),
        "selective 4-letter, 1 layer": builders.build_selective(w4),
        "selective 4-letter, 2 layers": builders.build_selective(w4, FOUR_SET_PLAN),
        "selective 4-letter, 3 layers": builders.build_selective(w4, LayerPlan.sliding(4)),
        "selective 4-letter, 3 layers (narrow edges)": builders.build_selective(w4, NARROW_EDGE_PLAN),
        "images, 12 synthetic": image_model,
    }


@criterion(1, "exact input yields the identity")
def test_criterion_1_exactness(exact_models):
    start = time.perf_counter()
    for name, m in exact_models.items():
        Y = dnn.infer_relu(m, dnn.exact_input(m))
        assert Y == aa.identity(m.category_keys), name
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.3f} s"
    return f"{len(exact_models)} models, {elapsed * 1000:.0f} ms"


@criterion(2, "two-semiring inference equals ReLU inference")
def test_criterion_2_semiring_equivalence():
    rng = random.Random(2024)
    entries = 0
    for i in range(500):
        model, Y0, samples = random_model(rng, max_depth=4, max_width=20)
        a, b = dnn.infer_semiring(model, Y0, samples), dnn.infer_relu(model, Y0, samples)
        assert a == b, f"model {i}"
        entries += len(a)
    return f"500 models, {entries} output entries compared"


@criterion(3, "collapsed recursion equals layered inference")
def test_criterion_3_collapse(exact_models):
    for name, m in exact_models.items():
        W, b = dnn.collapse(m)
        Y0 = dnn.exact_input(m)
        got = aa.select(dnn.infer_collapsed(W, b, Y0, m.depth), m.category_keys)
        assert got == dnn.infer_relu(m, Y0), name
    return f"{len(exact_models)} models"


@criterion(4, "flattening reproduces the single-layer construction")
def test_criterion_4_flatten(exact_models):
    w3, w4 = builders.shipped_words(3), builders.shipped_words(4)
    single = {
        "combinatoric": builders.build_combinatoric(builders.uniform_feature_sets(4, 2)),
        "3": builders.build_selective(w3),
        "4": builders.build_selective(w4),
    }
    checked = 0
    for name, m in exact_models.items():
        flat = dnn.flatten(m)
        path = m.layers[0].W
        for layer in m.layers[1:]:
            path = aa.matmul(layer.W, path, PLUS_TIMES)
        assert aa.zero_norm(path) == flat, name
        if m.depth > 1:
            key = "combinatoric" if name.startswith("combinatoric") else name.split("-")[0][-1]
            assert flat == single[key].layers[0].W, name
            checked += 1
    return f"{checked} multi-layer models"


@criterion(5, "algebraic laws hold on every semiring")
def test_criterion_5_laws():
    rep = check_laws(trials=1000, seed=42)
    assert rep.ok, [k for k, n in rep.violations.items() if n]
    return f"{len(rep.violations)} law/semiring pairs x 1000 trials, 0 violations"


def _perturbation_cases():
    two = builders.build_selective(builders.TWO_LETTER_WORDS)
    comb2 = builders.build_combinatoric(builders.uniform_feature_sets(4, 2), FOUR_SET_PLAN)
    cases = [(two.rebias(0.0), "at", "1a"), (comb2.rebias([0.8, 1.0]), "1a2a3a4a", "1a")]
    w3, w4 = builders.shipped_words(3), builders.shipped_words(4)
    pool = [
        two,
        comb2,
        builders.build_combinatoric(builders.uniform_feature_sets(3, 3)),
        builders.build_selective(w3),
        builders.build_selective(w3, LayerPlan.sliding(3)),
        builders.build_selective(w4, FOUR_SET_PLAN),
        builders.build_selective(w4, LayerPlan.sliding(4)),
        builders.build_selective(w4, NARROW_EDGE_PLAN),
    ]
    rng = random.Random(6)
    for _ in range(80):
        base = rng.choice(pool)
        m = base.rebias([rng.choice([0.0, 0.5, 0.8, 1.0]) for _ in range(base.depth)])
        c = rng.choice(m.category_keys)
        f = rng.choice(perturb.sub_dnn_category(m, c).input_keys)
        cases.append((m, c, f))
    return cases


@pytest.fixture(scope="module")
def sweeps():
    start = time.perf_counter()
    reports = [perturb.sweep(m, c, f, GRID) for m, c, f in _perturbation_cases()]
    return reports, time.perf_counter() - start


@criterion(6, "closed-form threshold agrees with the sweep")
def test_criterion_6_threshold(sweeps):
    reports, elapsed = sweeps
    left, right = reports[0], reports[1]
    assert left.r_d_closed == 1.0 and abs(left.r_d_empirical - 1.0) <= 1e-3
    assert abs(right.r_d_closed - 0.4) < 1e-12 and abs(right.r_d_empirical - 0.4) <= 1e-3
    for rep in reports:
        assert rep.agrees(1e-3), (rep.category, rep.feature, rep.r_d_closed, rep.r_d_empirical)
        assert rep.is_unit_step(), (rep.category, rep.feature)
    assert elapsed < 10.0, f"took {elapsed:.2f} s"
    outside = sum(math.isinf(r.r_d_empirical) for r in reports)
    assert len(reports) - 2 - outside >= 50, "fewer than 50 random pairs step inside the grid"
    return (f"2 reference + {len(reports) - 2} random pairs, {outside} with the step beyond r=2, "
            f"{elapsed:.2f} s")


@criterion(7, "no false alarms anywhere on the grid")
def test_criterion_7_false_alarms(sweeps):
    reports, _ = sweeps
    for rep in reports:
        assert not any(rep.pfa), (rep.category, rep.feature)
    return f"{len(reports)} sweeps x {len(GRID)} points"


@criterion(8, "category count grows as the product of set sizes")
def test_criterion_8_growth():
    counts = []
    for m in (2, 3, 4):
        for k in (2, 3):
            sets = builders.uniform_feature_sets(m, k)
            model = builders.build_combinatoric(sets)
            direct = len(model.category_keys)
            assert direct == k ** m == len(set(cross_product_keys(sets)))
            assert model.category_keys == sorted(cross_product_keys(sets))
            counts.append(direct)
    return "counts " + ",".join(map(str, counts))


@criterion(9, "bundles round-trip, detect corruption and hold quantized outputs")
def test_criterion_9_bundles(exact_models, tmp_path):
    for i, (name, m) in enumerate(exact_models.items()):
        b = make_bundle(m.rebias(0.8), 6)
        write_bundle(b, tmp_path / str(i))
        assert read_bundle(tmp_path / str(i)) == b, name
    two = exact_models["selective 2-letter"]
    b = make_bundle(two)
    bad = dict(b.expected.to_dict())
    bad[("at", "at")] = 2.0
    rep = verify_bundle(b, AssociativeArray(bad))
    assert len(rep.mismatches) == 1 and not rep.ok
    # single-layer models at beta = 0.8: quantized bundle output equals the
    # rounded output of the unquantized model
    single = [m for m in exact_models.values() if m.depth == 1]
    for m in single:
        m = m.rebias(0.8)
        exact_out = make_bundle(m).expected
        for bits in range(4, 17):
            q = QuantSpec(bits)
            assert make_bundle(m, q).expected == quantize(exact_out, q)
    # every model: re-running the quantized bundle reproduces its expected output
    for m in exact_models.values():
        for bits in (4, 8, 12):
            b = make_bundle(m.rebias(0.8), bits)
            assert quantize(dnn.infer_relu(b.model, b.y0, b.samples), b.precision) == b.expected
    return f"{len(single)} single-layer models at 4-16 bits"


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
