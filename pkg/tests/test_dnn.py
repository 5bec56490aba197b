import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactdnn import array as aa
from exactdnn import builders, dnn
from exactdnn.array import AssociativeArray
from exactdnn.dnn import BIAS_COL, DnnModel, Layer, StructureError

from oracles import dense_forward, random_model, reachable_features


def col(entries):
    return AssociativeArray({(k, "s"): v for k, v in entries.items()})


# -- bias -----------------------------------------------------------------------

def test_make_bias_examples():
    W = aa.build(["at", "at", "be"], ["1a", "2t", "1b"], 1.0)
    assert dnn.make_bias(W, 1.0).to_dict() == {("at", BIAS_COL): -1.0}  # be: 1-1 = 0 elided
    assert dnn.make_bias(W, 0.0).to_dict() == {("at", BIAS_COL): -2.0, ("be", BIAS_COL): -1.0}
    assert dnn.make_bias(W, 0.8).get("at", BIAS_COL) == pytest.approx(-1.2)


@pytest.mark.parametrize("beta", [-0.1, 1.5])
def test_make_bias_rejects_beta_out_of_range(beta):
    with pytest.raises(ValueError):
        dnn.make_bias(aa.identity(["a"]), beta)


def test_make_bias_rejects_non_binary_weights():
    with pytest.raises(ValueError):
        dnn.make_bias(AssociativeArray({("a", "x"): 2.0}), 1.0)


def test_replicate_bias_examples():
    b = AssociativeArray({("at", BIAS_COL): -1})
    Y = AssociativeArray({("1a", "s1"): 1, ("2t", "s2"): 1})
    assert dnn.replicate_bias(b, Y).to_dict() == {("at", "s1"): -1.0, ("at", "s2"): -1.0}
    assert len(dnn.replicate_bias(b, aa.zeros())) == 0
    assert dnn.replicate_bias(b, ["only"]).to_dict() == {("at", "only"): -1.0}


# -- inference --------------------------------------------------------------------

def test_single_word_forward_pass(two_letter):
    y = dnn.infer_relu(two_letter, col({"1a": 1, "2t": 1}))
    assert y.to_dict() == {("at", "s"): 1.0}


def test_empty_input_gives_empty_output(two_letter):
    assert len(dnn.infer_relu(two_letter, aa.zeros())) == 0
    assert len(dnn.infer_semiring(two_letter, aa.zeros())) == 0


def test_exact_input_gives_identity(two_letter):
    Y0 = dnn.exact_input(two_letter)
    assert dnn.infer_relu(two_letter, Y0) == aa.identity(two_letter.category_keys)
    assert dnn.infer_semiring(two_letter, Y0) == aa.identity(two_letter.category_keys)


def test_negative_preactivation_is_dropped():
    model = DnnModel([Layer(aa.identity(["a"]), AssociativeArray({("a", BIAS_COL): -1.5}), None)])
    Y = dnn.infer_semiring(model, col({"a": 1.0}))
    assert len(Y) == 0


def test_positive_bias_fires_on_empty_rows():
    model = DnnModel([Layer(AssociativeArray({("a", "x"): 1.0, ("c", "x"): 1.0}),
                            AssociativeArray({("b", BIAS_COL): 0.5}), None)])
    Y0 = AssociativeArray({("x", "s1"): 1.0, ("x", "s2"): 2.0})
    want = {("a", "s1"): 1.0, ("a", "s2"): 2.0, ("b", "s1"): 0.5, ("b", "s2"): 0.5,
            ("c", "s1"): 1.0, ("c", "s2"): 2.0}
    assert dnn.infer_relu(model, Y0).to_dict() == want
    assert dnn.infer_semiring(model, Y0).to_dict() == want


def test_foreign_input_rows_are_ignored(two_letter, caplog):
    with caplog.at_level("INFO"):
        y = dnn.infer_relu(two_letter, col({"1a": 1, "2t": 1, "9q": 5}))
    assert y.to_dict() == {("at", "s"): 1.0}
    assert "dropping 1 input rows" in caplog.text


def test_relu_matches_dense_oracle_on_random_models():
    rng = random.Random(5)
    for _ in range(100):
        model, Y0, samples = random_model(rng)
        keys, dense = dense_forward(model, Y0, samples)
        got = dnn.infer_relu(model, Y0, samples).to_dense(keys, samples)
        np.testing.assert_allclose(got, dense, rtol=1e-12, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_semiring_route_equals_relu_route(seed):
    model, Y0, samples = random_model(random.Random(seed))
    assert dnn.infer_semiring(model, Y0, samples) == dnn.infer_relu(model, Y0, samples)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_relu_output_is_nonnegative_and_sparse(seed):
    model, Y0, samples = random_model(random.Random(seed))
    assert all(v > 0.0 for _, _, v in dnn.infer_relu(model, Y0, samples))


# -- collapse --------------------------------------------------------------------

def test_collapse_single_layer_is_identity_op(two_letter):
    W, b = dnn.collapse(two_letter)
    assert W == two_letter.layers[0].W and b == two_letter.layers[0].b


def test_collapse_combinatoric_rows(comb2):
    W, _ = dnn.collapse(comb2)
    pairs = set(comb2.layers[0].W.row_keys())
    quads = set(comb2.category_keys)
    assert set(W.row_keys()) == pairs | quads
    assert len(pairs) == 8 and len(quads) == 16


def test_collapsed_recursion_on_combinatoric(comb2):
    W, b = dnn.collapse(comb2)
    Y0 = dnn.exact_input(comb2)
    Y = dnn.infer_collapsed(W, b, Y0, 2)
    assert aa.select(Y, comb2.category_keys) == aa.identity(comb2.category_keys)
    # after one step only first-layer neurons are populated
    Y1 = dnn.infer_collapsed(W, b, Y0, 1)
    assert set(Y1.row_keys()) <= set(comb2.layers[0].W.row_keys())


def test_collapse_detects_duplicate_neuron_keys():
    W0 = AssociativeArray({("h", "x"): 1.0})
    W1 = AssociativeArray({("h", "h"): 1.0})
    model = DnnModel([Layer(W0, aa.zeros(), None), Layer(W1, aa.zeros(), None)])
    with pytest.raises(StructureError):
        dnn.collapse(model)


def test_collapse_detects_input_key_reuse():
    model = DnnModel([Layer(AssociativeArray({("x", "x"): 1.0}), aa.zeros(), None)])
    with pytest.raises(StructureError):
        dnn.collapse(model)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_collapse_matches_layers_on_random_models(seed):
    model, Y0, samples = random_model(random.Random(seed))
    Y0 = aa.select(Y0, model.input_keys)
    W, b = dnn.collapse(model)
    got = aa.select(dnn.infer_collapsed(W, b, Y0, model.depth, samples), model.category_keys)
    # rows of layer t are correct after iteration t, whatever the sign of the biases
    assert got == aa.select(dnn.infer_relu(model, Y0, samples), model.category_keys)


# -- flatten ----------------------------------------------------------------------

def test_flatten_single_layer_is_w0(two_letter):
    assert dnn.flatten(two_letter) == two_letter.layers[0].W


def test_flatten_combinatoric_paths(comb2):
    F = dnn.flatten(comb2)
    assert len(F.row_keys()) == 16
    for c in comb2.category_keys:
        row = F.by_row[c]
        assert set(row) == reachable_features(comb2, c)
        assert len(row) == 4 and set(row.values()) == {1.0}


def test_flatten_three_layer_equals_one_layer(words4):
    deep = builders.build_selective(words4, "f1,f2|f2,f3|f3,f4;f12,f23|f23,f34;f123,f234")
    assert dnn.flatten(deep) == builders.build_selective(words4).layers[0].W


def test_flatten_rejects_real_weights():
    model = DnnModel([Layer(AssociativeArray({("a", "x"): 0.5}), aa.zeros(), None)])
    with pytest.raises(ValueError):
        dnn.flatten(model)


def test_exact_input_shapes(two_letter, comb1):
    Y0 = dnn.exact_input(two_letter)
    assert (len(Y0.row_keys()), len(Y0.col_keys())) == (33, 37)
    ident = builders.from_weights([aa.identity(["p", "q"])])
    assert dnn.exact_input(ident) == aa.identity(["p", "q"])
    assert all(len(c) == 2 for c in dnn.exact_input(comb1).by_col.values())


def test_rebias_changes_only_biases(two_letter):
    m = two_letter.rebias(0.5)
    assert m.weights() == two_letter.weights()
    assert m.betas == [0.5]
    assert m.layers[0].b.get("at", BIAS_COL) == -1.5


def test_flattened_model_keeps_argmax(comb2):
    flat = builders.from_weights([dnn.flatten(comb2)])
    Y0 = dnn.exact_input(comb2)
    deep, shallow = dnn.infer_relu(comb2, Y0), dnn.infer_relu(flat, Y0)
    for s in comb2.category_keys:
        d, f = deep.by_col[s], shallow.by_col[s]
        assert max(d, key=d.get) == max(f, key=f.get) == s
