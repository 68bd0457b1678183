import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errdet import autodiff as ad
from errdet.errors import ContractError, LabelError, ShapeError


def test_matvec_identity():
    w = ad.Tensor(np.eye(2))
    x = ad.Tensor([3.0, 4.0])
    assert np.array_equal(ad.matvec(w, x).data, [3.0, 4.0])


def test_matvec_hand_arithmetic():
    w = ad.parameter([[1.0, 2.0], [3.0, 4.0]])
    x = ad.parameter([1.0, 1.0])
    with ad.Graph():
        y = ad.matvec(w, x)
        loss = ad.reduce_sum(y)
    assert np.array_equal(y.data, [3.0, 7.0])
    ad.backward(loss)
    # d sum(Wx)/dW = ones outer x; d/dx = column sums of W
    assert np.array_equal(w.grad, [[1.0, 1.0], [1.0, 1.0]])
    assert np.array_equal(x.grad, [4.0, 6.0])


def test_matvec_zero_matrix_annihilates():
    w = ad.Tensor(np.zeros((3, 2)))
    x = ad.parameter([5.0, -1.0])
    with ad.Graph():
        y = ad.matvec(w, x)
        loss = ad.reduce_sum(y)
    assert np.array_equal(y.data, np.zeros(3))
    ad.backward(loss)
    assert np.array_equal(x.grad, np.zeros(2))


def test_matvec_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as err:
        ad.matvec(ad.Tensor(np.zeros((2, 3))), ad.Tensor(np.zeros(4)))
    assert "(2, 3)" in str(err.value) and "(4,)" in str(err.value)


def test_elementwise_symmetry_points():
    assert ad.tanh(ad.Tensor([0.0])).data[0] == 0.0
    assert ad.sigmoid(ad.Tensor([0.0])).data[0] == 0.5


def test_concat_definition():
    out = ad.concat([ad.Tensor([1.0, 2.0]), ad.Tensor([3.0])])
    assert np.array_equal(out.data, [1.0, 2.0, 3.0])


def test_mul_product_rule():
    a = ad.parameter([2.0, 3.0])
    b = ad.parameter([4.0, 5.0])
    with ad.Graph():
        out = ad.mul(a, b)
        loss = ad.reduce_sum(out)
    assert np.array_equal(out.data, [8.0, 15.0])
    ad.backward(loss)
    assert np.array_equal(a.grad, [4.0, 5.0])
    assert np.array_equal(b.grad, [2.0, 3.0])


def test_add_shape_mismatch():
    with pytest.raises(ShapeError):
        ad.add(ad.Tensor([1.0]), ad.Tensor([1.0, 2.0]))


def test_softmax_xent_uniform_case():
    probs, loss = ad.softmax_xent(ad.Tensor([0.0, 0.0]), 0)
    assert np.allclose(probs.data, [0.5, 0.5])
    assert math.isclose(loss.item(), math.log(2.0), rel_tol=1e-12)


def test_softmax_xent_saturated_case():
    _, loss = ad.softmax_xent(ad.Tensor([10.0, -10.0]), 0)
    assert loss.item() < 1e-8


def test_softmax_xent_scalar_formula():
    # oracle: p1 = e^2/(e^1+e^2), loss = -ln p1
    probs, loss = ad.softmax_xent(ad.Tensor([1.0, 2.0]), 1)
    p1 = math.exp(2.0) / (math.exp(1.0) + math.exp(2.0))
    assert math.isclose(probs.data[0], 1.0 - p1, rel_tol=1e-12)
    assert math.isclose(probs.data[1], p1, rel_tol=1e-12)
    assert math.isclose(loss.item(), -math.log(p1), rel_tol=1e-12)
    assert math.isclose(loss.item(), 0.3132616875182228, rel_tol=1e-12)


def test_softmax_xent_backward_is_probs_minus_onehot():
    logits = ad.parameter([0.3, -1.2, 2.0])
    with ad.Graph():
        probs, loss = ad.softmax_xent(logits, 2)
    ad.backward(loss)
    expected = probs.data.copy()
    expected[2] -= 1.0
    assert np.allclose(logits.grad, expected, atol=1e-15)


def test_softmax_xent_gold_out_of_range():
    with pytest.raises(LabelError):
        ad.softmax_xent(ad.Tensor([0.0, 0.0]), 2)


@given(st.lists(st.floats(min_value=-300, max_value=300), min_size=2, max_size=8))
def test_softmax_is_distribution(logits):
    probs, _ = ad.softmax_xent(ad.Tensor(logits), 0)
    assert (probs.data >= 0.0).all()
    assert abs(probs.data.sum() - 1.0) <= 1e-12


def test_backward_linear_case():
    x = ad.parameter([1.0, 2.0, 3.0])
    with ad.Graph():
        loss = ad.reduce_sum(x)
    ad.backward(loss)
    assert np.array_equal(x.grad, [1.0, 1.0, 1.0])


def test_backward_chain_rule():
    x = ad.parameter([1.0, -2.0])
    with ad.Graph():
        loss = ad.reduce_sum(ad.mul(x, x))
    ad.backward(loss)
    assert np.array_equal(x.grad, [2.0, -4.0])


def test_backward_accumulates_over_fanout():
    x = ad.parameter([1.0, 1.0, 1.0])
    with ad.Graph():
        loss = ad.add(ad.reduce_sum(x), ad.reduce_sum(x))
    ad.backward(loss)
    assert np.array_equal(x.grad, [2.0, 2.0, 2.0])


def test_backward_rejects_non_scalar():
    x = ad.parameter([1.0, 2.0])
    with ad.Graph():
        y = ad.mul(x, x)
    with pytest.raises(ContractError):
        ad.backward(y)


def test_backward_requires_graph():
    x = ad.parameter(np.asarray(3.0))
    with pytest.raises(ContractError):
        ad.backward(x)


@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=6))
@settings(max_examples=50)
def test_fanout_matches_duplicated_parameter_construction(values):
    # f(x, x) must receive the summed gradients of f(x1, x2) at x1 = x2 = x
    x = ad.parameter(values)
    with ad.Graph():
        loss = ad.reduce_sum(ad.mul(ad.tanh(x), x))
    ad.backward(loss)

    x1 = ad.parameter(values)
    x2 = ad.parameter(values)
    with ad.Graph():
        loss2 = ad.reduce_sum(ad.mul(ad.tanh(x1), x2))
    ad.backward(loss2)
    assert np.allclose(x.grad, x1.grad + x2.grad, atol=1e-12)


def test_determinism_bitwise():
    rng = np.random.default_rng(7)
    w_data = rng.normal(size=(4, 3))
    x_data = rng.normal(size=3)

    def run():
        w = ad.parameter(w_data.copy())
        x = ad.parameter(x_data.copy())
        with ad.Graph():
            h = ad.tanh(ad.matvec(w, x))
            _, loss = ad.softmax_xent(ad.concat([h, ad.sigmoid(h)]), 3)
        ad.backward(loss)
        return loss.item(), w.grad.copy(), x.grad.copy()

    l1, wg1, xg1 = run()
    l2, wg2, xg2 = run()
    assert l1 == l2
    assert np.array_equal(wg1, wg2) and np.array_equal(xg1, xg2)


def test_slice_row_gather_stack_backward():
    m = ad.parameter(np.arange(12.0).reshape(4, 3))
    with ad.Graph():
        r = ad.row(m, 1)
        g = ad.gather_rows(m, [0, 0, 2])
        loss = ad.add(ad.reduce_sum(r), ad.reduce_sum(g))
    ad.backward(loss)
    expected = np.zeros((4, 3))
    expected[1] += 1.0
    expected[0] += 2.0
    expected[2] += 1.0
    assert np.array_equal(m.grad, expected)

    v = ad.parameter([1.0, 2.0, 3.0, 4.0])
    with ad.Graph():
        part = ad.vslice(v, 1, 3)
        loss = ad.reduce_sum(ad.mul(part, part))
    ad.backward(loss)
    assert np.array_equal(v.grad, [0.0, 4.0, 6.0, 0.0])

    vs = [ad.parameter([1.0, 2.0]), ad.parameter([3.0, 4.0])]
    with ad.Graph():
        stacked = ad.stack_rows(vs)
        loss = ad.reduce_sum(ad.matmul(stacked, stacked, transpose_b=True))
    ad.backward(loss)
    assert vs[0].grad is not None and vs[1].grad is not None


def test_grad_check_linear_model_is_nearly_exact():
    rng = np.random.default_rng(3)
    w = ad.parameter(rng.normal(size=(3, 4)))
    x = rng.normal(size=4)

    def f():
        return ad.reduce_sum(ad.matvec(w, ad.Tensor(x)))

    report = ad.grad_check(f, {"w": w}, eps=1e-5, tol=1e-4)
    assert report.max_rel_error < 1e-9


def test_grad_check_reports_worst_entry():
    w = ad.parameter(np.ones((2, 2)))

    def f():
        return ad.reduce_sum(ad.mul(ad.matvec(w, ad.Tensor([1.0, 2.0])),
                                    ad.matvec(w, ad.Tensor([0.5, -1.0]))))

    report = ad.grad_check(f, {"w": w})
    assert report.passed
    assert report.worst_param == "w"
    assert report.worst_index is not None
    assert "PASS" in str(report)
