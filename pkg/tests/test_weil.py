import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from azumaya.errors import ShapeError, ValidationError
from azumaya.expr import Binary, Pow, Var, parse
from azumaya.jets import Jet, WeilTuple, jet_arith, multi_indices, split
from azumaya.weil import eval_on_weil
from oracles import convolve, forward_jet
from strategies import exprs, jets, polys

t1 = lambda k, m=1: Jet.generator(1, m, k)  # noqa: E731


def test_multi_indices_graded():
    idx = multi_indices(2, 2)
    assert idx[0] == (0, 0)
    assert [sum(d) for d in idx] == sorted(sum(d) for d in idx)
    assert len(idx) == 6 and len(multi_indices(3, 4)) == 35


# ------------------------------------------------------------ jet_arith

def test_square_of_generator_vanishes_at_order_one():
    assert jet_arith("mul", t1(1), t1(1)) == Jet(1, 1)


def test_difference_of_squares():
    one = Jet.constant(1.0, 1, 2)
    got = jet_arith("mul", one + t1(2), one - t1(2))
    assert got == Jet.from_dict({(0,): 1.0, (2,): -1.0}, 1, 2)


def test_mul_matches_convolution_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = Jet(2, 3, rng.normal(size=10))
        b = Jet(2, 3, rng.normal(size=10))
        assert jet_arith("mul", a, b).allclose(convolve(a, b), rtol=1e-13, atol=1e-13)


def test_add_sub_scalar():
    a = Jet.from_dict({(0, 0): 1.0, (1, 0): 2.0}, 2, 2)
    b = Jet.from_dict({(0, 1): 3.0, (1, 1): -1.0}, 2, 2)
    assert jet_arith("sub", jet_arith("add", a, b), b) == a
    assert jet_arith("scalar", a, -2.0).coeff((1, 0)) == -4.0


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        jet_arith("mul", Jet(1, 2), Jet(1, 3))
    with pytest.raises(ShapeError):
        jet_arith("add", Jet(2, 2), Jet(1, 2))
    with pytest.raises(ShapeError):
        jet_arith("scalar", Jet(1, 2), Jet(1, 2))
    with pytest.raises(ValidationError):
        jet_arith("div", Jet(1, 2), Jet(1, 2))


def test_no_index_above_order():
    with pytest.raises(ShapeError):
        Jet.from_dict({(3,): 1.0}, 1, 2)
    assert all(sum(d) <= 3 for d in (t1(3, 2) ** 5).indices)


@settings(max_examples=100, deadline=None)
@given(jets(2, 3), jets(2, 3), jets(2, 3))
def test_ring_axioms(a, b, c):
    assert ((a * b) * c).allclose(a * (b * c), rtol=1e-9, atol=1e-9)
    assert (a * (b + c)).allclose(a * b + a * c, rtol=1e-9, atol=1e-9)
    assert (a * b).allclose(b * a, rtol=1e-12, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.data())
def test_soul_is_nilpotent(m, k, data):
    a = data.draw(jets(m, k))
    assert split(a)[1] ** (k + 1) == Jet(m, k)


# ------------------------------------------------------------ split

def test_split_scalar():
    body, soul = split(Jet.constant(5.0, 1, 2))
    assert body == 5.0 and soul == Jet(1, 2)


def test_split_affine():
    body, soul = split(Jet.from_dict({(0,): 2.0, (1,): 3.0}, 1, 2))
    assert body == 2.0 and soul == Jet.from_dict({(1,): 3.0}, 1, 2)


@settings(max_examples=50)
@given(jets(3, 2))
def test_split_recombines_exactly(a):
    body, soul = split(a)
    assert soul + body == a
    assert soul.body == 0.0


# ------------------------------------------------------------ eval_on_weil

def test_coordinate_is_identity():
    a = Jet(2, 3, np.arange(10.0))
    assert eval_on_weil(parse("y1", 1), [a]) == a


def test_exp_of_generator():
    got = eval_on_weil(parse("exp(y1)", 1), [t1(2)])
    assert np.allclose(got.coeffs, [1.0, 1.0, 0.5], rtol=0, atol=1e-15)


def test_product_of_coordinates_matches_jet_product():
    rng = np.random.default_rng(1)
    for _ in range(10):
        j1, j2 = Jet(2, 3, rng.normal(size=10)), Jet(2, 3, rng.normal(size=10))
        assert eval_on_weil(parse("y1*y2", 2), [j1, j2]).allclose(j1 * j2, rtol=1e-10, atol=1e-10)


def test_body_is_point_value():
    a = [Jet.generator(1, 2, 3, body=0.3), Jet.generator(2, 2, 3, body=-0.2) * 2.0]
    f = parse("sin(y1*y2) + exp(y2)", 2)
    assert eval_on_weil(f, a).body == pytest.approx(np.sin(0.3 * -0.4) + np.exp(-0.4), abs=1e-15)


def test_weil_tuple_shapes():
    with pytest.raises(ShapeError):
        WeilTuple((Jet(1, 2), Jet(1, 3)))
    with pytest.raises(ShapeError):
        WeilTuple(())


@settings(max_examples=60, deadline=None)
@given(exprs(2, max_leaves=6, smooth_only=True), st.data())
def test_eval_matches_forward_mode(h, data):
    a = [data.draw(jets(2, 3)), data.draw(jets(2, 3))]
    assert eval_on_weil(h, a).allclose(forward_jet(h, a), rtol=1e-8, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(exprs(2, max_leaves=5, smooth_only=True), exprs(2, max_leaves=5, smooth_only=True), st.data())
def test_ring_homomorphism_in_h(h1, h2, data):
    a = [data.draw(jets(2, 3)), data.draw(jets(2, 3))]
    e1, e2 = eval_on_weil(h1, a), eval_on_weil(h2, a)
    assert eval_on_weil(h1 + h2, a).allclose(e1 + e2, rtol=1e-9, atol=1e-9)
    assert eval_on_weil(h1 * h2, a).allclose(e1 * e2, rtol=1e-9, atol=1e-9)


def _poly_on_jets(h, jets_):
    """Evaluate a polynomial expression with jet arithmetic only."""
    if isinstance(h, Var):
        return jets_[h.index - 1]
    if isinstance(h, Pow):
        return _poly_on_jets(h.base, jets_) ** h.exponent
    if isinstance(h, Binary):
        a, b = _poly_on_jets(h.left, jets_), _poly_on_jets(h.right, jets_)
        return jet_arith(h.op, a, b)
    return Jet.constant(h.value, jets_[0].m, jets_[0].k)


def _compose(h, inner):
    if isinstance(h, Var):
        return inner[h.index - 1]
    if isinstance(h, Pow):
        return Pow(_compose(h.base, inner), h.exponent)
    if isinstance(h, Binary):
        return Binary(h.op, _compose(h.left, inner), _compose(h.right, inner))
    return h


@settings(max_examples=60, deadline=None)
@given(polys(2, max_leaves=6), exprs(2, max_leaves=4, smooth_only=True),
       exprs(2, max_leaves=4, smooth_only=True), st.data())
def test_composition_law(h, f1, f2, data):
    a = [data.draw(jets(2, 3)), data.draw(jets(2, 3))]
    lhs = eval_on_weil(_compose(h, (f1, f2)), a)
    rhs = _poly_on_jets(h, [eval_on_weil(f1, a), eval_on_weil(f2, a)])
    scale = 1 + np.abs(rhs.coeffs).max()
    assert np.allclose(lhs.coeffs, rhs.coeffs, rtol=1e-9, atol=1e-9 * scale)


# ------------------------------------------------------------ serialization

@settings(max_examples=30)
@given(jets(2, 3))
def test_json_round_trip(a):
    assert Jet.from_json(json.loads(json.dumps(a.to_json()))) == a


def test_json_malformed():
    with pytest.raises(ValidationError):
        Jet.from_json({"m": 1, "coeffs": []})
