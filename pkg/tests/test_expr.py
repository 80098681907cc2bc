import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogmove.expr import (BINARY_FUNCS, UNARY_FUNCS, BinOp, Call, Expression, ExpressionError, Name, Neg,
                          Num, evaluate, parse_expression, pretty)


def value(text, x=0.0, t=0.0):
    return float(Expression(text)(np.array([x]), t)[0])


def test_examples():
    assert value("sin(pi*x)", 0.5, 7.0) == pytest.approx(1.0, abs=1e-15)
    assert value("2*gauss(0.5,0.1)+1", 0.5) == pytest.approx(1 + 2 / (0.1 * math.sqrt(2 * math.pi)), rel=1e-15)
    assert value("2*gauss(0.5,0.1)+1", 0.5) == pytest.approx(8.9788, abs=1e-4)
    with pytest.raises(ExpressionError) as info:
        parse_expression("1+*2")
    assert info.value.offset == 2


@pytest.mark.parametrize("text, expected", [
    ("2^3^2", 512.0), ("-2^2", -4.0), ("2^-1", 0.5), ("8/4/2", 1.0), ("8-4-2", 2.0),
    ("1+2*3", 7.0), ("(1+2)*3", 9.0), ("--3", 3.0), ("e", math.e), ("abs(-2.5)", 2.5),
    ("sqrt(16)+log(e)", 5.0), ("exp(0)+cos(0)", 2.0), ("1.5e2", 150.0), (".5", 0.5),
])
def test_precedence_and_associativity(text, expected):
    assert value(text) == pytest.approx(expected, rel=1e-15)


def test_variables_and_broadcast():
    expr = Expression("x*t + 1")
    np.testing.assert_array_equal(expr(np.array([0.0, 1.0, 2.0]), 3.0), [1.0, 4.0, 7.0])
    np.testing.assert_array_equal(Expression("3")(np.zeros(4)), np.full(4, 3.0))


def test_tophat():
    expr = Expression("tophat(0.5, 0.25)")
    np.testing.assert_array_equal(expr(np.array([0.2, 0.3, 0.5, 0.75, 0.8])), [0, 2, 2, 2, 0])


@pytest.mark.parametrize("text, fragment", [
    ("sine(x)", "sin"), ("gaus(x, 1)", "gauss"), ("y + 1", "unknown identifier"),
    ("sin(x", r"expected '\)'"), ("gauss(1)", "takes 2"), ("sin", "needs arguments"), ("1 $ 2", "unexpected character"),
    ("", "unexpected end"),
])
def test_syntax_errors(text, fragment):
    with pytest.raises(ExpressionError, match=fragment):
        parse_expression(text)


@pytest.mark.parametrize("text", ["log(x)", "sqrt(x - 1)", "1/x", "gauss(0, 0)", "(0-1)^0.5"])
def test_domain_errors(text):
    with pytest.raises(ExpressionError):
        Expression(text)(np.array([0.0, 0.5]))


def test_rejects_non_text():
    with pytest.raises(ExpressionError):
        parse_expression(3.0)


numbers = st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num)
leaves = st.one_of(numbers, st.sampled_from(["x", "t", "pi", "e"]).map(Name))


def trees(depth):
    if depth <= 1:
        return leaves
    sub = trees(depth - 1)
    return st.one_of(
        leaves,
        sub.map(Neg),
        st.builds(BinOp, st.sampled_from("+-*/^"), sub, sub),
        st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(UNARY_FUNCS), sub),
        st.builds(lambda f, a, b: Call(f, (a, b)), st.sampled_from(BINARY_FUNCS), sub, sub),
    )


@settings(max_examples=1000, deadline=None)
@given(trees(6))
def test_pretty_round_trip(tree):
    assert parse_expression(pretty(tree)) == tree


def test_pretty_rejects_unprintable_literals():
    with pytest.raises(ExpressionError):
        pretty(Num(-1.0))
    assert evaluate(parse_expression(pretty(BinOp("*", Num(2.0), Name("x")))), 3.0) == 6.0
