import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitlab.errors import EvaluationError, ExprNameError, ExprParseError
from splitlab.expr import BinOp, Expression, Neg, Num, Var, evaluate, parse_expr, pretty, variables

from corpus import BUILTIN_FORMULAS, CORPUS


@pytest.mark.parametrize("src", CORPUS)
def test_round_trip_fixed_point(src):
    tree = parse_expr(src)
    text = pretty(tree)
    assert parse_expr(text) == tree
    assert pretty(parse_expr(text)) == text


def test_power_is_right_associative():
    assert evaluate(parse_expr("2^3^2")) == 512


def test_unary_minus_binds_looser_than_power():
    assert evaluate(parse_expr("-2^2")) == -4
    assert evaluate(parse_expr("(-2)^2")) == 4
    assert parse_expr("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))


def test_precedence_and_whitespace():
    assert parse_expr("1+2*3") == parse_expr("  1 + ( 2 * 3 ) ")
    assert evaluate(parse_expr("8/4/2")) == 1.0
    assert evaluate(parse_expr("1 - 2 - 3")) == -4


def test_vectorised_evaluation():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(evaluate(parse_expr("1 + sin(pi*x/2)"), x=x), 1 + np.sin(np.pi * x / 2))


def test_variables():
    assert variables(parse_expr(BUILTIN_FORMULAS[0])) == {"u", "x", "t"}


@pytest.mark.parametrize("src, offset", [("1 +", 3), ("(x", 2), ("x $ 2", 2), ("2 3", 2),
                                         ("sin x", 4), ("", 0)])
def test_parse_errors_carry_offset(src, offset):
    with pytest.raises(ExprParseError) as info:
        parse_expr(src)
    assert info.value.offset == offset
    assert info.value.expected


def test_unknown_identifier():
    with pytest.raises(ExprNameError) as info:
        parse_expr("z + 1")
    assert info.value.name == "z"


def test_scope_check():
    with pytest.raises(ExprNameError) as info:
        Expression("x*t", ("x",))
    assert info.value.name == "t"


def test_division_by_zero():
    with pytest.raises(EvaluationError):
        evaluate(parse_expr("1/(x - 0.5)"), x=np.array([0.25, 0.5]))


def test_unbound_variable_at_evaluation():
    with pytest.raises(ExprNameError):
        evaluate(parse_expr("x + y"), x=1.0)


def test_expression_pickles_by_source():
    e = Expression("exp(u)*x", ("t", "u", "x"))
    e2 = pickle.loads(pickle.dumps(e))
    assert e2(0.0, 1.0, 2.0) == e(0.0, 1.0, 2.0)
    assert e2.canonical() == "exp(u)*x"


_names = st.sampled_from(["x", "y", "t", "u", "pi", "2", "0.5", "1e-3"])


@st.composite
def _exprs(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(_names)
    kind = draw(st.sampled_from(["bin", "neg", "call", "paren"]))
    if kind == "bin":
        op = draw(st.sampled_from(["+", "-", "*", "/", "^"]))
        return f"{draw(_exprs(depth - 1))} {op} {draw(_exprs(depth - 1))}"
    if kind == "neg":
        return f"-{draw(_exprs(depth - 1))}"
    if kind == "call":
        return f"{draw(st.sampled_from(['sin', 'cos', 'exp', 'sqrt', 'abs']))}({draw(_exprs(depth - 1))})"
    return f"({draw(_exprs(depth - 1))})"


@settings(max_examples=200, deadline=None)
@given(_exprs())
def test_random_round_trip(src):
    tree = parse_expr(src)
    assert parse_expr(pretty(tree)) == tree
